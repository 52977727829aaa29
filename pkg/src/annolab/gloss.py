"""Phrase extraction and probability-ranked gloss suggestions.

A phrase table is built from symmetrized word alignments with the standard
consistency criterion, giving relative-frequency translation probabilities
for every extracted word or phrase. Suggestions are emitted word by word:
each source token gets a ranked candidate list from the phrase table, with
the lexical translation table as fallback and an "<unk>" sentinel for fully
unknown tokens so the caller always sees one row per word.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

from .align import (
    AlignConfig,
    Alignment,
    DistortionTable,
    TranslationTable,
    symmetrize,
    train_model1,
    train_model2,
    viterbi_align,
)
from .corpus import ParallelCorpus
from .errors import CorruptArtifact, EmptyCorpus, IndexOutOfBounds, LengthMismatch

UNK_GLOSS = "<unk>"
DEFAULT_MAX_PHRASE_LEN = 3

Span = tuple[str, ...]


class PhraseEntry(NamedTuple):
    e_span: Span
    phi_e_given_f: float
    phi_f_given_e: float
    count: float


class GlossCandidate(NamedTuple):
    gloss: tuple[str, ...]
    score: float


@dataclass
class GlossSuggestion:
    token_index: int
    candidates: list[GlossCandidate]
    covered_span: tuple[int, int]  # (start, len) over source tokens


class PhraseTable:
    """f_span -> candidates sorted by descending phi_e_given_f, ties lexicographic."""

    def __init__(self, max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN):
        self.max_phrase_len = max_phrase_len
        self.entries: dict[Span, list[PhraseEntry]] = {}

    def lookup(self, f_span: Span) -> list[PhraseEntry]:
        return self.entries.get(tuple(f_span), [])

    def __len__(self) -> int:
        return len(self.entries)

    def export(self) -> str:
        """TSV-style export: `f_span ||| e_span ||| phi_e_given_f phi_f_given_e count`."""
        lines = []
        for f_span in sorted(self.entries):
            for ent in self.entries[f_span]:
                lines.append(
                    f"{' '.join(f_span)} ||| {' '.join(ent.e_span)} ||| "
                    f"{ent.phi_e_given_f:.12g} {ent.phi_f_given_e:.12g} {ent.count:.12g}"
                )
        return "\n".join(lines) + "\n"


@dataclass
class GlossModel:
    phrase_table: PhraseTable
    translation_table: TranslationTable
    align_config: AlignConfig
    distortion_table: DistortionTable | None = None


def extract_phrases(
    pair: tuple[list[str], list[str]],
    alignment: Alignment,
    max_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> set[tuple[Span, Span]]:
    """All consistent phrase pairs with at least one internal link.

    A source span and target span are consistent when no alignment link
    connects a word inside either span to a word outside the other. Target
    spans grow over adjacent unaligned words, so a minimal pair yields every
    boundary extension up to max_len.
    """
    src, tgt = pair
    for i, j in alignment.links:
        if not (0 <= i < len(src) and 0 <= j < len(tgt)):
            raise IndexOutOfBounds(f"link ({i},{j}) outside {len(src)}x{len(tgt)} pair")

    aligned_e = {j for _, j in alignment.links}
    phrases = set()
    for fs in range(len(src)):
        for fe in range(fs, min(fs + max_len, len(src))):
            inside = [(i, j) for i, j in alignment.links if fs <= i <= fe]
            if not inside:
                continue
            emin = min(j for _, j in inside)
            emax = max(j for _, j in inside)
            # a link from the projected target range back outside the source
            # span makes every extension inconsistent
            if any(emin <= j <= emax and not fs <= i <= fe for i, j in alignment.links):
                continue
            es = emin
            while True:
                ee = emax
                while True:
                    if ee - es + 1 <= max_len:
                        phrases.add((tuple(src[fs : fe + 1]), tuple(tgt[es : ee + 1])))
                    ee += 1
                    if ee >= len(tgt) or ee in aligned_e:
                        break
                es -= 1
                if es < 0 or es in aligned_e:
                    break
    return phrases


def build_phrase_table(
    corpus: ParallelCorpus,
    alignments: list[Alignment],
    max_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> PhraseTable:
    """Accumulate extraction counts and convert to relative frequencies."""
    if len(alignments) != len(corpus.pairs):
        raise LengthMismatch(
            f"{len(alignments)} alignments for {len(corpus.pairs)} pairs"
        )
    counts: dict[tuple[Span, Span], float] = {}
    for pair, alignment in zip(corpus.pairs, alignments):
        for f_span, e_span in extract_phrases(pair, alignment, max_len):
            counts[(f_span, e_span)] = counts.get((f_span, e_span), 0.0) + 1.0

    f_totals: dict[Span, float] = {}
    e_totals: dict[Span, float] = {}
    for (f_span, e_span), c in counts.items():
        f_totals[f_span] = f_totals.get(f_span, 0.0) + c
        e_totals[e_span] = e_totals.get(e_span, 0.0) + c

    table = PhraseTable(max_len)
    for (f_span, e_span), c in counts.items():
        table.entries.setdefault(f_span, []).append(
            PhraseEntry(e_span, c / f_totals[f_span], c / e_totals[e_span], c)
        )
    for f_span in table.entries:
        table.entries[f_span].sort(key=lambda ent: (-ent.phi_e_given_f, ent.e_span))
    return table


def suggest_glosses(
    source_tokens: list[str], model: GlossModel, k: int = 5
) -> list[GlossSuggestion]:
    """One ranked suggestion per source token.

    Candidates come from the token's phrase-table entry (scored by
    phi_e_given_f, so multi-word glosses are possible); tokens without one
    fall back to the lexical table, and fully unknown tokens get a single
    "<unk>" candidate with score 0.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    suggestions = []
    for i, token in enumerate(source_tokens):
        entries = model.phrase_table.lookup((token,))
        if entries:
            candidates = [
                GlossCandidate(ent.e_span, ent.phi_e_given_f) for ent in entries[:k]
            ]
        else:
            lexical = model.translation_table.candidates(token)
            ranked = sorted(lexical.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
            candidates = [GlossCandidate((e,), p) for e, p in ranked]
        if not candidates:
            candidates = [GlossCandidate((UNK_GLOSS,), 0.0)]
        suggestions.append(GlossSuggestion(i, candidates, (i, 1)))
    return suggestions


def train_glosser(
    corpus: ParallelCorpus,
    cfg: AlignConfig | None = None,
    max_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> GlossModel:
    """Full pipeline: staged EM both directions, symmetrize, extract, count."""
    if not corpus.pairs:
        raise EmptyCorpus("parallel corpus has no pairs")
    cfg = cfg if cfg is not None else AlignConfig()

    t_fwd, _ = train_model1(corpus, cfg)
    t_fwd, q_fwd, _ = train_model2(corpus, cfg, t_fwd)

    reversed_corpus = ParallelCorpus([(tgt, src) for src, tgt in corpus.pairs])
    t_rev, _ = train_model1(reversed_corpus, cfg)
    t_rev, q_rev, _ = train_model2(reversed_corpus, cfg, t_rev)

    alignments = []
    for (src, tgt), rev_pair in zip(corpus.pairs, reversed_corpus.pairs):
        fwd = viterbi_align((src, tgt), t_fwd, q_fwd)
        rev = viterbi_align(rev_pair, t_rev, q_rev).transposed()
        alignments.append(symmetrize(fwd, rev, cfg.symmetrization))

    phrase_table = build_phrase_table(corpus, alignments, max_len)
    return GlossModel(phrase_table, t_fwd, cfg, q_fwd)


# --- artifact format: JSON ---

GLOSS_FORMAT_VERSION = 1


def serialize_gloss(model: GlossModel) -> bytes:
    payload = {
        "format_version": GLOSS_FORMAT_VERSION,
        "kind": "gloss",
        "align_config": model.align_config.to_dict(),
        "translation_table": sorted(model.translation_table.items()),
        "phrase_table": {
            "max_phrase_len": model.phrase_table.max_phrase_len,
            "entries": [
                [list(f_span), list(ent.e_span), ent.phi_e_given_f,
                 ent.phi_f_given_e, ent.count]
                for f_span in sorted(model.phrase_table.entries)
                for ent in model.phrase_table.entries[f_span]
            ],
        },
        "distortion_table": (
            None
            if model.distortion_table is None
            else {
                "use_null": model.distortion_table.use_null,
                "entries": sorted(
                    [list(key) + [p] for key, p in model.distortion_table.items()]
                ),
            }
        ),
    }
    return json.dumps(payload, sort_keys=True).encode("utf-8")


def deserialize_gloss(data: bytes) -> GlossModel:
    try:
        payload = json.loads(data.decode("utf-8"))
        if payload.get("format_version") != GLOSS_FORMAT_VERSION:
            raise CorruptArtifact(
                f"artifact format version {payload.get('format_version')}, "
                f"expected {GLOSS_FORMAT_VERSION}"
            )
        cfg = AlignConfig(**payload["align_config"])
        ttable = TranslationTable()
        for f, e, p in payload["translation_table"]:
            ttable.set(f, e, p)
        ptable = PhraseTable(payload["phrase_table"]["max_phrase_len"])
        for f_span, e_span, phi_ef, phi_fe, count in payload["phrase_table"]["entries"]:
            ptable.entries.setdefault(tuple(f_span), []).append(
                PhraseEntry(tuple(e_span), phi_ef, phi_fe, count)
            )
        for f_span in ptable.entries:
            ptable.entries[f_span].sort(key=lambda ent: (-ent.phi_e_given_f, ent.e_span))
        dtable = None
        if payload["distortion_table"] is not None:
            dtable = DistortionTable(payload["distortion_table"]["use_null"])
            for i, j, l, m, p in payload["distortion_table"]["entries"]:
                dtable.set(i, j, l, m, p)
    except CorruptArtifact:
        raise
    except Exception as exc:
        raise CorruptArtifact(f"cannot decode gloss artifact: {exc}") from exc
    return GlossModel(ptable, ttable, cfg, dtable)
