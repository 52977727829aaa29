"""Word alignment from parallel data: lexical and positional EM models.

Training is staged: the lexical model (translation probabilities only) runs
first and seeds the positional model, which adds a distortion distribution
q(i | j, l, m) over source positions. Both use exact EM with fractional
counts; there is no randomized initialization, so results are deterministic.

Conventions: t(e|f) conditions target words on source words; the optional
NULL token lets target words align to nothing and occupies source position 0
(real source words are 1-based in the distortion table, 0-based in Alignment
links).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import ParallelCorpus
from .errors import EmptyCorpus

NULL_TOKEN = "<null>"
PROB_FLOOR = 1e-12

SYMMETRIZATION_HEURISTICS = ("intersection", "union", "grow-diag-final")


@dataclass
class AlignConfig:
    iterations_m1: int = 20
    iterations_m2: int = 10
    use_null: bool = True
    symmetrization: str = "grow-diag-final"

    def __post_init__(self):
        if self.iterations_m1 < 0 or self.iterations_m2 < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.symmetrization not in SYMMETRIZATION_HEURISTICS:
            raise ValueError(f"unknown symmetrization {self.symmetrization!r}")

    def to_dict(self) -> dict:
        return {
            "iterations_m1": self.iterations_m1,
            "iterations_m2": self.iterations_m2,
            "use_null": self.use_null,
            "symmetrization": self.symmetrization,
        }


class TranslationTable:
    """t(e|f) lexical probabilities, stored sparsely by source word."""

    def __init__(self):
        self._by_f: dict[str, dict[str, float]] = {}

    def set(self, f: str, e: str, p: float) -> None:
        self._by_f.setdefault(f, {})[e] = p

    def prob(self, f: str, e: str) -> float:
        return self._by_f.get(f, {}).get(e, 0.0)

    def candidates(self, f: str) -> dict[str, float]:
        return self._by_f.get(f, {})

    @property
    def f_vocab(self) -> set[str]:
        return set(self._by_f)

    @property
    def has_null(self) -> bool:
        return NULL_TOKEN in self._by_f

    def copy(self) -> "TranslationTable":
        dup = TranslationTable()
        dup._by_f = {f: dict(cands) for f, cands in self._by_f.items()}
        return dup

    def items(self):
        for f, cands in self._by_f.items():
            for e, p in cands.items():
                yield f, e, p

    def export_tsv(self) -> str:
        """UTF-8 TSV `f<TAB>e<TAB>prob`, sorted by (f, descending prob)."""
        lines = []
        for f in sorted(self._by_f):
            for e, p in sorted(self._by_f[f].items(), key=lambda kv: (-kv[1], kv[0])):
                lines.append(f"{f}\t{e}\t{p:.12g}")
        return "\n".join(lines) + "\n"


class DistortionTable:
    """q(i | j, l, m) positional probabilities; i=0 is the NULL position."""

    def __init__(self, use_null: bool = True):
        self.use_null = use_null
        self._q: dict[tuple[int, int, int, int], float] = {}

    def set(self, i: int, j: int, l: int, m: int, p: float) -> None:
        self._q[(i, j, l, m)] = p

    def prob(self, i: int, j: int, l: int, m: int) -> float:
        """Stored probability, or the uniform value for unseen (j, l, m)."""
        default = 1.0 / (l + 1 if self.use_null else l)
        return self._q.get((i, j, l, m), default) if self._has(j, l, m) else default

    def _has(self, j: int, l: int, m: int) -> bool:
        first_i = 0 if self.use_null else 1
        return (first_i, j, l, m) in self._q

    def items(self):
        return self._q.items()


@dataclass
class Alignment:
    """0-based (f_index, e_index) links; NULL links are omitted."""

    links: set[tuple[int, int]] = field(default_factory=set)

    def transposed(self) -> "Alignment":
        return Alignment({(j, i) for i, j in self.links})

    def to_pharaoh(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in sorted(self.links))


def _source_side(tokens: list[str], use_null: bool) -> list[str]:
    return [NULL_TOKEN] + tokens if use_null else list(tokens)


def train_model1(
    corpus: ParallelCorpus, cfg: AlignConfig
) -> tuple[TranslationTable, list[float]]:
    """EM for the lexical model.

    t is initialized uniform over the target vocabulary (1/|V_e| for every
    cooccurring pair). Each iteration reports the data log-likelihood under
    the parameters it starts from, so the sequence is non-decreasing.
    """
    if not corpus.pairs:
        raise EmptyCorpus("parallel corpus has no pairs")
    pairs = [(_source_side(src, cfg.use_null), tgt) for src, tgt in corpus.pairs]

    e_vocab = {e for _, tgt in pairs for e in tgt}
    table = TranslationTable()
    init = 1.0 / len(e_vocab)
    for fs, tgt in pairs:
        for f in fs:
            for e in tgt:
                table.set(f, e, init)

    log_likelihood = []
    for _ in range(cfg.iterations_m1):
        counts: dict[tuple[str, str], float] = {}
        totals: dict[str, float] = {}
        ll = 0.0
        for fs, tgt in pairs:
            for e in tgt:
                denom = sum(table.prob(f, e) for f in fs)
                ll += math.log(denom) - math.log(len(fs))
                for f in fs:
                    delta = table.prob(f, e) / denom
                    counts[(f, e)] = counts.get((f, e), 0.0) + delta
                    totals[f] = totals.get(f, 0.0) + delta
        log_likelihood.append(ll)
        new = TranslationTable()
        for (f, e), c in counts.items():
            new.set(f, e, c / totals[f])
        table = new
    return table, log_likelihood


def train_model2(
    corpus: ParallelCorpus, cfg: AlignConfig, init: TranslationTable
) -> tuple[TranslationTable, DistortionTable, list[float]]:
    """Joint EM over lexical and distortion parameters, seeded by `init`.

    q starts uniform, so the first reported log-likelihood continues the
    lexical model's sequence.
    """
    if not corpus.pairs:
        raise EmptyCorpus("parallel corpus has no pairs")
    pairs = [(_source_side(src, cfg.use_null), tgt) for src, tgt in corpus.pairs]

    table = init.copy()
    q = DistortionTable(cfg.use_null)
    for fs, tgt in pairs:
        l = len(fs) - 1 if cfg.use_null else len(fs)
        m = len(tgt)
        for j in range(1, m + 1):
            for i in _positions(l, cfg.use_null):
                q.set(i, j, l, m, 1.0 / len(fs))

    log_likelihood = []
    for _ in range(cfg.iterations_m2):
        t_counts: dict[tuple[str, str], float] = {}
        t_totals: dict[str, float] = {}
        q_counts: dict[tuple[int, int, int, int], float] = {}
        q_totals: dict[tuple[int, int, int], float] = {}
        ll = 0.0
        for fs, tgt in pairs:
            l = len(fs) - 1 if cfg.use_null else len(fs)
            m = len(tgt)
            positions = _positions(l, cfg.use_null)
            for j, e in enumerate(tgt, start=1):
                joint = [
                    table.prob(fs[k], e) * q.prob(i, j, l, m)
                    for k, i in enumerate(positions)
                ]
                denom = sum(joint)
                ll += math.log(denom)
                for k, i in enumerate(positions):
                    delta = joint[k] / denom
                    f = fs[k]
                    t_counts[(f, e)] = t_counts.get((f, e), 0.0) + delta
                    t_totals[f] = t_totals.get(f, 0.0) + delta
                    q_counts[(i, j, l, m)] = q_counts.get((i, j, l, m), 0.0) + delta
                    q_totals[(j, l, m)] = q_totals.get((j, l, m), 0.0) + delta
        log_likelihood.append(ll)
        new_t = TranslationTable()
        for (f, e), c in t_counts.items():
            new_t.set(f, e, c / t_totals[f])
        table = new_t
        new_q = DistortionTable(cfg.use_null)
        for (i, j, l, m), c in q_counts.items():
            new_q.set(i, j, l, m, c / q_totals[(j, l, m)])
        q = new_q
    return table, q, log_likelihood


def _positions(l: int, use_null: bool) -> list[int]:
    """Distortion-table source positions: 0 is NULL, real words are 1..l."""
    return list(range(0, l + 1)) if use_null else list(range(1, l + 1))


def alignment_posteriors(
    pair: tuple[list[str], list[str]],
    table: TranslationTable,
    dist: DistortionTable | None = None,
) -> np.ndarray:
    """Per-target-word posterior over source positions.

    Shape (m, l+1) when the table carries a NULL column (column 0), else
    (m, l). Unknown words fall back to a probability floor, so rows always
    normalize.
    """
    src, tgt = pair
    use_null = table.has_null
    fs = _source_side(src, use_null)
    l, m = len(src), len(tgt)
    positions = _positions(l, use_null)
    post = np.empty((m, len(fs)))
    for j, e in enumerate(tgt, start=1):
        for k, i in enumerate(positions):
            t = max(table.prob(fs[k], e), PROB_FLOOR)
            d = max(dist.prob(i, j, l, m), PROB_FLOOR) if dist is not None else 1.0
            post[j - 1, k] = t * d
        post[j - 1] /= post[j - 1].sum()
    return post


def viterbi_align(
    pair: tuple[list[str], list[str]],
    table: TranslationTable,
    dist: DistortionTable | None = None,
) -> Alignment:
    """Link each target word to its argmax source word; ties take the
    smallest index. A target word stays unaligned only when NULL strictly
    beats every real source word."""
    post = alignment_posteriors(pair, table, dist)
    offset = 1 if table.has_null else 0
    links = set()
    for j in range(post.shape[0]):
        real = post[j, offset:]
        best = int(np.argmax(real))  # first maximum: smallest index
        if offset and post[j, 0] > real[best]:
            continue
        links.add((best, j))
    return Alignment(links)


def symmetrize(fwd: Alignment, rev: Alignment, heuristic: str) -> Alignment:
    """Combine source→target and target→source alignments.

    `rev` must already be expressed in (f, e) index space; callers transpose.
    """
    if heuristic == "intersection":
        return Alignment(fwd.links & rev.links)
    if heuristic == "union":
        return Alignment(fwd.links | rev.links)
    if heuristic == "grow-diag-final":
        return Alignment(_grow_diag_final(fwd.links, rev.links))
    raise ValueError(f"unknown symmetrization {heuristic!r}")


_NEIGHBORS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def _grow_diag_final(fwd: set, rev: set) -> set:
    links = fwd & rev
    union = fwd | rev
    f_cov = {i for i, _ in links}
    e_cov = {j for _, j in links}

    # grow: absorb union links neighboring the current set while one of
    # their words is still uncovered, to fixpoint
    added = True
    while added:
        added = False
        for i, j in sorted(links):
            for di, dj in _NEIGHBORS:
                cand = (i + di, j + dj)
                if cand in union and cand not in links:
                    if cand[0] not in f_cov or cand[1] not in e_cov:
                        links.add(cand)
                        f_cov.add(cand[0])
                        e_cov.add(cand[1])
                        added = True

    # final: directional links whose source or target word is uncovered
    for direction in (fwd, rev):
        for i, j in sorted(direction):
            if (i, j) not in links and (i not in f_cov or j not in e_cov):
                links.add((i, j))
                f_cov.add(i)
                e_cov.add(j)
    return links
