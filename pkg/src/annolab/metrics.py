"""Edit-distance evaluation for phoneme sequences."""

from .corpus import PhonemeSequence
from .errors import EmptyReference


def levenshtein(a: list, b: list) -> int:
    """Unit-cost edit distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def phoneme_error_rate(ref: PhonemeSequence, hyp: PhonemeSequence) -> float:
    """Levenshtein(ref, hyp) / |ref|; may exceed 1 for long hypotheses."""
    if len(ref) == 0:
        raise EmptyReference("reference sequence is empty")
    return levenshtein(ref.ids, hyp.ids) / len(ref)


def corpus_error_rate(pairs: list[tuple[PhonemeSequence, PhonemeSequence]]) -> float:
    """Corpus-level PER: total edits over total reference length."""
    total_ref = sum(len(ref) for ref, _ in pairs)
    if total_ref == 0:
        raise EmptyReference("no reference phonemes")
    total_edits = sum(levenshtein(ref.ids, hyp.ids) for ref, hyp in pairs)
    return total_edits / total_ref
