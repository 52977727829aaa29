"""CTC loss and decoding.

The loss sums over every frame-level path that collapses (repeat-merge then
blank-delete) to the label sequence, computed by forward-backward over the
blank-augmented label sequence in log space. Gradients are analytic with
respect to the pre-softmax logits. The blank symbol always occupies the last
output column (id = inventory size).
"""

import math

import numpy as np

from .corpus import PhonemeSequence
from .errors import LabelTooLong

NEG_INF = -np.inf


def min_frames(labels: list[int]) -> int:
    """Shortest path length that can emit `labels`: repeats need a blank."""
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return len(labels) + repeats


def _augment(labels: list[int], blank: int) -> np.ndarray:
    aug = np.full(2 * len(labels) + 1, blank, dtype=np.int64)
    aug[1::2] = labels
    return aug


def ctc_loss(
    logprobs: np.ndarray, labels: PhonemeSequence
) -> tuple[float, np.ndarray]:
    """Negative log-probability of `labels` plus gradient wrt logits.

    `logprobs` is (T, n+1) with log-softmax rows; label ids must be < n.
    Raises LabelTooLong when T cannot fit the labels with required blanks.
    """
    logprobs = np.asarray(logprobs, dtype=np.float64)
    t_len, n_out = logprobs.shape
    blank = n_out - 1
    ids = list(labels.ids)
    if any(not 0 <= i < blank for i in ids):
        raise ValueError("label id outside inventory")
    if t_len < min_frames(ids):
        raise LabelTooLong(
            f"{len(ids)} labels need at least {min_frames(ids)} frames, got {t_len}"
        )

    aug = _augment(ids, blank)
    s_len = aug.shape[0]
    # skip transition s-2 -> s allowed when s's symbol is a label differing
    # from the one two slots back
    skip_ok = np.zeros(s_len, dtype=bool)
    if s_len > 2:
        skip_ok[2:] = (aug[2:] != blank) & (aug[2:] != aug[:-2])

    log_alpha = np.full((t_len, s_len), NEG_INF)
    log_alpha[0, 0] = logprobs[0, aug[0]]
    if s_len > 1:
        log_alpha[0, 1] = logprobs[0, aug[1]]
    for t in range(1, t_len):
        prev = log_alpha[t - 1]
        stay = prev
        left = np.concatenate(([NEG_INF], prev))[:s_len]
        skip = np.concatenate(([NEG_INF, NEG_INF], prev))[:s_len]
        skip = np.where(skip_ok, skip, NEG_INF)
        log_alpha[t] = np.logaddexp(np.logaddexp(stay, left), skip) + logprobs[t, aug]

    if s_len > 1:
        log_p = np.logaddexp(log_alpha[-1, -1], log_alpha[-1, -2])
    else:
        log_p = log_alpha[-1, -1]
    if log_p == NEG_INF:
        raise LabelTooLong("no valid path for the label sequence")

    # beta excludes the current frame: beta[t, s] is the probability of the
    # suffix t+1..T given state s at t, so sum_s alpha*beta == P at every t
    log_beta = np.full((t_len, s_len), NEG_INF)
    log_beta[-1, -1] = 0.0
    if s_len > 1:
        log_beta[-1, -2] = 0.0
    for t in range(t_len - 2, -1, -1):
        nxt = log_beta[t + 1] + logprobs[t + 1, aug]
        stay = nxt
        right = np.concatenate((nxt[1:], [NEG_INF]))[:s_len]
        skip = np.concatenate((nxt[2:], [NEG_INF, NEG_INF]))[:s_len]
        skip_from = np.concatenate((skip_ok[2:], [False, False]))[:s_len]
        skip = np.where(skip_from, skip, NEG_INF)
        log_beta[t] = np.logaddexp(np.logaddexp(stay, right), skip)

    log_ab = log_alpha + log_beta
    log_gamma = np.full((t_len, n_out), NEG_INF)
    for s in range(s_len):
        k = aug[s]
        log_gamma[:, k] = np.logaddexp(log_gamma[:, k], log_ab[:, s])
    grad = np.exp(logprobs) - np.exp(log_gamma - log_p)
    return float(-log_p), grad


def greedy_decode(logprobs: np.ndarray) -> PhonemeSequence:
    """Per-frame argmax (ties to the lowest id), collapse repeats, drop blanks."""
    logprobs = np.asarray(logprobs)
    blank = logprobs.shape[1] - 1
    path = np.argmax(logprobs, axis=1)
    out = []
    prev = -1
    for k in path:
        if k != prev and k != blank:
            out.append(int(k))
        prev = k
    return PhonemeSequence(out)


def prefix_beam_search(
    logprobs: np.ndarray, width: int
) -> list[tuple[tuple[int, ...], float]]:
    """CTC prefix beam search; returns surviving prefixes with total log
    probability, best first (ties to the lexicographically smallest prefix).

    With width at least the number of reachable prefixes nothing is pruned
    and the scores are exact label-sequence probabilities.
    """
    if width < 1:
        raise ValueError("beam width must be >= 1")
    logprobs = np.asarray(logprobs, dtype=np.float64)
    blank = logprobs.shape[1] - 1

    # prefix -> (log p of paths ending in blank, ending in non-blank)
    beams: dict[tuple[int, ...], tuple[float, float]] = {(): (0.0, NEG_INF)}
    for lp in logprobs:
        new: dict[tuple[int, ...], tuple[float, float]] = {}

        def bump(prefix, p_blank=NEG_INF, p_nonblank=NEG_INF):
            old_b, old_nb = new.get(prefix, (NEG_INF, NEG_INF))
            new[prefix] = (
                np.logaddexp(old_b, p_blank),
                np.logaddexp(old_nb, p_nonblank),
            )

        for prefix, (p_b, p_nb) in beams.items():
            total = np.logaddexp(p_b, p_nb)
            bump(prefix, p_blank=total + lp[blank])
            if prefix:
                # repeating the final symbol without a blank keeps the prefix
                bump(prefix, p_nonblank=p_nb + lp[prefix[-1]])
            for c in range(blank):
                extended = prefix + (c,)
                source = p_b if (prefix and c == prefix[-1]) else total
                bump(extended, p_nonblank=source + lp[c])

        ranked = sorted(
            new.items(), key=lambda kv: (-np.logaddexp(*kv[1]), kv[0])
        )
        beams = dict(ranked[:width])

    return [
        (prefix, float(np.logaddexp(p_b, p_nb)))
        for prefix, (p_b, p_nb) in sorted(
            beams.items(), key=lambda kv: (-np.logaddexp(*kv[1]), kv[0])
        )
    ]


def beam_decode(logprobs: np.ndarray, width: int) -> PhonemeSequence:
    """Highest-probability collapsed label sequence under prefix beam search."""
    best_prefix, _ = prefix_beam_search(logprobs, width)[0]
    return PhonemeSequence(list(best_prefix))


def ctc_sequence_logprob(logprobs: np.ndarray, labels: list[int]) -> float:
    """log P(labels | logprobs) via the forward pass only (no gradient)."""
    try:
        loss, _ = ctc_loss(np.asarray(logprobs), PhonemeSequence(list(labels)))
    except LabelTooLong:
        return -math.inf
    return -loss
