"""Shared test helpers: independent oracles, synthetic audio, zip builders.

Oracles here are deliberately naive (full enumeration) so they stay
independent of the library's algorithmic path.
"""

import io
import itertools
import math
import zipfile

import numpy as np

from annolab.corpus import AudioBuffer, encode_wav, load_speech_corpus

# --- brute-force CTC oracle ---


def collapse_path(path, blank):
    out = []
    prev = None
    for k in path:
        if k != prev and k != blank:
            out.append(k)
        prev = k
    return tuple(out)


def brute_force_ctc_prob(logprobs, labels):
    """Sum path probabilities over all (n+1)^T paths collapsing to labels."""
    t_len, n_out = logprobs.shape
    blank = n_out - 1
    target = tuple(labels)
    total = 0.0
    for path in itertools.product(range(n_out), repeat=t_len):
        if collapse_path(path, blank) == target:
            total += math.exp(sum(logprobs[t][k] for t, k in enumerate(path)))
    return total


def all_collapsed_sequences(t_len, n_labels):
    """Every label sequence reachable from some length-t path."""
    blank = n_labels
    seqs = set()
    for path in itertools.product(range(n_labels + 1), repeat=t_len):
        seqs.add(collapse_path(path, blank))
    return seqs


def random_logprobs(rng, t_len, n_out):
    logits = rng.normal(size=(t_len, n_out))
    return logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)


# --- brute-force alignment oracles ---


def enumerate_alignment_posteriors(src, tgt, prob, use_null):
    """Posterior p(a_j = i) from full enumeration over (l+1)^m alignments.

    `prob(f, e)` supplies lexical probabilities; the model's uniform
    position prior cancels in the normalization.
    """
    fs = (["<null>"] if use_null else []) + list(src)
    m = len(tgt)
    post = np.zeros((m, len(fs)))
    z = 0.0
    for assignment in itertools.product(range(len(fs)), repeat=m):
        p = 1.0
        for j, i in enumerate(assignment):
            p *= prob(fs[i], tgt[j])
        z += p
        for j, i in enumerate(assignment):
            post[j, i] += p
    return post / z


def enumerate_fractional_counts(pairs, prob, use_null):
    """Expected (f, e) link counts per sentence pair, by full enumeration."""
    counts = {}
    for src, tgt in pairs:
        post = enumerate_alignment_posteriors(src, tgt, prob, use_null)
        fs = (["<null>"] if use_null else []) + list(src)
        for j, e in enumerate(tgt):
            for i, f in enumerate(fs):
                counts[(f, e)] = counts.get((f, e), 0.0) + post[j, i]
    return counts


def oracle_extract_phrases(src, tgt, links, max_len):
    """Exhaustive consistency check over every span pair."""
    out = set()
    for fs in range(len(src)):
        for fe in range(fs, min(fs + max_len, len(src))):
            for es in range(len(tgt)):
                for ee in range(es, min(es + max_len, len(tgt))):
                    inside = [
                        (i, j) for i, j in links if fs <= i <= fe and es <= j <= ee
                    ]
                    if not inside:
                        continue
                    if any((fs <= i <= fe) != (es <= j <= ee) for i, j in links):
                        continue
                    out.add((tuple(src[fs : fe + 1]), tuple(tgt[es : ee + 1])))
    return out


# --- synthetic tone corpus ---

TONE_RATE = 16000
TONE_FREQS = {"aa": 400.0, "ee": 1000.0, "oo": 2400.0}


def synth_tones(symbols, duration_s=0.1, rate=TONE_RATE, amplitude=0.3):
    """Concatenated fixed-frequency tones, one per symbol.

    Each tone carries a 10 ms raised-cosine attack and release so adjacent
    identical tones show an energy dip at the boundary, as real phone
    transitions do; otherwise repeats would be seamless and undecodable.
    """
    n = int(rate * duration_s)
    t = np.arange(n) / rate
    edge = int(rate * 0.01)
    envelope = np.ones(n)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(edge) / edge)
    envelope[:edge] = ramp
    envelope[-edge:] = ramp[::-1]
    parts = [
        amplitude * envelope * np.sin(2 * np.pi * TONE_FREQS[s] * t) for s in symbols
    ]
    return AudioBuffer(np.concatenate(parts), rate)


def make_tone_corpus(n_utterances=20, seed=7, min_len=3, max_len=6):
    """Fixed-seed corpus of tone sequences labelled with their phonemes."""
    rng = np.random.default_rng(seed)
    symbols = sorted(TONE_FREQS)
    manifest = []
    for u in range(n_utterances):
        length = int(rng.integers(min_len, max_len + 1))
        seq = [symbols[int(rng.integers(0, len(symbols)))] for _ in range(length)]
        wav = encode_wav(synth_tones(seq))
        manifest.append((f"utt{u:03d}", wav, " ".join(seq)))
    return load_speech_corpus(manifest)


def tone_sequences(n_utterances=20, seed=7, min_len=3, max_len=6):
    """The (utterance_id, symbols) pairs behind make_tone_corpus."""
    rng = np.random.default_rng(seed)
    symbols = sorted(TONE_FREQS)
    out = []
    for u in range(n_utterances):
        length = int(rng.integers(min_len, max_len + 1))
        seq = [symbols[int(rng.integers(0, len(symbols)))] for _ in range(length)]
        out.append((f"utt{u:03d}", seq))
    return out


def speech_corpus_zip(items) -> bytes:
    """Zip in the speech corpus layout from (utterance_id, symbols) pairs."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for utt_id, symbols in items:
            zf.writestr(f"wav/{utt_id}.wav", encode_wav(synth_tones(symbols)))
            zf.writestr(f"txt/{utt_id}.txt", " ".join(symbols) + "\n")
    return buf.getvalue()


def parallel_corpus_zip(source_text, target_text) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("source.txt", source_text)
        zf.writestr("target.txt", target_text)
    return buf.getvalue()


def wav_zip(items) -> bytes:
    """Zip of bare WAVs from (utterance_id, symbols) pairs, for transcription."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for utt_id, symbols in items:
            zf.writestr(f"{utt_id}.wav", encode_wav(synth_tones(symbols)))
    return buf.getvalue()
