import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annolab.corpus import PhonemeSequence
from annolab.ctc import (
    beam_decode,
    ctc_loss,
    ctc_sequence_logprob,
    greedy_decode,
    min_frames,
    prefix_beam_search,
)
from annolab.errors import LabelTooLong

from helpers import (
    all_collapsed_sequences,
    brute_force_ctc_prob,
    collapse_path,
    random_logprobs,
)


class TestCtcLoss:
    def test_hand_computed_two_frames(self):
        # paths aa, a-, -a for label "a": 0.6*0.5 + 0.6*0.5 + 0.4*0.5 = 0.8
        logprobs = np.log([[0.6, 0.4], [0.5, 0.5]])
        loss, _ = ctc_loss(logprobs, PhonemeSequence([0]))
        assert loss == pytest.approx(-math.log(0.8), abs=1e-12)
        assert loss == pytest.approx(0.22314, abs=1e-5)

    def test_single_frame(self):
        logprobs = np.log([[0.3, 0.7]])
        loss, _ = ctc_loss(logprobs, PhonemeSequence([0]))
        assert loss == pytest.approx(-math.log(0.3), abs=1e-12)

    def test_repeat_needs_separating_blank(self):
        logprobs = np.full((2, 2), math.log(0.5))
        with pytest.raises(LabelTooLong):
            ctc_loss(logprobs, PhonemeSequence([0, 0]))
        # three frames fit "a a" (path a-a)
        loss, _ = ctc_loss(np.full((3, 2), math.log(0.5)), PhonemeSequence([0, 0]))
        assert math.isfinite(loss)

    def test_min_frames(self):
        assert min_frames([0, 1, 2]) == 3
        assert min_frames([0, 0]) == 3
        assert min_frames([0, 0, 0]) == 5
        assert min_frames([]) == 0

    @given(st.data())
    @settings(max_examples=150, derandomize=True, deadline=None)
    def test_matches_brute_force(self, data):
        t_len = data.draw(st.integers(1, 6))
        n = data.draw(st.integers(1, 2))
        seed = data.draw(st.integers(0, 2**31))
        label_len = data.draw(st.integers(0, 3))
        labels = [data.draw(st.integers(0, n - 1)) for _ in range(label_len)]
        logprobs = random_logprobs(np.random.default_rng(seed), t_len, n + 1)
        expected = brute_force_ctc_prob(logprobs, labels)
        if t_len < min_frames(labels) or expected == 0.0:
            with pytest.raises(LabelTooLong):
                ctc_loss(logprobs, PhonemeSequence(labels))
        else:
            loss, _ = ctc_loss(logprobs, PhonemeSequence(labels))
            assert loss == pytest.approx(-math.log(expected), abs=1e-8)

    def test_probability_law(self, rng):
        # total CTC mass over every collapsed label sequence is 1
        for t_len, n in ((3, 2), (4, 2), (5, 1)):
            logprobs = random_logprobs(rng, t_len, n + 1)
            total = 0.0
            for length in range(t_len + 1):
                for seq in itertools.product(range(n), repeat=length):
                    total += math.exp(ctc_sequence_logprob(logprobs, list(seq)))
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_gradient_matches_finite_differences(self, rng):
        t_len, n_out = 5, 3
        labels = PhonemeSequence([0, 1, 0])
        logits = rng.normal(size=(t_len, n_out))

        def loss_of(z):
            lp = z - np.logaddexp.reduce(z, axis=1, keepdims=True)
            return ctc_loss(lp, labels)[0]

        lp = logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)
        _, grad = ctc_loss(lp, labels)
        h = 1e-6
        for t in range(t_len):
            for k in range(n_out):
                bump = np.zeros_like(logits)
                bump[t, k] = h
                numeric = (loss_of(logits + bump) - loss_of(logits - bump)) / (2 * h)
                denom = max(abs(numeric), abs(grad[t, k]), 1e-3)
                assert abs(numeric - grad[t, k]) / denom <= 1e-4

    def test_gradient_shape_and_finiteness(self, rng):
        logprobs = random_logprobs(rng, 6, 4)
        loss, grad = ctc_loss(logprobs, PhonemeSequence([2, 0]))
        assert grad.shape == (6, 4)
        assert np.all(np.isfinite(grad))
        assert math.isfinite(loss)

    def test_label_id_out_of_range(self, rng):
        logprobs = random_logprobs(rng, 3, 3)
        with pytest.raises(ValueError):
            ctc_loss(logprobs, PhonemeSequence([2]))  # 2 is the blank


class TestGreedyDecode:
    def one_hot(self, path, n_out):
        lp = np.full((len(path), n_out), -1e9)
        for t, k in enumerate(path):
            lp[t, k] = 0.0
        return lp

    def test_collapse_rule(self):
        # path [a, a, blk, b] with blank id 2
        assert greedy_decode(self.one_hot([0, 0, 2, 1], 3)).ids == [0, 1]

    def test_all_blank(self):
        assert greedy_decode(self.one_hot([2, 2, 2], 3)).ids == []

    def test_blank_separates_repeats(self):
        assert greedy_decode(self.one_hot([0, 2, 0], 3)).ids == [0, 0]

    def test_tie_takes_lowest_id(self):
        lp = np.zeros((1, 3))  # all equal
        assert greedy_decode(lp).ids == [0]

    def test_equals_collapsed_argmax_path(self, rng):
        for _ in range(50):
            logprobs = random_logprobs(rng, 8, 4)
            path = np.argmax(logprobs, axis=1)
            expected = list(collapse_path(path, 3))
            assert greedy_decode(logprobs).ids == expected


class TestBeamDecode:
    def test_exhaustive_width_is_exact(self, rng):
        for t_len, n in ((2, 1), (3, 2), (4, 2)):
            logprobs = random_logprobs(rng, t_len, n + 1)
            width = (n + 1) ** t_len + 1
            decoded = beam_decode(logprobs, width)
            probs = {
                seq: brute_force_ctc_prob(logprobs, list(seq))
                for seq in all_collapsed_sequences(t_len, n)
            }
            best = max(probs.values())
            assert probs[tuple(decoded.ids)] == pytest.approx(best, rel=1e-10)

    def test_one_hot_equals_greedy(self, rng):
        path = [0, 0, 2, 1, 2]
        lp = np.full((5, 3), -1e9)
        for t, k in enumerate(path):
            lp[t, k] = 0.0
        assert beam_decode(lp, 4).ids == greedy_decode(lp).ids

    def test_wider_beam_never_worse(self, rng):
        for _ in range(20):
            logprobs = random_logprobs(rng, 6, 3)
            narrow = prefix_beam_search(logprobs, 1)[0][1]
            wide = prefix_beam_search(logprobs, 8)[0][1]
            assert wide >= narrow - 1e-12

    def test_width_must_be_positive(self, rng):
        with pytest.raises(ValueError):
            beam_decode(random_logprobs(rng, 2, 2), 0)
