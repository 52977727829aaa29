import json
import threading
import time

import pytest

from annolab.acoustic import deserialize_acoustic, serialize_acoustic, train_acoustic, CtcConfig
from annolab.corpus import load_parallel_corpus
from annolab.errors import (
    AlreadyTerminal,
    CorruptArtifact,
    KindMismatch,
    NotFound,
    StoreUnwritable,
    UnknownCorpus,
    UnknownParent,
)
from annolab.registry import Registry, CANCELLED, FAILED, QUEUED, RUNNING, SUCCEEDED, TERMINAL

from conftest import TOY_SOURCE, TOY_TARGET
from helpers import encode_wav, make_tone_corpus, synth_tones

FAST_CFG = {"epochs": 2, "hidden_size": 16, "seed": 1}


def wait_terminal(reg, job_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = reg.get_job(job_id)
        if job.state in TERMINAL:
            return job
        time.sleep(0.02)
    raise AssertionError(f"job {job_id} stuck in {reg.get_job(job_id).state}")


@pytest.fixture
def registry(tmp_path):
    reg = Registry(tmp_path / "store")
    yield reg
    reg.close()


@pytest.fixture
def speech_id(registry):
    return registry.add_speech_corpus(make_tone_corpus(n_utterances=3))


@pytest.fixture
def parallel_id(registry):
    return registry.add_parallel_corpus(load_parallel_corpus(TOY_SOURCE, TOY_TARGET))


class TestJobLifecycle:
    def test_submitted_job_is_queued_then_succeeds(self, registry, speech_id):
        job_id = registry.submit_job("transcription", speech_id, config=FAST_CFG)
        first = registry.get_job(job_id)
        assert first.state in (QUEUED, RUNNING)
        job = wait_terminal(registry, job_id)
        assert job.state == SUCCEEDED
        assert job.result_model_id
        assert job.error_message is None
        record = registry.get_model_record(job.result_model_id)
        assert record.kind == "transcription"

    def test_gloss_job(self, registry, parallel_id):
        job_id = registry.submit_job("gloss", parallel_id, config={"iterations_m1": 5})
        job = wait_terminal(registry, job_id)
        assert job.state == SUCCEEDED
        model = registry.load_gloss_model(job.result_model_id)
        assert len(model.phrase_table) > 0

    def test_unknown_corpus(self, registry):
        with pytest.raises(UnknownCorpus):
            registry.submit_job("transcription", "missing")

    def test_unknown_parent(self, registry, speech_id):
        with pytest.raises(UnknownParent):
            registry.submit_job(
                "transcription", speech_id, parent_model_id="nope"
            )

    def test_kind_mismatch_parent(self, registry, speech_id, parallel_id):
        gloss_job = registry.submit_job("gloss", parallel_id)
        gloss_model = wait_terminal(registry, gloss_job).result_model_id
        with pytest.raises(KindMismatch):
            registry.submit_job(
                "transcription", speech_id, parent_model_id=gloss_model
            )

    def test_corpus_kind_checked(self, registry, parallel_id):
        with pytest.raises(KindMismatch):
            registry.submit_job("transcription", parallel_id)

    def test_get_unknown_job(self, registry):
        with pytest.raises(NotFound):
            registry.get_job("missing")

    def test_failing_job_records_error(self, registry, speech_id):
        job_id = registry.submit_job(
            "transcription", speech_id, config={"epochs": -3}
        )
        job = wait_terminal(registry, job_id)
        assert job.state == FAILED
        assert job.error_message
        assert job.result_model_id is None

    def test_progress_reaches_one(self, registry, speech_id):
        job_id = registry.submit_job("transcription", speech_id, config=FAST_CFG)
        job = wait_terminal(registry, job_id)
        assert job.progress == 1.0


class TestCancellation:
    def test_cancel_queued_job_never_runs(self, tmp_path):
        reg = Registry(tmp_path / "store", start_workers=False)
        corpus_id = reg.add_speech_corpus(make_tone_corpus(n_utterances=2))
        job_id = reg.submit_job("transcription", corpus_id, config=FAST_CFG)
        cancelled = reg.cancel_job(job_id)
        assert cancelled.state == CANCELLED
        # a later worker drain must skip it
        reg._run_job(job_id)
        assert reg.get_job(job_id).state == CANCELLED
        assert reg.list_models() == []
        reg.close()

    def test_cancel_terminal_job(self, registry, speech_id):
        job_id = registry.submit_job("transcription", speech_id, config=FAST_CFG)
        wait_terminal(registry, job_id)
        with pytest.raises(AlreadyTerminal):
            registry.cancel_job(job_id)

    def test_cancel_running_job_stops_at_epoch_boundary(self, registry, speech_id):
        job_id = registry.submit_job(
            "transcription",
            speech_id,
            config={"epochs": 500, "hidden_size": 16, "seed": 1},
        )
        while registry.get_job(job_id).state == QUEUED:
            time.sleep(0.01)
        registry.cancel_job(job_id)
        job = wait_terminal(registry, job_id)
        assert job.state == CANCELLED
        assert job.result_model_id is None
        assert registry.list_models() == []

    def test_cancel_unknown(self, registry):
        with pytest.raises(NotFound):
            registry.cancel_job("missing")


class TestModelStore:
    def trained_artifact(self):
        model, _ = train_acoustic(
            make_tone_corpus(n_utterances=2), CtcConfig(epochs=1, hidden_size=16)
        )
        return model, serialize_acoustic(model)

    def test_round_trip(self, registry):
        model, artifact = self.trained_artifact()
        record = registry.store_model("transcription", artifact)
        loaded = registry.load_acoustic_model(record.model_id)
        audio = synth_tones(["aa", "oo"])
        assert loaded.transcribe(audio).ids == model.transcribe(audio).ids

    def test_truncated_artifact(self, registry):
        _, artifact = self.trained_artifact()
        record = registry.store_model("transcription", artifact)
        path = registry.root / "models" / record.model_id / "artifact.bin"
        path.write_bytes(path.read_bytes()[:100])
        with pytest.raises(CorruptArtifact):
            registry.load_acoustic_model(record.model_id)

    def test_list_newest_first(self, registry):
        _, artifact = self.trained_artifact()
        first = registry.store_model("transcription", artifact)
        second = registry.store_model("transcription", artifact)
        listed = registry.list_models()
        assert [r.model_id for r in listed[:2]] == [second.model_id, first.model_id]

    def test_load_unknown_model(self, registry):
        with pytest.raises(NotFound):
            registry.get_model_record("missing")


class TestCorrections:
    def test_consent_false_leaves_no_trace(self, registry):
        wav = encode_wav(synth_tones(["aa"]))
        tid = registry.record_transcription("model1", "utt1", wav, "aa")
        stored = registry.put_correction(tid, "aa oo", consent=False)
        assert stored is False
        assert registry.list_corrections("model1") == []
        assert not any((registry.root / "corrections").rglob("*"))

    def test_consented_correction_feeds_fine_tune(self, registry, speech_id):
        base_job = registry.submit_job("transcription", speech_id, config=FAST_CFG)
        base_model = wait_terminal(registry, base_job).result_model_id

        wav = encode_wav(synth_tones(["aa", "oo"]))
        tid = registry.record_transcription(base_model, "utt1", wav, "aa aa")
        assert registry.put_correction(tid, "aa oo", consent=True) is True

        corpus = registry.corrections_corpus(base_model)
        assert len(corpus) == 1
        assert corpus.items[0].transcript.to_text(corpus.inventory) == "aa oo"

        tune_job = registry.submit_job(
            "transcription",
            f"corrections:{base_model}",
            config={"epochs": 1, "hidden_size": 16, "seed": 2},
            parent_model_id=base_model,
        )
        job = wait_terminal(registry, tune_job)
        assert job.state == SUCCEEDED
        tuned = registry.get_model_record(job.result_model_id)
        assert tuned.parent_id == base_model

    def test_re_put_identical_is_noop(self, registry):
        wav = encode_wav(synth_tones(["aa"]))
        tid = registry.record_transcription("m", "u", wav, "aa")
        registry.put_correction(tid, "aa ee", consent=True)
        before = registry.list_corrections("m")
        registry.put_correction(tid, "aa ee", consent=True)
        after = registry.list_corrections("m")
        assert [r["text"] for r in before] == [r["text"] for r in after]
        assert len(after) == 1

    def test_unknown_transcription(self, registry):
        with pytest.raises(NotFound):
            registry.put_correction("missing", "aa", consent=True)


class TestCrashSafety:
    def test_interrupted_running_job_fails_on_restart(self, tmp_path):
        store = tmp_path / "store"
        reg = Registry(store, start_workers=False)
        corpus_id = reg.add_speech_corpus(make_tone_corpus(n_utterances=2))
        job_id = reg.submit_job("transcription", corpus_id, config=FAST_CFG)
        reg._transition(job_id, RUNNING)
        reg.close()

        recovered = Registry(store, start_workers=False)
        job = recovered.get_job(job_id)
        assert job.state == FAILED
        assert job.error_message == "interrupted"
        recovered.close()

    def test_interrupted_queued_job_cancelled_on_restart(self, tmp_path):
        store = tmp_path / "store"
        reg = Registry(store, start_workers=False)
        corpus_id = reg.add_speech_corpus(make_tone_corpus(n_utterances=2))
        job_id = reg.submit_job("transcription", corpus_id, config=FAST_CFG)
        reg.close()

        recovered = Registry(store, start_workers=False)
        assert recovered.get_job(job_id).state == CANCELLED
        recovered.close()

    def test_unwritable_store(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("file, not dir")
        with pytest.raises(StoreUnwritable):
            Registry(blocker / "store")


class TestConcurrentPolling:
    def test_no_illegal_transition_observed(self, registry, speech_id):
        job_id = registry.submit_job(
            "transcription",
            speech_id,
            config={"epochs": 30, "hidden_size": 16, "seed": 1},
        )
        per_thread = [[] for _ in range(3)]
        stop = threading.Event()

        def poll(observations):
            while not stop.is_set():
                observations.append(registry.get_job(job_id).state)

        pollers = [threading.Thread(target=poll, args=(obs,)) for obs in per_thread]
        for t in pollers:
            t.start()
        wait_terminal(registry, job_id)
        time.sleep(0.05)
        stop.set()
        for t in pollers:
            t.join()

        # states only ever advance, and never skip RUNNING or regress
        order = {QUEUED: 0, RUNNING: 1, SUCCEEDED: 2, FAILED: 2, CANCELLED: 2}
        for observations in per_thread:
            assert observations
            ranks = [order[s] for s in observations]
            assert all(a <= b for a, b in zip(ranks, ranks[1:]))
        assert registry.get_job(job_id).state == SUCCEEDED
