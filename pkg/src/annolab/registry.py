"""Model storage and asynchronous training-job lifecycle.

Everything lives in a directory tree, no database:

    store/corpora/<id>/...            corpus layouts (see corpus module)
    store/models/<id>/manifest.json   record + artifact checksum
    store/models/<id>/artifact.bin    serialized model
    store/jobs/<id>.json              job state
    store/transcriptions/<id>.*       audio + proposal awaiting review
    store/corrections/<model>/<id>.*  consented corrections (fine-tune data)

Artifacts are written to a temp file and renamed, manifest last, so a record
is either fully present with a valid checksum or absent. Jobs found
non-terminal when the registry reopens were interrupted: RUNNING becomes
FAILED, QUEUED becomes CANCELLED (the queue itself is in-memory only).
"""

import hashlib
import json
import queue
import threading
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import acoustic, gloss
from .corpus import (
    ParallelCorpus,
    SpeechCorpus,
    load_parallel_corpus_dir,
    load_speech_corpus,
    load_speech_corpus_dir,
    save_parallel_corpus,
    save_speech_corpus,
)
from .errors import (
    AlreadyTerminal,
    CorruptArtifact,
    JobCancelled,
    KindMismatch,
    NotFound,
    StoreUnwritable,
    UnknownCorpus,
    UnknownParent,
)

QUEUED = "QUEUED"
RUNNING = "RUNNING"
SUCCEEDED = "SUCCEEDED"
FAILED = "FAILED"
CANCELLED = "CANCELLED"
TERMINAL = {SUCCEEDED, FAILED, CANCELLED}
LEGAL_TRANSITIONS = {
    QUEUED: {RUNNING, CANCELLED},
    RUNNING: {SUCCEEDED, FAILED, CANCELLED},
}

MODEL_KINDS = ("transcription", "gloss")
CORRECTIONS_PREFIX = "corrections:"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _new_id() -> str:
    return uuid.uuid4().hex[:12]


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


@dataclass
class ModelRecord:
    model_id: str
    kind: str
    created_at: str
    parent_id: str | None
    artifact_path: str
    checksum: str
    seq: int
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class TrainingJob:
    job_id: str
    kind: str
    state: str = QUEUED
    progress: float = 0.0
    result_model_id: str | None = None
    error_message: str | None = None
    corpus_id: str = ""
    parent_model_id: str | None = None
    config: dict = field(default_factory=dict)
    timestamps: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


class Registry:
    """Filesystem-backed store plus a FIFO worker pool executing jobs."""

    def __init__(self, root: Path, workers: int = 1, start_workers: bool = True):
        self.root = Path(root)
        self._lock = threading.RLock()
        self._jobs: dict[str, TrainingJob] = {}
        self._cancel_flags: dict[str, threading.Event] = {}
        self._queue: queue.Queue = queue.Queue()
        self._workers: list[threading.Thread] = []
        self._last_seq = 0

        for sub in ("corpora", "models", "jobs", "transcriptions", "corrections"):
            try:
                (self.root / sub).mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StoreUnwritable(f"cannot create {self.root / sub}: {exc}") from exc
        probe = self.root / ".write-probe"
        try:
            probe.write_bytes(b"ok")
            probe.unlink()
        except OSError as exc:
            raise StoreUnwritable(f"store {self.root} is not writable: {exc}") from exc

        self._load_jobs()
        for record in self.list_models():
            self._last_seq = max(self._last_seq, record.seq)
        if start_workers:
            for _ in range(max(1, workers)):
                t = threading.Thread(target=self._worker_loop, daemon=True)
                t.start()
                self._workers.append(t)

    # --- lifecycle ---

    def close(self) -> None:
        for _ in self._workers:
            self._queue.put(None)
        for t in self._workers:
            t.join(timeout=60)
        self._workers.clear()

    def _load_jobs(self) -> None:
        """Rehydrate jobs; anything non-terminal was interrupted."""
        for path in sorted((self.root / "jobs").glob("*.json")):
            job = TrainingJob(**json.loads(path.read_text(encoding="utf-8")))
            if job.state == RUNNING:
                job.state = FAILED
                job.error_message = "interrupted"
                job.timestamps[FAILED] = _now_iso()
                self._persist_job(job)
            elif job.state == QUEUED:
                job.state = CANCELLED
                job.timestamps[CANCELLED] = _now_iso()
                self._persist_job(job)
            self._jobs[job.job_id] = job

    # --- corpora ---

    def add_speech_corpus(self, corpus: SpeechCorpus, corpus_id: str | None = None) -> str:
        corpus_id = corpus_id or _new_id()
        save_speech_corpus(corpus, self.root / "corpora" / corpus_id)
        return corpus_id

    def add_parallel_corpus(self, corpus: ParallelCorpus, corpus_id: str | None = None) -> str:
        corpus_id = corpus_id or _new_id()
        save_parallel_corpus(corpus, self.root / "corpora" / corpus_id)
        return corpus_id

    def corpus_kind(self, corpus_id: str) -> str:
        if corpus_id.startswith(CORRECTIONS_PREFIX):
            model_id = corpus_id[len(CORRECTIONS_PREFIX) :]
            if not (self.root / "corrections" / model_id).is_dir():
                raise UnknownCorpus(f"no corrections stored for model {model_id}")
            return "speech"
        path = self.root / "corpora" / corpus_id
        if (path / "wav").is_dir():
            return "speech"
        if (path / "source.txt").exists():
            return "parallel"
        raise UnknownCorpus(corpus_id)

    def load_corpus(self, corpus_id: str):
        kind = self.corpus_kind(corpus_id)
        if corpus_id.startswith(CORRECTIONS_PREFIX):
            return self.corrections_corpus(corpus_id[len(CORRECTIONS_PREFIX) :])
        path = self.root / "corpora" / corpus_id
        if kind == "speech":
            return load_speech_corpus_dir(path)
        return load_parallel_corpus_dir(path)

    def corpus_info(self, corpus_id: str) -> dict:
        kind = self.corpus_kind(corpus_id)
        corpus = self.load_corpus(corpus_id)
        return {"corpus_id": corpus_id, "kind": kind, "item_count": len(corpus)}

    # --- jobs ---

    def submit_job(
        self,
        kind: str,
        corpus_id: str,
        config: dict | None = None,
        parent_model_id: str | None = None,
    ) -> str:
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        corpus_kind = self.corpus_kind(corpus_id)  # raises UnknownCorpus
        expected = "speech" if kind == "transcription" else "parallel"
        if corpus_kind != expected:
            raise KindMismatch(f"{kind} job needs a {expected} corpus, got {corpus_kind}")
        if parent_model_id is not None:
            try:
                parent = self.get_model_record(parent_model_id)
            except NotFound as exc:
                raise UnknownParent(parent_model_id) from exc
            if parent.kind != kind:
                raise KindMismatch(
                    f"parent model is {parent.kind}, job is {kind}"
                )
        job = TrainingJob(
            job_id=_new_id(),
            kind=kind,
            corpus_id=corpus_id,
            parent_model_id=parent_model_id,
            config=dict(config or {}),
            timestamps={QUEUED: _now_iso()},
        )
        with self._lock:
            self._jobs[job.job_id] = job
            self._cancel_flags[job.job_id] = threading.Event()
            self._persist_job(job)
        self._queue.put(job.job_id)
        return job.job_id

    def get_job(self, job_id: str) -> TrainingJob:
        with self._lock:
            if job_id not in self._jobs:
                raise NotFound(f"job {job_id}")
            job = self._jobs[job_id]
            return TrainingJob(**job.to_json())  # snapshot

    def list_jobs(self) -> list[TrainingJob]:
        with self._lock:
            jobs = [TrainingJob(**j.to_json()) for j in self._jobs.values()]
        return sorted(jobs, key=lambda j: j.timestamps.get(QUEUED, ""), reverse=True)

    def cancel_job(self, job_id: str) -> TrainingJob:
        with self._lock:
            if job_id not in self._jobs:
                raise NotFound(f"job {job_id}")
            job = self._jobs[job_id]
            if job.state in TERMINAL:
                raise AlreadyTerminal(f"job {job_id} is {job.state}")
            self._cancel_flags[job_id].set()
            if job.state == QUEUED:
                self._transition(job_id, CANCELLED)
            # RUNNING jobs stop cooperatively at the next epoch boundary
            return self.get_job(job_id)

    def _transition(self, job_id: str, new_state: str, **updates) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if new_state not in LEGAL_TRANSITIONS.get(job.state, set()):
                raise AlreadyTerminal(
                    f"illegal transition {job.state} -> {new_state} for {job_id}"
                )
            for key, value in updates.items():
                setattr(job, key, value)
            job.state = new_state
            job.timestamps[new_state] = _now_iso()
            self._persist_job(job)

    def _persist_job(self, job: TrainingJob) -> None:
        path = self.root / "jobs" / f"{job.job_id}.json"
        _atomic_write(path, json.dumps(job.to_json(), indent=1).encode("utf-8"))

    def _update_progress(self, job_id: str, progress: float) -> None:
        with self._lock:
            job = self._jobs[job_id]
            job.progress = progress
            self._persist_job(job)

    # --- workers ---

    def _worker_loop(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            self._run_job(job_id)

    def _run_job(self, job_id: str) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if job.state != QUEUED:  # cancelled while waiting
                return
            self._transition(job_id, RUNNING)
            kind = job.kind
            corpus_id = job.corpus_id
            config = dict(job.config)
            parent_id = job.parent_model_id
        cancel = self._cancel_flags.get(job_id) or threading.Event()
        try:
            if kind == "transcription":
                record = self._run_transcription_job(
                    job_id, corpus_id, config, parent_id, cancel
                )
            else:
                record = self._run_gloss_job(job_id, corpus_id, config, parent_id, cancel)
            self._transition(job_id, SUCCEEDED, result_model_id=record.model_id, progress=1.0)
        except JobCancelled:
            self._transition(job_id, CANCELLED)
        except Exception as exc:  # noqa: BLE001 - job failures become state
            self._transition(job_id, FAILED, error_message=str(exc))

    def _run_transcription_job(self, job_id, corpus_id, config, parent_id, cancel):
        corpus = self.load_corpus(corpus_id)
        cfg = acoustic.CtcConfig(**config) if config else acoustic.CtcConfig()
        init = self.load_acoustic_model(parent_id) if parent_id else None

        def hook(done, _loss):
            self._update_progress(job_id, done / max(1, cfg.epochs))
            if cancel.is_set():
                raise JobCancelled(job_id)

        model, report = acoustic.train_acoustic(corpus, cfg, init=init, epoch_hook=hook)
        if cancel.is_set():
            raise JobCancelled(job_id)
        return self.store_model(
            "transcription",
            acoustic.serialize_acoustic(model),
            parent_id=parent_id,
            metadata={
                "corpus_id": corpus_id,
                "item_count": len(corpus),
                "config": cfg.to_dict(),
                "final_training_per": report.final_per,
                "epochs": report.epochs,
            },
        )

    def _run_gloss_job(self, job_id, corpus_id, config, parent_id, cancel):
        corpus = self.load_corpus(corpus_id)
        config = dict(config)
        max_len = config.pop("max_phrase_len", gloss.DEFAULT_MAX_PHRASE_LEN)
        cfg = gloss.AlignConfig(**config) if config else gloss.AlignConfig()
        model = gloss.train_glosser(corpus, cfg, max_len)
        if cancel.is_set():
            raise JobCancelled(job_id)
        return self.store_model(
            "gloss",
            gloss.serialize_gloss(model),
            parent_id=parent_id,
            metadata={
                "corpus_id": corpus_id,
                "item_count": len(corpus),
                "config": {**cfg.to_dict(), "max_phrase_len": max_len},
            },
        )

    # --- models ---

    def store_model(
        self,
        kind: str,
        artifact: bytes,
        parent_id: str | None = None,
        metadata: dict | None = None,
    ) -> ModelRecord:
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        if parent_id is not None:
            parent = self.get_model_record(parent_id)  # NotFound if absent
            if parent.kind != kind:
                raise KindMismatch(f"parent model is {parent.kind}, child is {kind}")
        model_id = _new_id()
        model_dir = self.root / "models" / model_id
        model_dir.mkdir(parents=True)
        with self._lock:
            self._last_seq += 1
            seq = self._last_seq
        record = ModelRecord(
            model_id=model_id,
            kind=kind,
            created_at=_now_iso(),
            parent_id=parent_id,
            artifact_path=str(model_dir / "artifact.bin"),
            checksum=hashlib.sha256(artifact).hexdigest(),
            seq=seq,
            metadata=dict(metadata or {}),
        )
        # artifact first, manifest last: a record without a manifest is absent
        _atomic_write(model_dir / "artifact.bin", artifact)
        _atomic_write(
            model_dir / "manifest.json",
            json.dumps(record.to_json(), indent=1).encode("utf-8"),
        )
        return record

    def get_model_record(self, model_id: str) -> ModelRecord:
        manifest = self.root / "models" / model_id / "manifest.json"
        if not manifest.exists():
            raise NotFound(f"model {model_id}")
        return ModelRecord(**json.loads(manifest.read_text(encoding="utf-8")))

    def list_models(self) -> list[ModelRecord]:
        records = []
        for manifest in (self.root / "models").glob("*/manifest.json"):
            records.append(ModelRecord(**json.loads(manifest.read_text(encoding="utf-8"))))
        return sorted(records, key=lambda r: r.seq, reverse=True)

    def load_artifact(self, model_id: str) -> tuple[ModelRecord, bytes]:
        record = self.get_model_record(model_id)
        path = Path(record.artifact_path)
        if not path.exists():
            raise CorruptArtifact(f"artifact missing for model {model_id}")
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != record.checksum:
            raise CorruptArtifact(f"checksum mismatch for model {model_id}")
        return record, data

    def load_acoustic_model(self, model_id: str) -> acoustic.AcousticModel:
        record, data = self.load_artifact(model_id)
        if record.kind != "transcription":
            raise KindMismatch(f"model {model_id} is {record.kind}, not transcription")
        return acoustic.deserialize_acoustic(data)

    def load_gloss_model(self, model_id: str) -> gloss.GlossModel:
        record, data = self.load_artifact(model_id)
        if record.kind != "gloss":
            raise KindMismatch(f"model {model_id} is {record.kind}, not gloss")
        return gloss.deserialize_gloss(data)

    # --- transcriptions and corrections ---

    def record_transcription(
        self, model_id: str, utterance_id: str, wav_bytes: bytes, proposed: str
    ) -> str:
        transcription_id = _new_id()
        base = self.root / "transcriptions"
        _atomic_write(base / f"{transcription_id}.wav", wav_bytes)
        meta = {
            "transcription_id": transcription_id,
            "model_id": model_id,
            "utterance_id": utterance_id,
            "proposed": proposed,
            "created_at": _now_iso(),
        }
        _atomic_write(
            base / f"{transcription_id}.json",
            json.dumps(meta, indent=1).encode("utf-8"),
        )
        return transcription_id

    def get_transcription(self, transcription_id: str) -> dict:
        path = self.root / "transcriptions" / f"{transcription_id}.json"
        if not path.exists():
            raise NotFound(f"transcription {transcription_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def put_correction(self, transcription_id: str, text: str, consent: bool) -> bool:
        """Store the reviewed transcript as fine-tune data when consented.

        Returns True when a correction record now exists. consent=False
        stores nothing and removes nothing (there is nothing to remove:
        records only ever exist for consented reviews).
        """
        meta = self.get_transcription(transcription_id)
        if not text.split():
            raise ValueError("corrected transcript has no tokens")
        if not consent:
            return False
        target = self.root / "corrections" / meta["model_id"]
        target.mkdir(parents=True, exist_ok=True)
        wav = (self.root / "transcriptions" / f"{transcription_id}.wav").read_bytes()
        _atomic_write(target / f"{transcription_id}.wav", wav)
        record = {
            "transcription_id": transcription_id,
            "model_id": meta["model_id"],
            "utterance_id": meta["utterance_id"],
            "text": " ".join(text.split()),
            "consent": True,
            "created_at": _now_iso(),
        }
        _atomic_write(
            target / f"{transcription_id}.json",
            json.dumps(record, indent=1).encode("utf-8"),
        )
        return True

    def list_corrections(self, model_id: str) -> list[dict]:
        target = self.root / "corrections" / model_id
        if not target.is_dir():
            return []
        return [
            json.loads(p.read_text(encoding="utf-8"))
            for p in sorted(target.glob("*.json"))
        ]

    def corrections_corpus(self, model_id: str) -> SpeechCorpus:
        corrections = self.list_corrections(model_id)
        if not corrections:
            raise UnknownCorpus(f"no corrections stored for model {model_id}")
        manifest = []
        target = self.root / "corrections" / model_id
        for rec in corrections:
            wav = (target / f"{rec['transcription_id']}.wav").read_bytes()
            manifest.append((rec["transcription_id"], wav, rec["text"]))
        return load_speech_corpus(manifest)
