"""HTTP surface for the upload / train / annotate workflow.

Wire format is JSON throughout; corpora and audio arrive as raw binary
bodies (a zip matching the on-disk corpus layout, or a single WAV). Every
error response is `{"code": ..., "message": ...}` with the code drawn from
a fixed enumeration, regardless of where the failure originated.
"""

import io
import socket
import zipfile
from pathlib import Path

import uvicorn
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import errors
from .corpus import (
    PhonemeInventory,
    load_parallel_corpus,
    load_speech_corpus,
    parse_wav,
)
from .gloss import suggest_glosses
from .registry import Registry

DEFAULT_ADDR = "127.0.0.1:8571"

_ERROR_CODES = {
    errors.NotFound: ("NOT_FOUND", 404),
    errors.UnknownCorpus: ("NOT_FOUND", 404),
    errors.UnknownParent: ("NOT_FOUND", 404),
    errors.AlreadyTerminal: ("CONFLICT", 409),
    errors.KindMismatch: ("CONFLICT", 409),
    errors.DuplicateId: ("CONFLICT", 409),
    errors.CorruptArtifact: ("INTERNAL", 500),
}
VALIDATION_ERRORS = (
    errors.NotWav,
    errors.UnsupportedEncoding,
    errors.Truncated,
    errors.EmptyTranscript,
    errors.LineCountMismatch,
    errors.EmptyLine,
    errors.EmptyCorpus,
    errors.InventoryMismatch,
    errors.LabelTooLong,
    errors.TooShort,
    errors.DimensionMismatch,
)


class JobSpec(BaseModel):
    kind: str
    corpus_id: str
    config: dict = {}
    parent_model_id: str | None = None


class CorrectionBody(BaseModel):
    text: str
    consent: bool = False
    accepted: bool = False


class GlossRequest(BaseModel):
    sentences: list[str]
    k: int = 5


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def _map_domain_error(exc: errors.AnnolabError) -> JSONResponse:
    for cls, (code, status) in _ERROR_CODES.items():
        if isinstance(exc, cls):
            return _error_response(code, str(exc), status)
    if isinstance(exc, VALIDATION_ERRORS):
        return _error_response("VALIDATION", str(exc), 400)
    return _error_response("INTERNAL", str(exc), 500)


def _strip_common_root(names: list[str]) -> dict[str, str]:
    """Map zip entry name -> layout-relative path, tolerating one wrapper dir."""
    mapping = {}
    roots = {name.split("/", 1)[0] for name in names if "/" in name}
    strip = None
    if len(roots) == 1 and all("/" in n for n in names):
        candidate = next(iter(roots))
        if candidate not in ("wav", "txt"):
            strip = candidate + "/"
    for name in names:
        rel = name[len(strip) :] if strip and name.startswith(strip) else name
        mapping[name] = rel
    return mapping


def _ingest_corpus_zip(registry: Registry, body: bytes) -> dict:
    try:
        archive = zipfile.ZipFile(io.BytesIO(body))
    except zipfile.BadZipFile as exc:
        raise errors.UnsupportedEncoding(f"corpus upload is not a zip archive: {exc}")
    names = [n for n in archive.namelist() if not n.endswith("/")]
    rel = _strip_common_root(names)
    warnings = []

    by_rel = {rel[n]: n for n in names}
    if "source.txt" in by_rel and "target.txt" in by_rel:
        corpus = load_parallel_corpus(
            archive.read(by_rel["source.txt"]).decode("utf-8"),
            archive.read(by_rel["target.txt"]).decode("utf-8"),
        )
        extra = sorted(set(by_rel) - {"source.txt", "target.txt"})
        warnings.extend(f"ignored entry {e}" for e in extra)
        corpus_id = registry.add_parallel_corpus(corpus)
        return {
            "corpus_id": corpus_id,
            "kind": "parallel",
            "item_count": len(corpus),
            "warnings": warnings,
        }

    wavs = {}
    txts = {}
    inventory_lines = []
    for relname, name in sorted(by_rel.items()):
        parts = relname.split("/")
        if len(parts) == 2 and parts[0] == "wav" and parts[1].endswith(".wav"):
            wavs[parts[1][:-4]] = name
        elif len(parts) == 2 and parts[0] == "txt" and parts[1].endswith(".txt"):
            txts[parts[1][:-4]] = name
        elif relname == "inventory.txt":
            inventory_lines = archive.read(name).decode("utf-8").splitlines()
        else:
            warnings.append(f"ignored entry {name}")
    if not wavs:
        raise errors.EmptyCorpus(
            "zip holds neither a speech layout (wav/, txt/) nor a parallel "
            "layout (source.txt, target.txt)"
        )
    missing = sorted(set(wavs) - set(txts))
    if missing:
        raise errors.EmptyTranscript(f"no transcript for utterances: {missing}")
    warnings.extend(
        f"ignored transcript without audio: {stem}" for stem in sorted(set(txts) - set(wavs))
    )

    inventory = PhonemeInventory(line.strip() for line in inventory_lines if line.strip())
    manifest = [
        (stem, archive.read(wavs[stem]), archive.read(txts[stem]).decode("utf-8"))
        for stem in sorted(wavs)
    ]
    corpus = load_speech_corpus(manifest, inventory)
    corpus_id = registry.add_speech_corpus(corpus)
    return {
        "corpus_id": corpus_id,
        "kind": "speech",
        "item_count": len(corpus),
        "warnings": warnings,
    }


def _job_json(job) -> dict:
    return job.to_json()


def _record_json(record) -> dict:
    data = record.to_json()
    data.pop("seq", None)
    return data


def create_app(
    registry: Registry,
    ui_dir: Path | None = None,
    prefix: str = "",
    ui_path: str = "/ui",
) -> FastAPI:
    app = FastAPI(title="annolab", docs_url=None, redoc_url=None)

    @app.exception_handler(errors.AnnolabError)
    async def domain_error_handler(_request: Request, exc: errors.AnnolabError):
        return _map_domain_error(exc)

    @app.exception_handler(ValueError)
    async def value_error_handler(_request: Request, exc: ValueError):
        return _error_response("VALIDATION", str(exc), 400)

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(_request: Request, exc: RequestValidationError):
        return _error_response("VALIDATION", str(exc.errors()[:1]), 400)

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_handler(_request: Request, exc: StarletteHTTPException):
        code = "NOT_FOUND" if exc.status_code == 404 else "VALIDATION"
        return _error_response(code, str(exc.detail), exc.status_code)

    @app.exception_handler(Exception)
    async def fallback_handler(_request: Request, _exc: Exception):
        return _error_response("INTERNAL", "internal error", 500)

    @app.get(f"{prefix}/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post(f"{prefix}/corpora", status_code=201)
    async def upload_corpus(request: Request):
        body = await request.body()
        return _ingest_corpus_zip(registry, body)

    @app.get(prefix + "/corpora/{corpus_id}")
    def get_corpus(corpus_id: str):
        return registry.corpus_info(corpus_id)

    @app.post(f"{prefix}/jobs", status_code=201)
    def submit_job(spec: JobSpec):
        job_id = registry.submit_job(
            spec.kind, spec.corpus_id, config=spec.config,
            parent_model_id=spec.parent_model_id,
        )
        return _job_json(registry.get_job(job_id))

    @app.get(prefix + "/jobs/{job_id}")
    def get_job(job_id: str):
        return _job_json(registry.get_job(job_id))

    @app.delete(prefix + "/jobs/{job_id}")
    def cancel_job(job_id: str):
        return _job_json(registry.cancel_job(job_id))

    @app.get(f"{prefix}/models")
    def list_models():
        return {"models": [_record_json(r) for r in registry.list_models()]}

    @app.get(prefix + "/models/{model_id}")
    def get_model(model_id: str):
        return _record_json(registry.get_model_record(model_id))

    @app.get(prefix + "/models/{model_id}/export")
    def export_model(model_id: str):
        _record, artifact = registry.load_artifact(model_id)
        return Response(content=artifact, media_type="application/octet-stream")

    @app.post(prefix + "/models/{model_id}/transcriptions")
    async def transcribe(model_id: str, request: Request, beam_width: int | None = None):
        model = registry.load_acoustic_model(model_id)
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        items: list[tuple[str, bytes]] = []
        if "zip" in content_type:
            try:
                archive = zipfile.ZipFile(io.BytesIO(body))
            except zipfile.BadZipFile as exc:
                raise errors.UnsupportedEncoding(f"not a zip archive: {exc}")
            for name in sorted(archive.namelist()):
                if name.endswith(".wav"):
                    items.append((Path(name).stem, archive.read(name)))
            if not items:
                raise errors.EmptyCorpus("zip holds no .wav entries")
        else:
            items.append((request.query_params.get("utterance_id", "utt0"), body))

        results = []
        for utterance_id, wav_bytes in items:
            audio = parse_wav(wav_bytes)
            decoded = model.transcribe(audio, beam_width=beam_width)
            phonemes = decoded.to_text(model.inventory)
            transcription_id = registry.record_transcription(
                model_id, utterance_id, wav_bytes, phonemes
            )
            results.append(
                {
                    "transcription_id": transcription_id,
                    "utterance_id": utterance_id,
                    "phonemes": phonemes,
                }
            )
        return {"transcriptions": results}

    @app.put(prefix + "/transcriptions/{transcription_id}")
    def put_correction(transcription_id: str, body: CorrectionBody):
        stored = registry.put_correction(transcription_id, body.text, body.consent)
        return {"transcription_id": transcription_id, "stored": stored}

    @app.post(prefix + "/models/{model_id}/glosses")
    def gloss_sentences(model_id: str, req: GlossRequest):
        model = registry.load_gloss_model(model_id)
        results = []
        for sentence in req.sentences:
            tokens = sentence.split()
            suggestions = suggest_glosses(tokens, model, k=req.k) if tokens else []
            results.append(
                [
                    {
                        "token": tokens[s.token_index],
                        "token_index": s.token_index,
                        "covered_span": list(s.covered_span),
                        "candidates": [
                            {"gloss": list(c.gloss), "score": c.score}
                            for c in s.candidates
                        ],
                    }
                    for s in suggestions
                ]
            )
        return {"results": results}

    if ui_dir is not None:
        app.mount(ui_path, StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def bind_socket(addr: str) -> socket.socket:
    """Bind the listen socket up front so failures surface as BindFailure."""
    host, _, port_text = addr.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise errors.BindFailure(f"bad address {addr!r}, expected host:port")
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host or "127.0.0.1", port))
    except OSError as exc:
        sock.close()
        raise errors.BindFailure(f"cannot bind {addr}: {exc}") from exc
    sock.listen(128)
    return sock


def make_server(app: FastAPI) -> uvicorn.Server:
    config = uvicorn.Config(app, log_level="warning", access_log=False)
    return uvicorn.Server(config)


def serve(
    addr: str = DEFAULT_ADDR,
    store_path: str | Path = "store",
    workers: int = 1,
    ui_dir: Path | None = None,
) -> None:
    """Run the service until interrupted; blocks the calling thread."""
    registry = Registry(Path(store_path), workers=workers)
    sock = bind_socket(addr)
    app = create_app(registry, ui_dir=ui_dir)
    server = make_server(app)
    try:
        server.run(sockets=[sock])
    finally:
        registry.close()
        sock.close()
