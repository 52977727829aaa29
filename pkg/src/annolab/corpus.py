"""Data model and ingestion for speech corpora, transcriptions, and parallel text.

Transcripts are space-delimited phoneme tokens, one utterance per line.
Audio is 16-bit PCM mono WAV; samples are scaled to floats in [-1, 1].
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateId,
    EmptyLine,
    EmptyTranscript,
    LineCountMismatch,
    NotWav,
    Truncated,
    UnsupportedEncoding,
)

BLANK_MARKER = "<blk>"
SUPPORTED_RATES = (8000, 16000, 22050, 44100, 48000)


class PhonemeInventory:
    """Ordered set of phoneme symbols with dense ids 0..n-1 in insertion order."""

    def __init__(self, symbols=()):
        self.symbols: list[str] = []
        self._ids: dict[str, int] = {}
        for sym in symbols:
            self.add(sym)

    def add(self, symbol: str) -> int:
        """Add a symbol if unseen; return its id either way."""
        if symbol in self._ids:
            return self._ids[symbol]
        if not symbol or symbol != symbol.strip() or any(c.isspace() for c in symbol):
            raise ValueError(f"invalid phoneme symbol: {symbol!r}")
        if symbol == BLANK_MARKER:
            raise ValueError(f"{BLANK_MARKER} is reserved for the CTC blank")
        self._ids[symbol] = len(self.symbols)
        self.symbols.append(symbol)
        return self._ids[symbol]

    def id_of(self, symbol: str) -> int:
        return self._ids[symbol]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, PhonemeInventory) and self.symbols == other.symbols

    def covers(self, other: "PhonemeInventory") -> bool:
        """True if every symbol of `other` is present here."""
        return all(sym in self._ids for sym in other.symbols)


@dataclass
class PhonemeSequence:
    """Inventory ids of one transcription."""

    ids: list[int]

    def __len__(self) -> int:
        return len(self.ids)

    def to_text(self, inventory: PhonemeInventory) -> str:
        return " ".join(inventory.symbols[i] for i in self.ids)

    def validate(self, inventory: PhonemeInventory) -> None:
        for i in self.ids:
            if not 0 <= i < len(inventory):
                raise ValueError(f"phoneme id {i} outside inventory of size {len(inventory)}")


@dataclass
class AudioBuffer:
    """Mono audio, float samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ValueError("audio buffer is empty")
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise ValueError(f"unsupported sample rate {self.sample_rate_hz}")

    def __len__(self) -> int:
        return int(self.samples.size)

    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass
class SpeechItem:
    utterance_id: str
    audio: AudioBuffer
    transcript: PhonemeSequence


@dataclass
class SpeechCorpus:
    items: list[SpeechItem]
    inventory: PhonemeInventory

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class ParallelCorpus:
    """Line-aligned sentence pairs: (source tokens, gloss-or-translation tokens)."""

    pairs: list[tuple[list[str], list[str]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)


def parse_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE container holding 16-bit PCM mono audio.

    Raises:
        NotWav: bytes do not start with a RIFF/WAVE header.
        UnsupportedEncoding: compressed, multi-channel, non-16-bit, or
            unsupported sample rate.
        Truncated: the data chunk declares more bytes than are present.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWav("not a RIFF/WAVE file")

    fmt = None
    pcm = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(data):
                raise NotWav("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            available = len(data) - body_start
            if chunk_size > available:
                raise Truncated(
                    f"data chunk declares {chunk_size} bytes, only {available} present"
                )
            pcm = data[body_start : body_start + chunk_size]
        # chunks are word-aligned: odd sizes carry a pad byte
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None or pcm is None:
        raise NotWav("missing fmt or data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedEncoding(f"audio format {audio_format}, expected PCM (1)")
    if channels != 1:
        raise UnsupportedEncoding(f"{channels} channels, expected mono")
    if bits != 16:
        raise UnsupportedEncoding(f"{bits}-bit samples, expected 16")
    if rate not in SUPPORTED_RATES:
        raise UnsupportedEncoding(f"unsupported sample rate {rate}")
    if len(pcm) == 0:
        raise UnsupportedEncoding("data chunk holds no samples")

    values = np.frombuffer(pcm[: len(pcm) - (len(pcm) % 2)], dtype="<i2")
    return AudioBuffer(values.astype(np.float64) / 32768.0, rate)


def encode_wav(audio: AudioBuffer) -> bytes:
    """Inverse of parse_wav: 44-byte canonical header + PCM16 payload."""
    values = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    pcm = values.tobytes()
    rate = audio.sample_rate_hz
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(pcm),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        rate,
        rate * 2,
        2,
        16,
        b"data",
        len(pcm),
    )
    return header + pcm


def parse_transcript(
    text: str, inventory: PhonemeInventory
) -> tuple[PhonemeSequence, list[str]]:
    """Tokenize a transcript line; append unseen symbols to `inventory`.

    Tokens are split on Unicode whitespace, one token per phoneme.
    Returns the id sequence and the symbols newly added, in first-seen order.
    """
    tokens = text.split()
    if not tokens:
        raise EmptyTranscript("transcript has no tokens")
    discovered = []
    ids = []
    for tok in tokens:
        if tok not in inventory:
            discovered.append(tok)
        ids.append(inventory.add(tok))
    return PhonemeSequence(ids), discovered


def load_speech_corpus(
    manifest: list[tuple[str, bytes, str]],
    inventory: PhonemeInventory | None = None,
) -> SpeechCorpus:
    """Build a SpeechCorpus from (utterance_id, wav bytes, transcript text) entries.

    A shared inventory is grown across all items in manifest order; pass an
    existing inventory to keep previously assigned ids stable.
    """
    if not manifest:
        raise ValueError("manifest is empty")
    inventory = inventory if inventory is not None else PhonemeInventory()
    seen = set()
    items = []
    for utterance_id, wav_bytes, transcript_text in manifest:
        if utterance_id in seen:
            raise DuplicateId(utterance_id)
        seen.add(utterance_id)
        try:
            audio = parse_wav(wav_bytes)
            transcript, _ = parse_transcript(transcript_text, inventory)
        except (NotWav, UnsupportedEncoding, Truncated, EmptyTranscript) as exc:
            raise type(exc)(f"{utterance_id}: {exc}") from exc
        items.append(SpeechItem(utterance_id, audio, transcript))
    return SpeechCorpus(items, inventory)


def load_parallel_corpus(source_text: str, target_text: str) -> ParallelCorpus:
    """Pair up line-aligned source and target text, tokenized on whitespace."""
    src_lines = source_text.splitlines()
    tgt_lines = target_text.splitlines()
    if len(src_lines) != len(tgt_lines):
        raise LineCountMismatch(
            f"{len(src_lines)} source lines vs {len(tgt_lines)} target lines"
        )
    pairs = []
    for lineno, (src, tgt) in enumerate(zip(src_lines, tgt_lines), start=1):
        src_tokens = src.split()
        tgt_tokens = tgt.split()
        if not src_tokens:
            raise EmptyLine(f"line {lineno}: empty source line")
        if not tgt_tokens:
            raise EmptyLine(f"line {lineno}: empty target line")
        pairs.append((src_tokens, tgt_tokens))
    return ParallelCorpus(pairs)


# --- on-disk layout: wav/<id>.wav, txt/<id>.txt, inventory.txt ---


def save_speech_corpus(corpus: SpeechCorpus, root: Path) -> None:
    root = Path(root)
    (root / "wav").mkdir(parents=True, exist_ok=True)
    (root / "txt").mkdir(parents=True, exist_ok=True)
    for item in corpus.items:
        (root / "wav" / f"{item.utterance_id}.wav").write_bytes(encode_wav(item.audio))
        line = item.transcript.to_text(corpus.inventory)
        (root / "txt" / f"{item.utterance_id}.txt").write_text(line + "\n", encoding="utf-8")
    inv = "".join(sym + "\n" for sym in corpus.inventory.symbols)
    (root / "inventory.txt").write_text(inv, encoding="utf-8")


def load_speech_corpus_dir(root: Path) -> SpeechCorpus:
    """Load the wav/ + txt/ + inventory.txt layout, items sorted by utterance id."""
    root = Path(root)
    wav_dir = root / "wav"
    txt_dir = root / "txt"
    if not wav_dir.is_dir() or not txt_dir.is_dir():
        raise FileNotFoundError(f"{root} does not hold a speech corpus layout")
    inventory = PhonemeInventory()
    inv_file = root / "inventory.txt"
    if inv_file.exists():
        for line in inv_file.read_text(encoding="utf-8").splitlines():
            if line.strip():
                inventory.add(line.strip())
    manifest = []
    for wav_path in sorted(wav_dir.glob("*.wav")):
        txt_path = txt_dir / (wav_path.stem + ".txt")
        if not txt_path.exists():
            raise FileNotFoundError(f"missing transcript for {wav_path.stem}")
        manifest.append(
            (wav_path.stem, wav_path.read_bytes(), txt_path.read_text(encoding="utf-8"))
        )
    return load_speech_corpus(manifest, inventory)


def save_parallel_corpus(corpus: ParallelCorpus, root: Path) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    src = "".join(" ".join(s) + "\n" for s, _ in corpus.pairs)
    tgt = "".join(" ".join(t) + "\n" for _, t in corpus.pairs)
    (root / "source.txt").write_text(src, encoding="utf-8")
    (root / "target.txt").write_text(tgt, encoding="utf-8")


def load_parallel_corpus_dir(root: Path) -> ParallelCorpus:
    root = Path(root)
    src = (root / "source.txt").read_text(encoding="utf-8")
    tgt = (root / "target.txt").read_text(encoding="utf-8")
    return load_parallel_corpus(src, tgt)
