"""Error taxonomy for the annotation backend.

Every failure a caller can act on gets its own class so the API layer can
map it onto a stable error code without string matching.
"""


class AnnolabError(Exception):
    """Base class for all domain errors."""


# --- corpus ingestion ---

class NotWav(AnnolabError):
    """Input bytes are not a RIFF/WAVE container."""


class UnsupportedEncoding(AnnolabError):
    """WAV is not 16-bit PCM mono."""


class Truncated(AnnolabError):
    """Declared WAV data size exceeds the bytes actually present."""


class EmptyTranscript(AnnolabError):
    """Transcript contains no phoneme tokens."""


class DuplicateId(AnnolabError):
    """Two corpus items share an utterance id."""


class LineCountMismatch(AnnolabError):
    """Parallel corpus sides have different line counts."""


class EmptyLine(AnnolabError):
    """A parallel corpus line is empty on one side."""


# --- feature extraction ---

class TooShort(AnnolabError):
    """Audio is shorter than one analysis window."""


class DimensionMismatch(AnnolabError):
    """Feature dimension does not match expected dimension."""


# --- alignment / glossing ---

class EmptyCorpus(AnnolabError):
    """Training corpus has no items."""


class IndexOutOfBounds(AnnolabError):
    """Alignment link points outside the sentence pair."""


class LengthMismatch(AnnolabError):
    """Number of alignments does not match number of sentence pairs."""


# --- CTC / acoustic model ---

class LabelTooLong(AnnolabError):
    """Label sequence cannot fit in the available frames."""


class EmptyReference(AnnolabError):
    """Error-rate reference sequence is empty."""


class InventoryMismatch(AnnolabError):
    """Corpus symbols are not covered by the model inventory."""


# --- registry / jobs ---

class NotFound(AnnolabError):
    """No record with the given id."""


class UnknownCorpus(NotFound):
    """Job references a corpus id that does not exist."""


class UnknownParent(NotFound):
    """Job references a parent model id that does not exist."""


class KindMismatch(AnnolabError):
    """Parent model kind does not match the job kind."""


class AlreadyTerminal(AnnolabError):
    """Job is already in a terminal state."""


class CorruptArtifact(AnnolabError):
    """Stored model artifact fails its checksum or cannot be decoded."""


class JobCancelled(AnnolabError):
    """Raised inside a worker when a cancellation flag is observed."""


# --- service ---

class BindFailure(AnnolabError):
    """Server could not bind the requested address."""


class StoreUnwritable(AnnolabError):
    """Store path is not writable."""
