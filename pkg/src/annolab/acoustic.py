"""Recurrent phoneme recognizer trained with the CTC objective.

A single unidirectional tanh layer feeds a linear projection onto the
inventory plus blank; gradients are hand-derived (verified against finite
differences in the test suite) and applied with Adam, one utterance at a
time. Feature normalization statistics are computed once from the training
corpus and stored with the model so fine-tuning and inference reuse them.
"""

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import AudioBuffer, PhonemeInventory, PhonemeSequence, SpeechCorpus
from .ctc import beam_decode, ctc_loss, greedy_decode
from .errors import (
    CorruptArtifact,
    DimensionMismatch,
    EmptyCorpus,
    InventoryMismatch,
)
from .features import FeatureConfig, FeatureMatrix, FeatureStats, log_mel, normalize
from .metrics import corpus_error_rate

FORMAT_VERSION = 1


@dataclass
class CtcConfig:
    hidden_size: int = 64
    epochs: int = 100
    learning_rate: float = 1e-3
    seed: int = 0
    batch_size: int = 1
    grad_clip_norm: float = 5.0
    # Adam moment decays, standard defaults
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.hidden_size < 1 or self.batch_size < 1:
            raise ValueError("hidden_size and batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0:
            raise ValueError("learning_rate and grad_clip_norm must be positive")

    def to_dict(self) -> dict:
        return {
            "hidden_size": self.hidden_size,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "grad_clip_norm": self.grad_clip_norm,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
        }


PARAM_NAMES = ("wx", "wh", "b", "v", "c")


@dataclass
class AcousticModel:
    inventory: PhonemeInventory
    feature_config: FeatureConfig
    stats: FeatureStats
    params: dict[str, np.ndarray]  # wx (H,D), wh (H,H), b (H,), v (n+1,H), c (n+1,)
    config: CtcConfig

    @property
    def blank_id(self) -> int:
        return len(self.inventory)

    @property
    def input_dim(self) -> int:
        return self.params["wx"].shape[1]

    def features(self, audio: AudioBuffer) -> FeatureMatrix:
        return normalize(log_mel(audio, self.feature_config), self.stats)

    def transcribe(self, audio: AudioBuffer, beam_width: int | None = None) -> PhonemeSequence:
        logprobs = model_forward(self, self.features(audio))
        if beam_width is not None:
            return beam_decode(logprobs, beam_width)
        return greedy_decode(logprobs)


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    final_per: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.epoch_losses)


def init_params(input_dim: int, n_outputs: int, cfg: CtcConfig) -> dict[str, np.ndarray]:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) for every tensor, seeded."""
    h = cfg.hidden_size
    rng = np.random.default_rng(cfg.seed)
    scale = 1.0 / np.sqrt(h)
    return {
        "wx": rng.uniform(-scale, scale, (h, input_dim)),
        "wh": rng.uniform(-scale, scale, (h, h)),
        "b": rng.uniform(-scale, scale, h),
        "v": rng.uniform(-scale, scale, (n_outputs, h)),
        "c": rng.uniform(-scale, scale, n_outputs),
    }


def _forward_states(
    params: dict[str, np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Hidden states (T,H) and log-softmax outputs (T,n+1) for inputs (T,D)."""
    wx, wh, b, v, c = (params[k] for k in PARAM_NAMES)
    t_len = x.shape[0]
    hs = np.empty((t_len, wh.shape[0]))
    h = np.zeros(wh.shape[0])
    for t in range(t_len):
        h = np.tanh(wx @ x[t] + wh @ h + b)
        hs[t] = h
    logits = hs @ v.T + c
    logz = np.logaddexp.reduce(logits, axis=1, keepdims=True)
    return hs, logits - logz


def model_forward(model: AcousticModel, features: FeatureMatrix) -> np.ndarray:
    """Log-probability matrix, shape (T, inventory size + 1)."""
    if features.dim != model.input_dim:
        raise DimensionMismatch(
            f"features have dim {features.dim}, model expects {model.input_dim}"
        )
    _, logprobs = _forward_states(model.params, features.frames)
    return logprobs


def _backward(
    params: dict[str, np.ndarray],
    x: np.ndarray,
    hs: np.ndarray,
    logit_grad: np.ndarray,
) -> dict[str, np.ndarray]:
    """Backpropagation through time for the gradient wrt each parameter."""
    wh, v = params["wh"], params["v"]
    grads = {
        "wx": np.zeros_like(params["wx"]),
        "wh": np.zeros_like(wh),
        "b": np.zeros_like(params["b"]),
        "v": logit_grad.T @ hs,
        "c": logit_grad.sum(axis=0),
    }
    dh_next = np.zeros(wh.shape[0])
    for t in range(x.shape[0] - 1, -1, -1):
        dh = v.T @ logit_grad[t] + dh_next
        da = dh * (1.0 - hs[t] ** 2)
        grads["wx"] += np.outer(da, x[t])
        grads["b"] += da
        if t > 0:
            grads["wh"] += np.outer(da, hs[t - 1])
        dh_next = wh.T @ da
    return grads


def utterance_gradients(
    params: dict[str, np.ndarray], x: np.ndarray, labels: PhonemeSequence
) -> tuple[float, dict[str, np.ndarray]]:
    """CTC loss and parameter gradients for one utterance."""
    hs, logprobs = _forward_states(params, x)
    loss, logit_grad = ctc_loss(logprobs, labels)
    return loss, _backward(params, x, hs, logit_grad)


class _Adam:
    def __init__(self, cfg: CtcConfig, params: dict[str, np.ndarray]):
        self.cfg = cfg
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        cfg = self.cfg
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if norm > cfg.grad_clip_norm:
            scale = cfg.grad_clip_norm / norm
            grads = {k: g * scale for k, g in grads.items()}
        self.t += 1
        for k in params:
            self.m[k] = cfg.beta1 * self.m[k] + (1 - cfg.beta1) * grads[k]
            self.v[k] = cfg.beta2 * self.v[k] + (1 - cfg.beta2) * grads[k] ** 2
            m_hat = self.m[k] / (1 - cfg.beta1**self.t)
            v_hat = self.v[k] / (1 - cfg.beta2**self.t)
            params[k] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def train_acoustic(
    corpus: SpeechCorpus,
    cfg: CtcConfig | None = None,
    init: AcousticModel | None = None,
    epoch_hook=None,
) -> tuple[AcousticModel, TrainReport]:
    """Train (or fine-tune, when `init` is given) on a speech corpus.

    Fine-tuning keeps the parent's inventory, feature statistics, and
    architecture; corpus transcripts are remapped onto the parent inventory
    and must be covered by it. `epoch_hook(completed, mean_loss)` runs after
    every epoch; raising from it aborts training (used for cooperative job
    cancellation).
    """
    if not corpus.items:
        raise EmptyCorpus("speech corpus has no items")
    cfg = cfg if cfg is not None else CtcConfig()

    if init is not None:
        if not init.inventory.covers(corpus.inventory):
            missing = [s for s in corpus.inventory.symbols if s not in init.inventory]
            raise InventoryMismatch(f"symbols not in parent inventory: {missing}")
        inventory = init.inventory
        feature_config = init.feature_config
        stats = init.stats
        params = {k: p.copy() for k, p in init.params.items()}
        remap = [inventory.id_of(s) for s in corpus.inventory.symbols]
        labels = [
            PhonemeSequence([remap[i] for i in item.transcript.ids])
            for item in corpus.items
        ]
    else:
        inventory = corpus.inventory
        feature_config = FeatureConfig()
        raw = [log_mel(item.audio, feature_config) for item in corpus.items]
        stats = FeatureStats.from_matrices(raw)
        params = init_params(raw[0].dim, len(inventory) + 1, cfg)
        labels = [item.transcript for item in corpus.items]

    inputs = [
        normalize(log_mel(item.audio, feature_config), stats).frames
        for item in corpus.items
    ]

    optimizer = _Adam(cfg, params)
    report = TrainReport()
    for epoch in range(cfg.epochs):
        losses = []
        pending: dict[str, np.ndarray] | None = None
        pending_n = 0
        for x, y in zip(inputs, labels):
            loss, grads = utterance_gradients(params, x, y)
            losses.append(loss)
            if pending is None:
                pending = grads
            else:
                for k in pending:
                    pending[k] += grads[k]
            pending_n += 1
            if pending_n == cfg.batch_size:
                optimizer.step(params, {k: g / pending_n for k, g in pending.items()})
                pending, pending_n = None, 0
        if pending is not None:
            optimizer.step(params, {k: g / pending_n for k, g in pending.items()})
        mean_loss = float(np.mean(losses))
        report.epoch_losses.append(mean_loss)
        if epoch_hook is not None:
            epoch_hook(epoch + 1, mean_loss)

    model = AcousticModel(inventory, feature_config, stats, params, cfg)
    decoded = [
        (y, greedy_decode(_forward_states(params, x)[1]))
        for x, y in zip(inputs, labels)
    ]
    report.final_per = corpus_error_rate(decoded)
    return model, report


# --- artifact format: npz with a JSON metadata entry ---


def serialize_acoustic(model: AcousticModel) -> bytes:
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": "transcription",
        "inventory": model.inventory.symbols,
        "feature_config": model.feature_config.to_dict(),
        "config": model.config.to_dict(),
    }
    buf = io.BytesIO()
    np.savez(
        buf,
        meta=np.array(json.dumps(meta)),
        mean=model.stats.mean,
        std=model.stats.std,
        **model.params,
    )
    return buf.getvalue()


def deserialize_acoustic(data: bytes) -> AcousticModel:
    try:
        archive = np.load(io.BytesIO(data), allow_pickle=False)
        meta = json.loads(str(archive["meta"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise CorruptArtifact(
                f"artifact format version {meta.get('format_version')}, "
                f"expected {FORMAT_VERSION}"
            )
        inventory = PhonemeInventory(meta["inventory"])
        feature_config = FeatureConfig(**meta["feature_config"])
        config = CtcConfig(**meta["config"])
        stats = FeatureStats(archive["mean"], archive["std"])
        params = {k: archive[k] for k in PARAM_NAMES}
    except CorruptArtifact:
        raise
    except Exception as exc:
        raise CorruptArtifact(f"cannot decode acoustic artifact: {exc}") from exc
    return AcousticModel(inventory, feature_config, stats, params, config)
