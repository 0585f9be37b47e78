"""Small 1-D convolutional autoencoder with hand-written backpropagation.

Encoder: conv(1->8) ReLU conv(8->16) ReLU; decoder: deconv(16->8) ReLU
deconv(8->1) sigmoid. Every layer uses kernel 5, stride 2, padding 2, and the
transposed layers add one sample of output padding, so a sequence whose length
is a multiple of 4 keeps its length.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

KERNEL = 5
STRIDE = 2
PADDING = 2
OUTPUT_PADDING = 1


@dataclass(frozen=True)
class LayerSpec:
    in_channels: int
    out_channels: int
    kernel: int = KERNEL
    stride: int = STRIDE
    transposed: bool = False

    @property
    def weight_shape(self) -> tuple[int, int, int]:
        # Transposed layers keep the (in, out, k) layout used by common frameworks.
        if self.transposed:
            return (self.in_channels, self.out_channels, self.kernel)
        return (self.out_channels, self.in_channels, self.kernel)


ARCHITECTURE: tuple[LayerSpec, ...] = (
    LayerSpec(1, 8),
    LayerSpec(8, 16),
    LayerSpec(16, 8, transposed=True),
    LayerSpec(8, 1, transposed=True),
)


class Autoencoder:
    """Weights for the fixed architecture; ``params`` alternates weight, bias."""

    def __init__(self, params: list[np.ndarray]):
        if len(params) != 2 * len(ARCHITECTURE):
            raise ValueError(f"expected {2 * len(ARCHITECTURE)} tensors, got {len(params)}")
        for spec, w, b in zip(ARCHITECTURE, params[::2], params[1::2]):
            if w.shape != spec.weight_shape or b.shape != (spec.out_channels,):
                raise ValueError(f"bad tensor shapes {w.shape}/{b.shape} for layer {spec}")
        self.params = [np.asarray(p, dtype=np.float64) for p in params]

    @classmethod
    def init(cls, seed: int = 0) -> "Autoencoder":
        rng = np.random.default_rng(seed)
        params = []
        for spec in ARCHITECTURE:
            fan_in = spec.in_channels * spec.kernel
            if spec.transposed:
                # Each output sample sees about kernel/stride taps per input channel.
                fan_in = spec.in_channels * spec.kernel // spec.stride
            bound = np.sqrt(6.0 / fan_in)
            params.append(rng.uniform(-bound, bound, spec.weight_shape))
            params.append(np.zeros(spec.out_channels))
        return cls(params)

    @classmethod
    def zeros(cls) -> "Autoencoder":
        params = []
        for spec in ARCHITECTURE:
            params += [np.zeros(spec.weight_shape), np.zeros(spec.out_channels)]
        return cls(params)

    def copy(self) -> "Autoencoder":
        return Autoencoder([p.copy() for p in self.params])

    def as_float32(self) -> "Autoencoder":
        """Weights rounded to float32, the precision stored in key files."""
        return Autoencoder([p.astype(np.float32).astype(np.float64) for p in self.params])

    def __eq__(self, other):
        if not isinstance(other, Autoencoder):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.params, other.params))


# --- layer primitives ---------------------------------------------------------

def _conv_forward(x, w, b):
    cin, length = x.shape
    xp = np.pad(x, ((0, 0), (PADDING, PADDING)))
    lo = (length + 2 * PADDING - KERNEL) // STRIDE + 1
    idx = STRIDE * np.arange(lo)[None, :] + np.arange(KERNEL)[:, None]
    cols = xp[:, idx]  # (cin, K, lo)
    out = np.einsum("oik,ikl->ol", w, cols) + b[:, None]
    return out, (cols, length)


def _conv_backward(dout, w, cache):
    cols, length = cache
    lo = dout.shape[1]
    dw = np.einsum("ol,ikl->oik", dout, cols)
    db = dout.sum(axis=1)
    dcols = np.einsum("oik,ol->ikl", w, dout)
    dxp = np.zeros((w.shape[1], length + 2 * PADDING))
    for k in range(KERNEL):
        dxp[:, k + STRIDE * np.arange(lo)] += dcols[:, k, :]
    return dxp[:, PADDING : PADDING + length], dw, db


def _deconv_forward(x, w, b):
    cin, length = x.shape
    full = (length - 1) * STRIDE + KERNEL + OUTPUT_PADDING
    lo = full - 2 * PADDING
    y = np.zeros((w.shape[1], full))
    pos = STRIDE * np.arange(length)
    for k in range(KERNEL):
        y[:, k + pos] += w[:, :, k].T @ x
    out = y[:, PADDING : PADDING + lo] + b[:, None]
    return out, (x, full)


def _deconv_backward(dout, w, cache):
    x, full = cache
    length = x.shape[1]
    dy = np.zeros((w.shape[1], full))
    dy[:, PADDING : PADDING + dout.shape[1]] = dout
    pos = STRIDE * np.arange(length)
    dx = np.zeros_like(x)
    dw = np.empty_like(w)
    for k in range(KERNEL):
        g = dy[:, k + pos]
        dx += w[:, :, k] @ g
        dw[:, :, k] = x @ g.T
    return dx, dw, dout.sum(axis=1)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _pad_to_multiple(x, m=4):
    extra = (-len(x)) % m
    if len(x) + extra < m:
        extra = m - len(x)
    if extra:
        x = np.concatenate([x, np.full(extra, x[-1])])
    return x


def _forward(model: Autoencoder, x: np.ndarray):
    """Forward pass on an already padded sequence, returning output and caches."""
    h = x[None, :]
    caches = []
    n_layers = len(ARCHITECTURE)
    for i, spec in enumerate(ARCHITECTURE):
        w, b = model.params[2 * i], model.params[2 * i + 1]
        if spec.transposed:
            z, cache = _deconv_forward(h, w, b)
        else:
            z, cache = _conv_forward(h, w, b)
        if i == n_layers - 1:
            h = _sigmoid(z)
        else:
            h = np.maximum(z, 0.0)
        caches.append((cache, z))
    return h[0], caches


def ae_forward(model: Autoencoder, values) -> np.ndarray:
    """Run the autoencoder; the output has the length of the input."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if len(x) == 0:
        return np.zeros(0)
    out, _ = _forward(model, _pad_to_multiple(x))
    return out[: len(x)]


def loss_and_grads(model: Autoencoder, inputs, targets) -> tuple[float, list[np.ndarray]]:
    """Mean squared error over the unpadded samples and its parameter gradients."""
    x = np.asarray(inputs, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    xp = _pad_to_multiple(x)
    out, caches = _forward(model, xp)
    n = len(x)
    diff = out[:n] - t
    loss = float(np.mean(diff**2))

    dh = np.zeros((1, len(out)))
    dh[0, :n] = 2.0 * diff / n
    grads: list[np.ndarray] = [None] * len(model.params)
    for i in reversed(range(len(ARCHITECTURE))):
        cache, z = caches[i]
        if i == len(ARCHITECTURE) - 1:
            s = _sigmoid(z)
            dz = dh * s * (1.0 - s)
        else:
            dz = dh * (z > 0)
        w = model.params[2 * i]
        if ARCHITECTURE[i].transposed:
            dh, dw, db = _deconv_backward(dz, w, cache)
        else:
            dh, dw, db = _conv_backward(dz, w, cache)
        grads[2 * i], grads[2 * i + 1] = dw, db
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 2000
    target_mse: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass
class TrainResult:
    model: Autoencoder
    mse: float
    epochs: int
    converged: bool


class TrainingDiverged(RuntimeError):
    pass


def fit(inputs, targets, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Full-batch Adam on the MSE between ``ae_forward(inputs)`` and ``targets``.

    Stops as soon as the float32-rounded model reaches ``cfg.target_mse``;
    otherwise returns the best float32-rounded model seen.
    """
    x = np.asarray(inputs, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if len(x) != len(t):
        raise ValueError(f"input length {len(x)} != target length {len(t)}")
    if len(x) < 16:
        raise ValueError(f"need at least 16 training samples, got {len(x)}")

    model = Autoencoder.init(cfg.seed)
    m = [np.zeros_like(p) for p in model.params]
    v = [np.zeros_like(p) for p in model.params]
    best, best_loss, epoch = None, np.inf, 0
    for epoch in range(1, cfg.max_epochs + 1):
        loss, grads = loss_and_grads(model, x, t)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        if loss < best_loss:
            best, best_loss = model.copy(), loss
        if loss <= cfg.target_mse:
            rounded = model.as_float32()
            rounded_loss = float(np.mean((ae_forward(rounded, x) - t) ** 2))
            if rounded_loss <= cfg.target_mse:
                log.debug("autoencoder converged at epoch %d, mse %.3g", epoch, rounded_loss)
                return TrainResult(rounded, rounded_loss, epoch, True)
        for i, (p, g) in enumerate(zip(model.params, grads)):
            m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g
            v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g
            m_hat = m[i] / (1 - cfg.beta1**epoch)
            v_hat = v[i] / (1 - cfg.beta2**epoch)
            p -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)

    final_loss = float(np.mean((ae_forward(model, x) - t) ** 2))
    if final_loss < best_loss:
        best, best_loss = model, final_loss
    rounded = best.as_float32()
    rounded_loss = float(np.mean((ae_forward(rounded, x) - t) ** 2))
    log.info("autoencoder stopped after %d epochs, mse %.3g", epoch, rounded_loss)
    return TrainResult(rounded, rounded_loss, epoch, rounded_loss <= cfg.target_mse)
