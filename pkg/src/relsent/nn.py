"""Small neural-network engine with hand-written backward passes.

Every layer follows the same calling convention::

    y, cache = layer.forward(x)
    dx = layer.backward(dy, cache)     # accumulates into each Parameter.grad

The cache is returned rather than stored on the layer, so a trained layer
holds no per-call state and can be shared between threads for inference.
Activations are 2-D float64 arrays of shape ``(sequence length, features)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NumericFault, ShapeError

log = logging.getLogger(__name__)

DTYPE = np.float64
PROB_FLOOR = 1e-12


@dataclass(eq=False)
class Parameter:
    """A trainable array with its gradient accumulator and RMSProp cache."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False, repr=False)
    rms_cache: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.value = np.array(self.value, dtype=DTYPE)
        self.grad = np.zeros_like(self.value)
        self.rms_cache = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


# ---------------------------------------------------------------------------
# initialisation


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def recurrent_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    limit = 1.0 / math.sqrt(n)
    return rng.uniform(-limit, limit, size=(n, n))


def embedding_uniform(rng: np.random.Generator, rows: int, cols: int, scale: float = 0.05) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(rows, cols))


# ---------------------------------------------------------------------------
# activations


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_2d(x: np.ndarray, cols: int, what: str) -> None:
    if x.ndim != 2 or x.shape[1] != cols:
        raise ShapeError(f"{what}: expected (n, {cols}) input, got {x.shape}")


# ---------------------------------------------------------------------------
# layers


class Embedding:
    """Lookup table: row ``n`` of the output is ``table[indices[n]]``."""

    def __init__(self, table: Parameter):
        self.table = table

    def parameters(self) -> list[Parameter]:
        return [self.table]

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    def forward(self, indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        rows = self.table.shape[0]
        bad = np.flatnonzero((idx < 0) | (idx >= rows))
        if bad.size:
            pos = int(bad[0])
            raise IndexError(
                f"{self.table.name}: index {int(idx[pos])} at position {pos} "
                f"out of range for {rows} rows"
            )
        return self.table.value[idx], idx

    def backward(self, dout: np.ndarray, idx: np.ndarray) -> None:
        np.add.at(self.table.grad, idx, dout)


class Conv1D:
    """Same-length 1-D convolution over a zero-padded sequence, then ReLU.

    Position ``n`` sees the concatenation of rows ``n - w//2 .. n + w//2``;
    ``kernel`` has shape ``(maps, width * d_in)``.
    """

    def __init__(self, kernel: Parameter, bias: Parameter, width: int):
        if width < 1 or width % 2 == 0:
            raise ShapeError(f"convolution width must be odd, got {width}")
        if kernel.shape[1] % width:
            raise ShapeError(f"kernel width {kernel.shape[1]} is not a multiple of {width}")
        self.kernel = kernel
        self.bias = bias
        self.width = width

    @classmethod
    def create(cls, name: str, d_in: int, maps: int, width: int, rng: np.random.Generator) -> Conv1D:
        kernel = Parameter(f"{name}.kernel", glorot_uniform(rng, maps, d_in * width))
        bias = Parameter(f"{name}.bias", np.zeros(maps))
        return cls(kernel, bias, width)

    def parameters(self) -> list[Parameter]:
        return [self.kernel, self.bias]

    @property
    def d_in(self) -> int:
        return self.kernel.shape[1] // self.width

    @property
    def d_out(self) -> int:
        return self.kernel.shape[0]

    def _windows(self, x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        half = self.width // 2
        padded = np.zeros((n + 2 * half, x.shape[1]), dtype=DTYPE)
        padded[half : half + n] = x
        return np.concatenate([padded[k : k + n] for k in range(self.width)], axis=1)

    def forward(self, x: np.ndarray):
        _check_2d(x, self.d_in, self.kernel.name)
        z = self._windows(x)
        pre = z @ self.kernel.value.T + self.bias.value
        return relu(pre), (z, pre)

    def backward(self, dy: np.ndarray, cache) -> np.ndarray:
        z, pre = cache
        dpre = dy * (pre > 0)
        self.kernel.grad += dpre.T @ z
        self.bias.grad += dpre.sum(axis=0)
        dz = dpre @ self.kernel.value
        n, d = z.shape[0], self.d_in
        half = self.width // 2
        dpadded = np.zeros((n + 2 * half, d), dtype=DTYPE)
        for k in range(self.width):
            dpadded[k : k + n] += dz[:, k * d : (k + 1) * d]
        return dpadded[half : half + n]


class GRU:
    """Gated recurrent unit with the reset gate applied before the recurrent
    product (Cho et al. 2014)::

        z = sigm(W_z x + U_z h' + b_z)
        r = sigm(W_r x + U_r h' + b_r)
        c = tanh(W_h x + U_h (r * h') + b_h)
        h = (1 - z) * h' + z * c

    The initial state is zero; ``forward`` returns every hidden state.
    """

    GATES = ("z", "r", "h")

    def __init__(self, params: dict[str, Parameter]):
        self.p = params
        self.hidden = params["U_z"].shape[0]

    @classmethod
    def create(cls, name: str, d_in: int, hidden: int, rng: np.random.Generator) -> GRU:
        params: dict[str, Parameter] = {}
        for g in cls.GATES:
            params[f"W_{g}"] = Parameter(f"{name}.W_{g}", glorot_uniform(rng, hidden, d_in))
        for g in cls.GATES:
            params[f"U_{g}"] = Parameter(f"{name}.U_{g}", recurrent_uniform(rng, hidden))
        for g in cls.GATES:
            params[f"b_{g}"] = Parameter(f"{name}.b_{g}", np.zeros(hidden))
        return cls(params)

    def parameters(self) -> list[Parameter]:
        return [self.p[f"{kind}_{g}"] for kind in ("W", "U", "b") for g in self.GATES]

    @property
    def d_in(self) -> int:
        return self.p["W_z"].shape[1]

    def forward(self, x: np.ndarray):
        _check_2d(x, self.d_in, "GRU")
        p = self.p
        n, hdim = x.shape[0], self.hidden
        xz = x @ p["W_z"].value.T + p["b_z"].value
        xr = x @ p["W_r"].value.T + p["b_r"].value
        xh = x @ p["W_h"].value.T + p["b_h"].value
        Uz, Ur, Uh = p["U_z"].value, p["U_r"].value, p["U_h"].value

        hs = np.zeros((n + 1, hdim), dtype=DTYPE)  # hs[0] is the initial state
        zs = np.empty((n, hdim), dtype=DTYPE)
        rs = np.empty((n, hdim), dtype=DTYPE)
        cs = np.empty((n, hdim), dtype=DTYPE)
        for t in range(n):
            h_prev = hs[t]
            z = sigmoid(xz[t] + Uz @ h_prev)
            r = sigmoid(xr[t] + Ur @ h_prev)
            c = np.tanh(xh[t] + Uh @ (r * h_prev))
            hs[t + 1] = (1.0 - z) * h_prev + z * c
            zs[t], rs[t], cs[t] = z, r, c
        return hs[1:].copy(), (x, hs, zs, rs, cs)

    def backward(self, dH: np.ndarray, cache) -> np.ndarray:
        x, hs, zs, rs, cs = cache
        p = self.p
        n, hdim = x.shape[0], self.hidden
        Uz, Ur, Uh = p["U_z"].value, p["U_r"].value, p["U_h"].value
        da_z = np.zeros((n, hdim), dtype=DTYPE)
        da_r = np.zeros((n, hdim), dtype=DTYPE)
        da_h = np.zeros((n, hdim), dtype=DTYPE)
        dUz = np.zeros_like(Uz)
        dUr = np.zeros_like(Ur)
        dUh = np.zeros_like(Uh)
        dh_next = np.zeros(hdim, dtype=DTYPE)
        for t in range(n - 1, -1, -1):
            h_prev, z, r, c = hs[t], zs[t], rs[t], cs[t]
            dh = dH[t] + dh_next
            dz = dh * (c - h_prev)
            dc = dh * z
            dh_prev = dh * (1.0 - z)

            ah = dc * (1.0 - c * c)
            rh = r * h_prev
            dUh += np.outer(ah, rh)
            drh = ah @ Uh
            dr = drh * h_prev
            dh_prev += drh * r

            az = dz * z * (1.0 - z)
            ar = dr * r * (1.0 - r)
            dUz += np.outer(az, h_prev)
            dUr += np.outer(ar, h_prev)
            dh_prev += az @ Uz + ar @ Ur

            da_z[t], da_r[t], da_h[t] = az, ar, ah
            dh_next = dh_prev

        for g, da in (("z", da_z), ("r", da_r), ("h", da_h)):
            p[f"W_{g}"].grad += da.T @ x
            p[f"b_{g}"].grad += da.sum(axis=0)
        p["U_z"].grad += dUz
        p["U_r"].grad += dUr
        p["U_h"].grad += dUh
        return da_z @ p["W_z"].value + da_r @ p["W_r"].value + da_h @ p["W_h"].value


class Dense:
    """Row-wise affine map followed by ``relu``, ``softmax`` or ``identity``."""

    ACTIVATIONS = ("identity", "relu", "softmax")

    def __init__(self, weight: Parameter, bias: Parameter, activation: str = "identity"):
        if activation not in self.ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if weight.shape[0] != bias.shape[0]:
            raise ShapeError(f"{weight.name}: bias length {bias.shape[0]} != {weight.shape[0]} outputs")
        self.weight = weight
        self.bias = bias
        self.activation = activation

    @classmethod
    def create(cls, name: str, d_in: int, d_out: int, rng: np.random.Generator,
               activation: str = "identity") -> Dense:
        w = Parameter(f"{name}.weight", glorot_uniform(rng, d_out, d_in))
        b = Parameter(f"{name}.bias", np.zeros(d_out))
        return cls(w, b, activation)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    @property
    def d_in(self) -> int:
        return self.weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: np.ndarray):
        _check_2d(x, self.d_in, self.weight.name)
        pre = x @ self.weight.value.T + self.bias.value
        if self.activation == "relu":
            y = relu(pre)
        elif self.activation == "softmax":
            y = softmax(pre)
        else:
            y = pre
        return y, (x, pre, y)

    def backward(self, dy: np.ndarray, cache) -> np.ndarray:
        x, pre, y = cache
        if self.activation == "relu":
            dpre = dy * (pre > 0)
        elif self.activation == "softmax":
            dpre = y * (dy - (dy * y).sum(axis=1, keepdims=True))
        else:
            dpre = dy
        self.weight.grad += dpre.T @ x
        self.bias.grad += dpre.sum(axis=0)
        return dpre @ self.weight.value


class Maxout:
    """Element-wise maximum over several affine pieces (Goodfellow et al. 2013).

    Gradient flows only to the winning piece; ties go to the lowest index.
    """

    def __init__(self, pieces: Sequence[tuple[Parameter, Parameter]]):
        if len(pieces) < 2:
            raise ShapeError("maxout needs at least two pieces")
        shape = pieces[0][0].shape
        for w, b in pieces:
            if w.shape != shape or b.shape != (shape[0],):
                raise ShapeError(f"maxout piece {w.name} has shape {w.shape}, expected {shape}")
        self.pieces = list(pieces)

    @classmethod
    def create(cls, name: str, d_in: int, d_out: int, rng: np.random.Generator, pieces: int = 2) -> Maxout:
        return cls([
            (Parameter(f"{name}.W{k}", glorot_uniform(rng, d_out, d_in)),
             Parameter(f"{name}.b{k}", np.zeros(d_out)))
            for k in range(pieces)
        ])

    def parameters(self) -> list[Parameter]:
        return [p for piece in self.pieces for p in piece]

    @property
    def d_in(self) -> int:
        return self.pieces[0][0].shape[1]

    @property
    def d_out(self) -> int:
        return self.pieces[0][0].shape[0]

    def forward(self, x: np.ndarray):
        _check_2d(x, self.d_in, "maxout")
        outs = np.stack([x @ w.value.T + b.value for w, b in self.pieces])
        winner = np.argmax(outs, axis=0)  # first max wins ties
        y = np.take_along_axis(outs, winner[None], axis=0)[0]
        return y, (x, winner)

    def backward(self, dy: np.ndarray, cache) -> np.ndarray:
        x, winner = cache
        dx = np.zeros_like(x)
        for k, (w, b) in enumerate(self.pieces):
            dpre = np.where(winner == k, dy, 0.0)
            w.grad += dpre.T @ x
            b.grad += dpre.sum(axis=0)
            dx += dpre @ w.value
        return dx


class Dropout:
    """Inverted dropout: survivors are scaled by ``1/(1-p)`` during training so
    that inference is the identity."""

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"drop probability must lie in [0, 1), got {p}")
        self.p = p

    def parameters(self) -> list[Parameter]:
        return []

    def forward(self, x: np.ndarray, rng: np.random.Generator | None = None, train: bool = False):
        if not train or self.p == 0.0:
            return x, None
        if rng is None:
            raise ValueError("training-mode dropout needs a random generator")
        mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * mask, mask

    def backward(self, dy: np.ndarray, mask) -> np.ndarray:
        return dy if mask is None else dy * mask


# ---------------------------------------------------------------------------
# losses


def cross_entropy_loss(probs: np.ndarray, targets: Sequence[int]) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy over rows.

    Returns the loss and its gradient with respect to the pre-softmax logits,
    ``(p - onehot) / N``.
    """
    probs = np.asarray(probs, dtype=DTYPE)
    t = np.asarray(targets, dtype=np.int64).reshape(-1)
    n = probs.shape[0]
    if t.shape[0] != n:
        raise ShapeError(f"{n} probability rows but {t.shape[0]} targets")
    if n == 0:
        return 0.0, np.zeros_like(probs)
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-6):
        raise ValueError("probability rows must sum to 1")
    picked = probs[np.arange(n), t]
    if np.any(picked < PROB_FLOOR):
        log.warning("target probability below %.0e clamped in cross-entropy", PROB_FLOOR)
        picked = np.maximum(picked, PROB_FLOOR)
    loss = float(-np.log(picked).mean())
    grad = probs.copy()
    grad[np.arange(n), t] -= 1.0
    return loss, grad / n


def binary_cross_entropy_loss(probability: float, target: int) -> tuple[float, float]:
    """Binary cross-entropy; the gradient is w.r.t. the pre-sigmoid logit."""
    p = min(max(float(probability), PROB_FLOOR), 1.0 - PROB_FLOOR)
    loss = -(target * math.log(p) + (1 - target) * math.log(1.0 - p))
    return loss, float(probability) - target


# ---------------------------------------------------------------------------
# optimisation


@dataclass(frozen=True)
class RmsPropConfig:
    learning_rate: float = 0.001
    decay_rho: float = 0.9
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.decay_rho < 1.0:
            raise ValueError("decay_rho must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def rmsprop_step(param: Parameter, config: RmsPropConfig) -> Parameter:
    """Apply one RMSProp update in place and clear the gradient."""
    g = param.grad
    if not np.all(np.isfinite(g)):
        raise NumericFault(f"non-finite gradient in parameter {param.name!r}")
    rho = config.decay_rho
    param.rms_cache *= rho
    param.rms_cache += (1.0 - rho) * g * g
    param.value -= config.learning_rate * g / (np.sqrt(param.rms_cache) + config.epsilon)
    param.zero_grad()
    return param


def apply_rmsprop(params: Iterable[Parameter], config: RmsPropConfig) -> None:
    for p in params:
        rmsprop_step(p, config)


# ---------------------------------------------------------------------------
# training


def assign_parameters(params: Sequence[Parameter], arrays: dict[str, np.ndarray]) -> None:
    names = [p.name for p in params]
    if sorted(names) != sorted(arrays):
        missing = set(names) ^ set(arrays)
        raise ShapeError(f"parameter names do not match the architecture: {sorted(missing)}")
    for p in params:
        a = arrays[p.name]
        if a.shape != p.shape:
            raise ShapeError(f"parameter {p.name}: shape {a.shape}, expected {p.shape}")
        p.value[...] = a


def fit(model, samples: Sequence, epochs: int, rng: np.random.Generator,
        rms: RmsPropConfig | None, loss_fn, label: str) -> list[float]:
    """Shared one-sample-at-a-time RMSProp loop.

    ``loss_fn(sample)`` runs forward and backward for one sample and returns
    its loss. Samples are reshuffled every epoch. Returns mean loss per epoch.
    """
    rms = rms or RmsPropConfig()
    params = model.parameters()
    history: list[float] = []
    for epoch in range(epochs):
        order = rng.permutation(len(samples))
        total = 0.0
        for i in order:
            loss = loss_fn(samples[int(i)])
            if not math.isfinite(loss):
                raise NumericFault(f"{label}: non-finite loss at epoch {epoch + 1}, sample {int(i)}")
            total += loss
            apply_rmsprop(params, rms)
        mean = total / max(len(samples), 1)
        history.append(mean)
        log.info("%s epoch %d/%d loss %.6f", label, epoch + 1, epochs, mean)
    return history


# ---------------------------------------------------------------------------
# gradient checking

LossClosure = Callable[[bool], float]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / scale


def gradient_check_report(closure: LossClosure, params: Sequence[Parameter],
                          epsilon: float = 1e-5) -> dict[str, float]:
    """Maximum relative error per parameter between analytic and central
    finite-difference gradients.

    ``closure(True)`` must run forward and backward, accumulating into each
    parameter's ``grad`` and returning the loss; ``closure(False)`` only runs
    the forward pass. The closure must be deterministic.
    """
    for p in params:
        p.zero_grad()
    closure(True)
    analytic = {id(p): p.grad.copy() for p in params}
    for p in params:
        p.zero_grad()

    report: dict[str, float] = {}
    for p in params:
        flat = p.value.reshape(-1)
        numeric = np.empty(flat.shape[0], dtype=DTYPE)
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = closure(False)
            flat[i] = orig - epsilon
            down = closure(False)
            flat[i] = orig
            numeric[i] = (up - down) / (2.0 * epsilon)
        err = relative_error(analytic[id(p)].reshape(-1), numeric)
        report[p.name] = float(err.max()) if err.size else 0.0
    return report


def gradient_check(closure: LossClosure, params: Sequence[Parameter], epsilon: float = 1e-5) -> float:
    """Largest relative gradient error over every entry of every parameter."""
    report = gradient_check_report(closure, params, epsilon)
    return max(report.values(), default=0.0)
