"""Small fully-connected networks with hand-written backprop, Adam, and a tanh-Gaussian head.

Everything runs in float64 on numpy arrays, batch-first: ``x`` has shape ``(B, in)``.
"""

from __future__ import annotations

import base64
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ShapeMismatch, VersionMismatch

FORMAT_VERSION = 1
LOG_2PI = math.log(2.0 * math.pi)
SQUASH_EPS = 1e-6


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    output_dim: int
    hidden_dims: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    head: str = "linear"  # or "gaussian": output_dim means and output_dim log-stds

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ValueError("all layer sizes must be >= 1")
        if self.activation not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.head not in ("linear", "gaussian"):
            raise ValueError(f"unknown head {self.head!r}")

    @property
    def layer_sizes(self) -> list[int]:
        out = self.output_dim * (2 if self.head == "gaussian" else 1)
        return [self.input_dim, *self.hidden_dims, out]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        return cls(int(d["input_dim"]), int(d["output_dim"]), tuple(int(h) for h in d["hidden_dims"]),
                   d.get("activation", "relu"), d.get("head", "linear"))


class Mlp:
    """Affine layers with an activation between them; the last layer stays linear."""

    def __init__(self, spec: MlpSpec, params: list[np.ndarray]):
        self.spec = spec
        sizes = spec.layer_sizes
        if len(params) != 2 * (len(sizes) - 1):
            raise ShapeMismatch("parameter list does not match the layer count")
        for k, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            if params[2 * k].shape != (a, b) or params[2 * k + 1].shape != (b,):
                raise ShapeMismatch(f"layer {k}: expected W{(a, b)} and b({b},), got "
                                    f"{params[2 * k].shape} and {params[2 * k + 1].shape}")
        self.params = params

    @classmethod
    def init(cls, spec: MlpSpec, rng: np.random.Generator) -> "Mlp":
        params = []
        sizes = spec.layer_sizes
        for a, b in zip(sizes[:-1], sizes[1:]):
            lim = math.sqrt(6.0 / (a + b))
            params.append(rng.uniform(-lim, lim, size=(a, b)))
            params.append(np.zeros(b))
        return cls(spec, params)

    def copy(self) -> "Mlp":
        return Mlp(self.spec, [p.copy() for p in self.params])

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def _act(self, z):
        return np.maximum(z, 0.0) if self.spec.activation == "relu" else np.tanh(z)

    def forward(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.spec.input_dim:
            raise ShapeMismatch(f"expected input width {self.spec.input_dim}, got {x.shape[1]}")
        cache = [x]
        h = x
        n = self.n_layers
        for k in range(n):
            z = h @ self.params[2 * k] + self.params[2 * k + 1]
            if k < n - 1:
                h = self._act(z)
                cache.append(h)
            else:
                h = z
        return (h[0] if squeeze else h), (cache, squeeze)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of ``sum(grad_out * output)`` w.r.t. every parameter and the input."""
        acts, squeeze = cache
        g = np.asarray(grad_out, dtype=float)
        if squeeze:
            g = g[None, :]
        if g.shape != (acts[0].shape[0], self.spec.layer_sizes[-1]):
            raise ShapeMismatch(f"upstream gradient shape {g.shape} does not match the output")
        grads: list[Optional[np.ndarray]] = [None] * len(self.params)
        for k in range(self.n_layers - 1, -1, -1):
            h_in = acts[k]
            grads[2 * k] = h_in.T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            g = g @ self.params[2 * k].T
            if k > 0:
                h = acts[k]
                if self.spec.activation == "relu":
                    g = g * (h > 0.0)
                else:
                    g = g * (1.0 - h * h)
        return grads, (g[0] if squeeze else g)


class Adam:
    def __init__(self, params: list[np.ndarray], beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        if len(grads) != len(params):
            raise ShapeMismatch("gradient list does not match parameters")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "m": [_b64(a) for a in self.m], "v": [_b64(a) for a in self.v],
                "shapes": [list(a.shape) for a in self.m]}

    @classmethod
    def from_state_dict(cls, d: dict, params: list[np.ndarray]) -> "Adam":
        opt = cls(params, d["beta1"], d["beta2"], d["eps"])
        shapes = [tuple(s) for s in d["shapes"]]
        if shapes != [p.shape for p in params]:
            raise ShapeMismatch("optimizer state does not match parameter shapes")
        opt.m = [_unb64(s, sh) for s, sh in zip(d["m"], shapes)]
        opt.v = [_unb64(s, sh) for s, sh in zip(d["v"], shapes)]
        opt.t = int(d["t"])
        return opt


# -- squashed Gaussian ------------------------------------------------------------------
def gaussian_head(out: np.ndarray, log_std_min: float = -20.0, log_std_max: float = 2.0):
    """Split a gaussian-head output into mean and clamped log-std; the mask marks unclamped entries."""
    d = out.shape[-1] // 2
    mean = out[..., :d]
    raw = out[..., d:]
    log_std = np.clip(raw, log_std_min, log_std_max)
    mask = (raw >= log_std_min) & (raw <= log_std_max)
    return mean, log_std, mask


def sample_squashed_gaussian(mean, log_std, noise):
    """``a = tanh(mean + exp(log_std) * noise)`` with its log-density under the squashed law.

    Returns ``(a, log_prob, cache)``; ``log_prob`` sums over the last axis.
    """
    std = np.exp(log_std)
    u = mean + std * noise
    a = np.tanh(u)
    one_m = 1.0 - a * a
    logp = (-0.5 * noise * noise - log_std - 0.5 * LOG_2PI - np.log(one_m + SQUASH_EPS)).sum(axis=-1)
    return a, logp, (a, one_m, std, noise)


def squashed_backward(cache, grad_a, grad_logp):
    """Pull gradients on ``a`` and ``log_prob`` back to ``mean`` and ``log_std`` (noise held fixed)."""
    a, one_m, std, noise = cache
    g_logp = np.asarray(grad_logp)[..., None]
    grad_u = grad_a * one_m + g_logp * (2.0 * a * one_m / (one_m + SQUASH_EPS))
    grad_mean = grad_u
    grad_log_std = grad_u * std * noise - g_logp
    return grad_mean, grad_log_std


def squashed_log_prob(mean, log_std, a):
    """Log-density of an already squashed action (used for stored actions)."""
    a = np.clip(a, -1.0 + SQUASH_EPS, 1.0 - SQUASH_EPS)
    u = np.arctanh(a)
    z = (u - mean) / np.exp(log_std)
    return (-0.5 * z * z - log_std - 0.5 * LOG_2PI - np.log(1.0 - a * a + SQUASH_EPS)).sum(axis=-1)


# -- serialization ----------------------------------------------------------------------
def _b64(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _unb64(s: str, shape) -> np.ndarray:
    a = np.frombuffer(base64.b64decode(s), dtype="<f8").astype(np.float64)
    if a.size != int(np.prod(shape)):
        raise ShapeMismatch(f"encoded array holds {a.size} values, expected shape {tuple(shape)}")
    return a.reshape(shape)


def save_weights(net: Mlp, optimizer: Optional[Adam] = None, metadata: Optional[dict] = None) -> dict:
    layers = []
    for k in range(net.n_layers):
        W, b = net.params[2 * k], net.params[2 * k + 1]
        layers.append({"W": _b64(W), "W_shape": list(W.shape), "b": _b64(b), "b_shape": list(b.shape)})
    doc = {"format_version": FORMAT_VERSION, "spec": net.spec.to_dict(), "layers": layers,
           "metadata": dict(metadata or {})}
    if optimizer is not None:
        doc["optimizer_state"] = optimizer.state_dict()
    return doc


def load_weights(doc: dict, expect: Optional[MlpSpec] = None, require_optimizer: bool = False):
    """Rebuild ``(Mlp, Adam | None)`` from a document produced by :func:`save_weights`."""
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported weight format {doc.get('format_version')!r}")
    spec = MlpSpec.from_dict(doc["spec"])
    if expect is not None and spec != expect:
        raise ShapeMismatch(f"checkpoint spec {spec} does not match expected {expect}")
    params = []
    for lay in doc["layers"]:
        params.append(_unb64(lay["W"], lay["W_shape"]))
        params.append(_unb64(lay["b"], lay["b_shape"]))
    net = Mlp(spec, params)
    opt = None
    if "optimizer_state" in doc:
        opt = Adam.from_state_dict(doc["optimizer_state"], net.params)
    elif require_optimizer:
        raise VersionMismatch("checkpoint carries no optimizer state")
    return net, opt
