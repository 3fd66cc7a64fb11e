"""Minimal dense network stack: tanh MLP, exact reverse-mode gradients,
Adam, and the squashed-Gaussian policy head math.

Parameters are plain numpy arrays; gradient computation is pure. A single
owner mutates parameters during optimizer steps. Each net stores its
parameters in one flat vector (layer weights row-major, then biases), with
per-layer arrays exposed as views, so whole-net optimizer updates and
Polyak averaging are single vector operations.

Float64 is the default and what the gradient-check suite runs on; the
training agent uses float32 nets for speed, which the serialization format
records.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6          # floor inside log(1 - tanh^2 + eps)
_LOG_2PI = math.log(2.0 * math.pi)

_MAGIC = b"TMNN1\n"
_DTYPES = {"<f8": np.float64, "<f4": np.float32}


def _dtype_tag(dtype) -> str:
    for tag, dt in _DTYPES.items():
        if np.dtype(dtype) == dt:
            return tag
    raise ValueError(f"unsupported dtype {dtype}")


class Mlp:
    """Fully connected net: tanh on hidden layers, linear output.

    Weights are (out, in); init is uniform +-1/sqrt(fan_in), seeded.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None,
                 dtype=np.float64):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.dtype = np.dtype(dtype)
        self._alloc()
        rng = rng if rng is not None else np.random.default_rng()
        for w, b, n_in in zip(self.weights, self.biases, self.sizes[:-1]):
            bound = 1.0 / math.sqrt(n_in)
            w[...] = rng.uniform(-bound, bound, size=w.shape)
            b[...] = rng.uniform(-bound, bound, size=b.shape)

    def _alloc(self) -> None:
        total = sum(o * i + o for i, o in zip(self.sizes[:-1], self.sizes[1:]))
        self.flat = np.zeros(total, dtype=self.dtype)
        self.weights = []
        self.biases = []
        at = 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            self.weights.append(self.flat[at:at + n_out * n_in].reshape(n_out, n_in))
            at += n_out * n_in
            self.biases.append(self.flat[at:at + n_out])
            at += n_out

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        dup = Mlp.__new__(Mlp)
        dup.sizes = self.sizes
        dup.dtype = self.dtype
        dup._alloc()
        dup.flat[...] = self.flat
        return dup

    def __deepcopy__(self, memo) -> "Mlp":
        # plain deepcopy would detach the per-layer views from flat
        return self.copy()

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_trace(x)
        return y

    def forward_trace(self, x: np.ndarray):
        """Forward pass keeping per-layer activations for backward()."""
        x = np.asarray(x, dtype=self.dtype)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        if h.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {h.shape[1]} != layer size {self.sizes[0]}")
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T
            h += b
            if i != last:
                np.tanh(h, out=h)
            acts.append(h)
        out = h[0] if squeeze else h
        return out, (acts, squeeze)

    def backward(self, x_or_trace, output_grad: np.ndarray):
        """Exact reverse-mode gradients of forward().

        ``x_or_trace`` is either the raw input (forward is recomputed) or the
        trace from forward_trace(). Returns (param_grads, input_grad) where
        param_grads matches params() order and is summed over the batch.
        """
        if isinstance(x_or_trace, tuple) and len(x_or_trace) == 2 \
                and isinstance(x_or_trace[0], list):
            acts, squeeze = x_or_trace
        else:
            _, (acts, squeeze) = self.forward_trace(x_or_trace)
        g = np.asarray(output_grad, dtype=self.dtype)
        if squeeze and g.ndim == 1:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ValueError(f"output_grad shape {g.shape} != output shape {acts[-1].shape}")
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = acts[i]
            gw = g.T @ h_in
            gb = g.sum(axis=0)
            grads.append(gb)
            grads.append(gw)
            g = g @ self.weights[i]
            if i > 0:  # undo the tanh of the previous layer
                g = g * (1.0 - acts[i] * acts[i])
        grads.reverse()
        gin = g[0] if squeeze else g
        return grads, gin

    def flat_grad(self, grads: list[np.ndarray]) -> np.ndarray:
        """Concatenate backward() output into the flat-parameter layout."""
        return np.concatenate([g.ravel() for g in grads])

    # -- serialization: versioned flat binary -------------------------------
    # magic, one JSON header line, then for each layer W (row-major) and b
    # as little-endian values of the recorded dtype.

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_MAGIC)
        header = {"kind": "mlp", "sizes": list(self.sizes),
                  "dtype": _dtype_tag(self.dtype)}
        buf.write((json.dumps(header) + "\n").encode())
        buf.write(np.ascontiguousarray(self.flat, dtype=header["dtype"]).tobytes())
        return buf.getvalue()

    @staticmethod
    def from_bytes(data: bytes) -> "Mlp":
        buf = io.BytesIO(data)
        if buf.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a traymaze network blob")
        header = json.loads(buf.readline().decode())
        if header.get("kind") != "mlp":
            raise ValueError(f"expected mlp blob, got {header.get('kind')!r}")
        net = Mlp.__new__(Mlp)
        net.sizes = tuple(header["sizes"])
        net.dtype = np.dtype(_DTYPES[header["dtype"]])
        net._alloc()
        raw = np.frombuffer(buf.read(net.flat.size * net.dtype.itemsize),
                            dtype=header["dtype"])
        net.flat[...] = raw
        return net


class TwinMlp:
    """Two same-shaped MLPs evaluated together via stacked matmuls.

    Used for the twin Q critics: one forward/backward pass computes both
    nets, which roughly halves the per-update overhead. Weights are
    (2, out, in) views into a single flat vector, so optimizer updates and
    Polyak averaging stay single vector ops. Serializes as two ordinary Mlp
    blobs.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None,
                 dtype=np.float64):
        self.sizes = tuple(int(s) for s in sizes)
        self.dtype = np.dtype(dtype)
        self._alloc()
        rng = rng if rng is not None else np.random.default_rng()
        for k in range(2):
            for w, b, n_in in zip(self.weights, self.biases, self.sizes[:-1]):
                bound = 1.0 / math.sqrt(n_in)
                w[k] = rng.uniform(-bound, bound, size=w.shape[1:])
                b[k] = rng.uniform(-bound, bound, size=b.shape[1:])

    def _alloc(self) -> None:
        total = 2 * sum(o * i + o for i, o in zip(self.sizes[:-1], self.sizes[1:]))
        self.flat = np.zeros(total, dtype=self.dtype)
        self.weights = []
        self.biases = []
        at = 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            n = 2 * n_out * n_in
            self.weights.append(self.flat[at:at + n].reshape(2, n_out, n_in))
            at += n
            self.biases.append(self.flat[at:at + 2 * n_out].reshape(2, n_out))
            at += 2 * n_out

    def copy(self) -> "TwinMlp":
        dup = TwinMlp.__new__(TwinMlp)
        dup.sizes = self.sizes
        dup.dtype = self.dtype
        dup._alloc()
        dup.flat[...] = self.flat
        return dup

    def __deepcopy__(self, memo) -> "TwinMlp":
        return self.copy()

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_trace(x)
        return y

    def forward_trace(self, x: np.ndarray):
        """(B, in) -> (2, B, out) plus the activation trace."""
        h = np.asarray(x, dtype=self.dtype)
        if h.ndim != 2 or h.shape[1] != self.sizes[0]:
            raise ValueError(f"expected (batch, {self.sizes[0]}) input, got {h.shape}")
        acts = [h]
        last = len(self.weights) - 1
        h = h[None, :, :]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.transpose(0, 2, 1)
            h += b[:, None, :]
            if i != last:
                np.tanh(h, out=h)
            acts.append(h)
        return acts[-1], acts

    def backward(self, trace, output_grad: np.ndarray):
        """Gradients for both nets; input grad is per-net, shape (2, B, in)."""
        acts = trace
        g = np.asarray(output_grad, dtype=self.dtype)
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = acts[i]
            gw = g.transpose(0, 2, 1) @ h_in
            gb = g.sum(axis=1)
            grads.append(gb)
            grads.append(gw)
            g = g @ self.weights[i]
            if i > 0:
                g = g * (1.0 - acts[i] * acts[i])
        grads.reverse()
        return grads, g

    def flat_grad(self, grads: list[np.ndarray]) -> np.ndarray:
        return np.concatenate([g.ravel() for g in grads])

    def net(self, k: int) -> Mlp:
        """Copy of one of the two nets as a standalone Mlp."""
        out = Mlp.__new__(Mlp)
        out.sizes = self.sizes
        out.dtype = self.dtype
        out._alloc()
        for dst_w, dst_b, w, b in zip(out.weights, out.biases,
                                      self.weights, self.biases):
            dst_w[...] = w[k]
            dst_b[...] = b[k]
        return out

    @staticmethod
    def from_nets(a: Mlp, b: Mlp) -> "TwinMlp":
        if a.sizes != b.sizes or a.dtype != b.dtype:
            raise ValueError("twin halves must match in shape and dtype")
        twin = TwinMlp.__new__(TwinMlp)
        twin.sizes = a.sizes
        twin.dtype = a.dtype
        twin._alloc()
        for k, net in enumerate((a, b)):
            for dst_w, dst_b, w, bias in zip(twin.weights, twin.biases,
                                             net.weights, net.biases):
                dst_w[k] = w
                dst_b[k] = bias
        return twin


class AdamState:
    """Per-parameter Adam moments plus hyperparameters."""

    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_MAGIC)
        header = {
            "kind": "adam",
            "shapes": [list(m.shape) for m in self.m],
            "dtype": _dtype_tag(self.m[0].dtype) if self.m else "<f8",
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
            "eps": self.eps, "step": self.step,
        }
        buf.write((json.dumps(header) + "\n").encode())
        for arr in self.m + self.v:
            buf.write(np.ascontiguousarray(arr, dtype=header["dtype"]).tobytes())
        return buf.getvalue()

    @staticmethod
    def from_bytes(data: bytes) -> "AdamState":
        buf = io.BytesIO(data)
        if buf.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a traymaze optimizer blob")
        header = json.loads(buf.readline().decode())
        if header.get("kind") != "adam":
            raise ValueError(f"expected adam blob, got {header.get('kind')!r}")
        state = AdamState.__new__(AdamState)
        state.lr = header["lr"]
        state.beta1 = header["beta1"]
        state.beta2 = header["beta2"]
        state.eps = header["eps"]
        state.step = header["step"]
        dtype = np.dtype(_DTYPES[header["dtype"]])
        shapes = [tuple(s) for s in header["shapes"]]

        def read_arrays():
            arrays = []
            for shape in shapes:
                n = int(np.prod(shape)) if shape else 1
                raw = np.frombuffer(buf.read(dtype.itemsize * n), dtype=header["dtype"])
                arrays.append(raw.astype(dtype, copy=True).reshape(shape))
            return arrays

        state.m = read_arrays()
        state.v = read_arrays()
        return state


def adam_step(params, grads, state: AdamState) -> None:
    """One bias-corrected Adam update, in place.

    Step size is lr * mhat / (sqrt(vhat) + eps) with the usual 1 - beta^t
    corrections.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass
class GaussianHead:
    """Scalar policy head: tanh-squashed Gaussian."""

    mean: float
    log_std: float

    def __post_init__(self):
        if not LOG_STD_MIN <= self.log_std <= LOG_STD_MAX:
            raise ValueError(f"log_std {self.log_std} outside [{LOG_STD_MIN}, {LOG_STD_MAX}]")

    def sample(self, noise: float) -> tuple[float, float]:
        a, lp = squash_sample(np.asarray(self.mean), np.asarray(self.log_std),
                              np.asarray(noise))
        return float(a), float(lp)


def squash_sample(mean, log_std, noise, eps: float = SQUASH_EPS):
    """Reparametrized draw through tanh.

    u = mean + exp(log_std) * noise, action = tanh(u), and
    log_prob = logN(u; mean, std) - log(1 - tanh(u)^2 + eps).
    Works elementwise on arrays; callers clamp log_std beforehand.
    """
    mean = np.asarray(mean)
    log_std = np.asarray(log_std)
    noise = np.asarray(noise)
    u = mean + np.exp(log_std) * noise
    action = np.tanh(u)
    # tanh rounds to exactly +-1 for |u| above ~19; keep the open interval
    bound = np.nextafter(action.dtype.type(1), action.dtype.type(0))
    action = np.clip(action, -bound, bound)
    log_prob = (-0.5 * noise * noise - log_std - 0.5 * _LOG_2PI
                - np.log(1.0 - action * action + eps))
    return action, log_prob


def squash_log_prob(mean, log_std, action, eps: float = SQUASH_EPS):
    """Density of squash_sample evaluated at a given action in (-1, 1)."""
    u = np.arctanh(np.asarray(action, dtype=float))
    std = np.exp(log_std)
    z = (u - mean) / std
    return (-0.5 * z * z - log_std - 0.5 * _LOG_2PI
            - np.log(1.0 - np.tanh(u) ** 2 + eps))
