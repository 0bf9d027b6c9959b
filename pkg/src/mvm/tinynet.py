"""Small dense feed-forward networks with hand-written backprop and Adam.

The same class serves as the distribution generator (latent -> data space)
and as the metric generator (data space -> embedding space).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

ACTIVATIONS = ("identity", "relu", "leaky_relu", "sigmoid", "tanh")


class NonFiniteError(FloatingPointError):
    """Raised when a gradient or loss stops being finite."""


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "identity"
    slope: float = 0.2  # only read by leaky_relu

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dimensions must be >= 1, got {self.in_dim}->{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "leaky_relu" and not 0.0 < self.slope < 1.0:
            raise ValueError(f"leaky_relu slope must lie in (0, 1), got {self.slope}")

    def to_token(self) -> str:
        act = self.activation
        if act == "leaky_relu":
            act = f"leaky_relu({self.slope!r})"
        return f"{self.in_dim}>{self.out_dim}:{act}"

    @classmethod
    def from_token(cls, token: str) -> "LayerSpec":
        dims, act = token.strip().split(":")
        i, o = dims.split(">")
        slope = 0.2
        if act.startswith("leaky_relu("):
            slope = float(act[len("leaky_relu("):-1])
            act = "leaky_relu"
        return cls(int(i), int(o), act, slope)


def mlp_spec(in_dim: int, hidden: tuple[int, ...] | list[int], out_dim: int,
             activation: str = "leaky_relu", slope: float = 0.2,
             output_activation: str = "identity") -> list[LayerSpec]:
    """Layer list for in -> hidden... -> out with one hidden activation."""
    dims = [in_dim, *hidden, out_dim]
    layers = [LayerSpec(dims[i], dims[i + 1], activation, slope) for i in range(len(dims) - 2)]
    layers.append(LayerSpec(dims[-2], dims[-1], output_activation, slope))
    return layers


def _act(name, slope, z):
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0, z, slope * z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return np.tanh(z)


def _act_grad(name, slope, z, a):
    # derivative of the activation evaluated at pre-activation z (output a)
    if name == "identity":
        return None
    if name == "relu":
        return (z > 0).astype(np.float64)
    if name == "leaky_relu":
        return np.where(z > 0, 1.0, slope)
    if name == "sigmoid":
        return a * (1.0 - a)
    return 1.0 - a * a


class DenseNetwork:
    """Feed-forward stack of affine layers.

    ``forward`` records a tape used by the next ``backward`` call; calling the
    network directly (``net(x)``) evaluates without touching the tape.
    Parameters are stored per layer as ``W`` (out x in) and ``b`` (out,); the
    flat parameter vector concatenates ``W1.ravel(), b1, W2.ravel(), b2, ...``.
    """

    def __init__(self, layers: list[LayerSpec], weights=None, biases=None, seed=None):
        if not layers:
            raise ValueError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        self.layers = list(layers)
        self.seed = seed
        self.W = [np.zeros((l.out_dim, l.in_dim)) for l in layers] if weights is None else [
            np.array(w, dtype=np.float64) for w in weights]
        self.b = [np.zeros(l.out_dim) for l in layers] if biases is None else [
            np.array(b, dtype=np.float64) for b in biases]
        for l, w, b in zip(self.layers, self.W, self.b):
            if w.shape != (l.out_dim, l.in_dim) or b.shape != (l.out_dim,):
                raise ValueError("weight/bias shapes do not match the layer spec")
        self._tape = None

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.W, self.b))

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected inputs of dimension {self.input_dim}, got shape {x.shape}")
        return x

    def __call__(self, x):
        h = self._check_input(x)
        for l, w, b in zip(self.layers, self.W, self.b):
            h = _act(l.activation, l.slope, h @ w.T + b)
        return h

    def forward(self, x):
        """Evaluate a ``(k, input_dim)`` batch and keep intermediates for ``backward``."""
        h = self._check_input(x)
        tape = []
        for l, w, b in zip(self.layers, self.W, self.b):
            z = h @ w.T + b
            a = _act(l.activation, l.slope, z)
            tape.append((h, z, a))
            h = a
        self._tape = tape
        return h

    def backward(self, grad_out):
        """Reverse pass for the last ``forward`` batch.

        Returns ``(param_grad, input_grad)`` where ``param_grad`` is flat in the
        canonical parameter order and ``input_grad`` has the input's shape.
        """
        if self._tape is None:
            raise RuntimeError("backward called before forward")
        g = np.asarray(grad_out, dtype=np.float64)
        out_shape = self._tape[-1][2].shape
        if g.shape != out_shape:
            raise ValueError(f"output gradient shape {g.shape} != forward output shape {out_shape}")
        grads_w = [None] * len(self.layers)
        grads_b = [None] * len(self.layers)
        for idx in range(len(self.layers) - 1, -1, -1):
            l = self.layers[idx]
            h, z, a = self._tape[idx]
            d = _act_grad(l.activation, l.slope, z, a)
            dz = g if d is None else g * d
            grads_w[idx] = dz.T @ h
            grads_b[idx] = dz.sum(axis=0)
            g = dz @ self.W[idx]
        flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in zip(grads_w, grads_b)])
        return flat, g

    def get_params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.W, self.b)])

    def set_params(self, theta) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        pos = 0
        for i, l in enumerate(self.layers):
            nw = l.out_dim * l.in_dim
            self.W[i] = theta[pos:pos + nw].reshape(l.out_dim, l.in_dim).copy()
            pos += nw
            self.b[i] = theta[pos:pos + l.out_dim].copy()
            pos += l.out_dim
        self._tape = None

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(self.layers, [w.copy() for w in self.W], [b.copy() for b in self.b], self.seed)


def init_network(layers: list[LayerSpec], seed: int) -> DenseNetwork:
    """He-initialized network: weights ~ N(0, 2/fan_in), zero biases."""
    if not layers:
        raise ValueError("a network needs at least one layer")
    rng = np.random.default_rng(seed)
    weights = [rng.normal(0.0, np.sqrt(2.0 / l.in_dim), size=(l.out_dim, l.in_dim)) for l in layers]
    return DenseNetwork(layers, weights, [np.zeros(l.out_dim) for l in layers], seed=seed)


@dataclass
class AdamState:
    n: int
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam decay rates must lie in [0, 1)")
        if self.m is None:
            self.m = np.zeros(self.n)
        if self.v is None:
            self.v = np.zeros(self.n)


def adam_step(state: AdamState, params, grads):
    """One bias-corrected Adam update. Mutates ``state``; returns ``(params, state)``."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != (state.n,) or grads.shape != (state.n,):
        raise ValueError(f"Adam state holds {state.n} entries; got params {params.shape}, grads {grads.shape}")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteError("non-finite gradient passed to adam_step")
    b1, b2 = state.beta1, state.beta2
    state.t += 1
    state.m = b1 * state.m + (1.0 - b1) * grads
    state.v = b2 * state.v + (1.0 - b2) * grads * grads
    m_hat = state.m / (1.0 - b1 ** state.t)
    v_hat = state.v / (1.0 - b2 ** state.t)
    return params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon), state


# --- checkpoints ------------------------------------------------------------

CHECKPOINT_MAGIC = "# mvm-checkpoint v1"


def save_checkpoint(net: DenseNetwork, path) -> None:
    """Text checkpoint: three header lines, then one parameter per line."""
    layers = ";".join(l.to_token() for l in net.layers)
    with open(path, "w") as fh:
        fh.write(CHECKPOINT_MAGIC + "\n")
        fh.write(f"# seed = {net.seed}\n")
        fh.write(f"# layers = {layers}\n")
        for value in net.get_params():
            fh.write(f"{float(value)!r}\n")


def load_checkpoint(path) -> DenseNetwork:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not an mvm checkpoint")
    header = {}
    for line in lines[1:3]:
        key, _, value = line.lstrip("# ").partition(" = ")
        header[key] = value
    layers = [LayerSpec.from_token(t) for t in header["layers"].split(";")]
    seed = None if header.get("seed", "None") == "None" else int(header["seed"])
    net = DenseNetwork(layers, seed=seed)
    net.set_params(np.array([float(x) for x in lines[3:]]))
    return net
