"""Synthetic manifolds, the latent prior, and the linear degradation used for
paired (supervised) training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NATIVE_DIM = {"circle": 2, "sphere": 3, "helix": 3, "swiss_roll": 3}


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_rotation(dim: int, seed) -> np.ndarray:
    """Haar-random orthogonal matrix (QR of a Gaussian matrix, sign-fixed)."""
    g = _rng(seed).normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str = "circle"
    ambient_dim: int = 2
    noise_sigma: float = 0.0
    radius: float = 1.0
    pitch: float = 0.5
    turns: float = 2.0
    scale: float = 1.0
    seed: int = 0  # fixes the embedding rotation when ambient_dim exceeds the native one

    def __post_init__(self):
        if self.kind not in NATIVE_DIM:
            raise ValueError(f"unknown manifold kind {self.kind!r}; expected one of {sorted(NATIVE_DIM)}")
        if self.ambient_dim < NATIVE_DIM[self.kind]:
            raise ValueError(f"{self.kind} needs ambient_dim >= {NATIVE_DIM[self.kind]}")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError("noise_sigma must be finite and non-negative")
        if self.radius <= 0 or self.scale <= 0 or self.turns <= 0:
            raise ValueError("radius, scale and turns must be positive")

    @property
    def rotation(self) -> np.ndarray | None:
        if self.ambient_dim == NATIVE_DIM[self.kind]:
            return None
        return random_rotation(self.ambient_dim, self.seed)

    def lift(self, native) -> np.ndarray:
        """Zero-pad native-dimension points and rotate them into the ambient space."""
        rot = self.rotation
        if rot is None:
            return native
        pad = np.zeros((native.shape[0], self.ambient_dim - native.shape[1]))
        return np.hstack([native, pad]) @ rot.T

    def unlift(self, x) -> np.ndarray:
        """Inverse of :meth:`lift` followed by truncation to the native coordinates."""
        rot = self.rotation
        x = np.asarray(x, dtype=np.float64)
        if rot is not None:
            x = x @ rot
        return x[:, :NATIVE_DIM[self.kind]]

    def residual(self, x) -> np.ndarray:
        """Per-point distance-like violation of the manifold constraint.

        Exact distance to the manifold for circle and sphere; for helix and
        swiss roll the residual of the implicit parameterization.
        """
        x = np.asarray(x, dtype=np.float64)
        rot = self.rotation
        if rot is not None:
            y = x @ rot
            off = np.linalg.norm(y[:, NATIVE_DIM[self.kind]:], axis=1)
            y = y[:, :NATIVE_DIM[self.kind]]
        else:
            y, off = x, 0.0
        if self.kind in ("circle", "sphere"):
            r = np.abs(np.linalg.norm(y, axis=1) - self.radius)
        elif self.kind == "helix":
            t = y[:, 2] / self.pitch
            on = np.column_stack([self.radius * np.cos(t), self.radius * np.sin(t)])
            r = np.linalg.norm(y[:, :2] - on, axis=1)
        else:
            t = np.pi * np.sqrt(y[:, 0] ** 2 + y[:, 2] ** 2) / self.scale
            on = self.scale * np.column_stack([t * np.cos(t), t * np.sin(t)]) / np.pi
            r = np.linalg.norm(y[:, [0, 2]] - on, axis=1)
        return np.sqrt(r * r + off * off)


def sample_manifold(spec: ManifoldSpec, k: int, seed=None) -> np.ndarray:
    """``k`` i.i.d. points, uniform in the manifold parameter, plus isotropic noise."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = _rng(spec.seed if seed is None else seed)
    if spec.kind == "circle":
        t = rng.uniform(0.0, 2.0 * np.pi, size=k)
        native = spec.radius * np.column_stack([np.cos(t), np.sin(t)])
    elif spec.kind == "sphere":
        g = rng.normal(size=(k, 3))
        native = spec.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
    elif spec.kind == "helix":
        t = rng.uniform(0.0, 2.0 * np.pi * spec.turns, size=k)
        native = np.column_stack([spec.radius * np.cos(t), spec.radius * np.sin(t), spec.pitch * t])
    else:
        t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=k)
        h = rng.uniform(0.0, 1.0, size=k)
        native = spec.scale * np.column_stack([t * np.cos(t) / np.pi, 3.0 * h, t * np.sin(t) / np.pi])
    x = spec.lift(native)
    if spec.noise_sigma > 0:
        x = x + rng.normal(0.0, spec.noise_sigma, size=x.shape)
    return x


@dataclass(frozen=True)
class PriorSpec:
    latent_dim: int = 4

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")


def sample_prior(spec: PriorSpec, k: int, seed=None) -> np.ndarray:
    """``k`` standard Gaussian latent vectors."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _rng(seed).normal(size=(k, spec.latent_dim))


def degradation_matrix(in_dim: int, out_dim: int, seed) -> np.ndarray:
    """Random ``out_dim x in_dim`` projection with orthonormal rows."""
    if not 1 <= out_dim < in_dim:
        raise ValueError("degradation must reduce the dimension")
    q = random_rotation(in_dim, seed)
    return q[:out_dim].copy()


def degrade(x, P, noise_sigma=0.0, seed=None) -> np.ndarray:
    """Low-dimensional observation ``P x + noise`` of each row; row order is kept."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != x.shape[1]:
        raise ValueError(f"projection of shape {P.shape} cannot act on dimension {x.shape[1]}")
    if P.shape[0] >= P.shape[1]:
        raise ValueError("degradation must reduce the dimension")
    y = x @ P.T
    if noise_sigma > 0:
        y = y + _rng(seed).normal(0.0, noise_sigma, size=y.shape)
    return y
