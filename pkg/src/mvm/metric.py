"""Distances, pullback metrics and shape descriptors of finite point sets.

A sample set is a ``(k, D)`` float array carrying the uniform weight ``1/k``
on each row. A metric is either the ambient Euclidean distance or the
pullback of it through an embedding ``g``: ``d(x, y) = |g(x) - g(y)|``.
All descriptors therefore reduce to Euclidean computations on embedded
points, which is where the compiled kernels come in.
"""
from __future__ import annotations

import numpy as np

from . import kernels


def as_samples(x, name="samples", dim=None) -> np.ndarray:
    """Validate and coerce to a non-empty ``(k, D)`` float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-d array of points, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name}: empty sample set")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name}: expected dimension {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: non-finite coordinates")
    return arr


class Metric:
    """Euclidean distance (``embedding=None``) or its pullback through ``embedding``.

    ``embedding`` is any callable mapping a ``(k, D)`` array to ``(k, n)``;
    a ``DenseNetwork`` qualifies. The handle only reads the embedding.
    """

    def __init__(self, embedding=None):
        self.embedding = embedding

    @property
    def kind(self) -> str:
        return "euclidean" if self.embedding is None else "pullback"

    def embed(self, x) -> np.ndarray:
        x = as_samples(x)
        if self.embedding is None:
            return x
        in_dim = getattr(self.embedding, "input_dim", None)
        if in_dim is not None and x.shape[1] != in_dim:
            raise ValueError(f"embedding expects dimension {in_dim}, got {x.shape[1]}")
        return np.asarray(self.embedding(x), dtype=np.float64)

    def __repr__(self):
        return f"Metric({self.kind})"


EUCLIDEAN = Metric()


def _metric(metric):
    if metric is None:
        return EUCLIDEAN
    if isinstance(metric, Metric):
        return metric
    return Metric(metric)


def distance(metric, x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    m = _metric(metric)
    diff = m.embed(x[None, :])[0] - m.embed(y[None, :])[0]
    return float(np.sqrt(np.dot(diff, diff)))


def frechet_mean_discrete(S, metric=None) -> int:
    """Index of the sample minimizing the sum of squared distances to all others.

    Ties go to the smallest index.
    """
    S = as_samples(S, "S")
    E = _metric(metric).embed(S)
    D = kernels.pairwise_distances(E)
    return int(np.argmin((D * D).sum(axis=1)))


def embedded_centroid(S, embedding=None) -> np.ndarray:
    S = as_samples(S, "S")
    return Metric(embedding).embed(S).mean(axis=0)


def centroid_gap(E_R, E_F) -> float:
    """Euclidean distance between the means of two embedded sets."""
    diff = E_R.mean(axis=0) - E_F.mean(axis=0)
    return float(np.sqrt(np.dot(diff, diff)))


def centroid_distance(S_R, S_F, embedding=None) -> float:
    """Distance between the Fréchet means of two sets under the pullback metric.

    For a pullback metric this equals the Euclidean distance of the embedded
    means, so no search over candidate centres is needed.
    """
    S_R = as_samples(S_R, "S_R")
    S_F = as_samples(S_F, "S_F", dim=S_R.shape[1])
    m = Metric(embedding)
    return centroid_gap(m.embed(S_R), m.embed(S_F))


LOG_DOMAIN_P = 32.0


def _log_power_mean(D, p):
    # ((1/k^2) * sum_ij D_ij^p)^(1/p) evaluated through log-sum-exp
    k = D.shape[0]
    pos = D[D > 0]
    if pos.size == 0:
        return 0.0
    logs = p * np.log(pos)
    top = logs.max()
    lse = top + np.log(np.sum(np.exp(logs - top)))
    return float(np.exp((lse - 2.0 * np.log(k)) / p))


def p_diameter(S, metric=None, p=2.0) -> float:
    """Empirical p-diameter under the uniform measure on ``S``."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    S = as_samples(S, "S")
    E = _metric(metric).embed(S)
    k = E.shape[0]
    if k == 1:
        return 0.0
    p = float(p)
    if p > LOG_DOMAIN_P:
        return _log_power_mean(kernels.pairwise_distances(E), p)
    total, _ = kernels.pairwise_power_sum(E, p)
    return float((total / (k * k)) ** (1.0 / p))


def hausdorff_distance(A, B, metric=None) -> float:
    A = as_samples(A, "A")
    B = as_samples(B, "B", dim=A.shape[1])
    m = _metric(metric)
    EA, EB = m.embed(A), m.embed(B)
    return max(kernels.directed_hausdorff(EA, EB), kernels.directed_hausdorff(EB, EA))


def distance_matrix(S, metric=None, normalize=False) -> np.ndarray:
    S = as_samples(S, "S")
    if S.shape[0] < 2:
        raise ValueError("distance_matrix needs at least 2 points")
    D = kernels.pairwise_distances(_metric(metric).embed(S))
    if normalize:
        top = D.max()
        if top > 0:
            D = D / top
    return D


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, descending (real by symmetry)."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.array_equal(M, M.T):
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigvalsh(M)[::-1].copy()


def top_eigenvalues(M, count=10) -> np.ndarray:
    """The ``count`` algebraically largest eigenvalues of a symmetric matrix, descending."""
    ev = eigenvalues(M)
    if not 1 <= count <= ev.size:
        raise ValueError(f"count must lie in [1, {ev.size}], got {count}")
    return ev[:count].copy()


def pca_project_2d(points) -> np.ndarray:
    """Centre the points and project them onto their two leading principal axes."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("pca_project_2d needs at least 2 vectors of equal dimension")
    Xc = X - X.mean(axis=0)
    if X.shape[1] == 1:
        return np.column_stack([Xc[:, 0], np.zeros(X.shape[0])])
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    proj = Xc @ vt[:2].T
    if proj.shape[1] < 2:
        proj = np.column_stack([proj, np.zeros(X.shape[0])])
    return proj
