"""Objectives for manifold matching and metric learning.

Each ``*_embedded`` function works on points that have already been passed
through the metric network and returns a :class:`LossValue` whose ``grads``
line up with its array arguments. The un-suffixed wrappers take raw sample
sets plus an embedding (``None`` means identity) and are what tests and the
CLI call; the trainer uses the embedded forms so it can backprop through the
networks itself.

Kinks (hinge at zero, ``|.|`` at zero, zero-norm differences) get a zero
subgradient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import Metric, as_samples, centroid_gap

MATCH_MODES = ("both", "centroid_only", "diameter_only")
COS_EPS = 1e-12


@dataclass
class LossValue:
    value: float
    grads: tuple

    def __iter__(self):
        yield self.value
        yield self.grads


def diam2_embedded(E) -> tuple[float, np.ndarray]:
    """2-diameter of an embedded set and its gradient w.r.t. the rows of ``E``.

    Uses sum_ij |e_i - e_j|^2 = 2k sum_i |e_i - mean|^2, so it runs in O(k n).
    """
    k = E.shape[0]
    centred = E - E.mean(axis=0)
    ss = 2.0 * k * np.sum(centred * centred)
    diam = np.sqrt(ss) / k
    if diam == 0.0:
        return 0.0, np.zeros_like(E)
    return float(diam), 2.0 * centred / (k * diam)


def _embed(x, embedding, name):
    return Metric(embedding).embed(as_samples(x, name))


# --- manifold matching ------------------------------------------------------

def mm_loss_embedded(E_R, E_F, lam=1.0, match_mode="both") -> LossValue:
    """Centroid gap plus ``lam`` times the absolute 2-diameter gap."""
    if match_mode not in MATCH_MODES:
        raise ValueError(f"match_mode must be one of {MATCH_MODES}")
    E_R = np.asarray(E_R, dtype=np.float64)
    E_F = np.asarray(E_F, dtype=np.float64)
    if E_R.shape[0] < 1 or E_F.shape[0] < 1:
        raise ValueError("mm_loss needs non-empty sets")
    gR = np.zeros_like(E_R)
    gF = np.zeros_like(E_F)
    value = 0.0

    if match_mode != "diameter_only":
        c = centroid_gap(E_R, E_F)
        value = c
        if c > 0.0:
            u = (E_R.mean(axis=0) - E_F.mean(axis=0)) / c
            gR += u / E_R.shape[0]
            gF -= u / E_F.shape[0]

    if match_mode != "centroid_only":
        dR, ddR = diam2_embedded(E_R)
        dF, ddF = diam2_embedded(E_F)
        gap = dR - dF
        value = value + lam * abs(gap)
        s = np.sign(gap) * lam
        if s != 0.0:
            gR += s * ddR
            gF -= s * ddF

    return LossValue(float(value), (gR, gF))


def mm_loss(S_R, S_F, embedding=None, lam=1.0, match_mode="both") -> LossValue:
    E_R = _embed(S_R, embedding, "S_R")
    E_F = _embed(S_F, embedding, "S_F")
    return mm_loss_embedded(E_R, E_F, lam, match_mode)


# --- triplet losses ---------------------------------------------------------

def _cosine_and_grads(u, v):
    # row-wise cos(u, v) and its partials; zero where either row is degenerate
    nu = np.sqrt(np.sum(u * u, axis=1))
    nv = np.sqrt(np.sum(v * v, axis=1))
    ok = (nu >= COS_EPS) & (nv >= COS_EPS)
    cos = np.zeros(u.shape[0])
    du = np.zeros_like(u)
    dv = np.zeros_like(v)
    if np.any(ok):
        uo, vo, nuo, nvo = u[ok], v[ok], nu[ok][:, None], nv[ok][:, None]
        c = np.sum(uo * vo, axis=1)[:, None] / (nuo * nvo)
        cos[ok] = c[:, 0]
        du[ok] = vo / (nuo * nvo) - c * uo / (nuo * nuo)
        dv[ok] = uo / (nuo * nvo) - c * vo / (nvo * nvo)
    return cos, du, dv


def apn_loss_embedded(A, P, N, alpha=1.0, gamma=0.01) -> LossValue:
    """Summed direction-regularized triplet hinge over rows of ``A, P, N``.

    Per triplet: max(0, |a-p|^2 - |a-n|^2 + alpha - gamma*cos(n-a, p-a)).
    With ``gamma == 0`` the cosine term is skipped entirely and this is the
    plain triplet loss.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    N = np.atleast_2d(np.asarray(N, dtype=np.float64))
    if not A.shape == P.shape == N.shape:
        raise ValueError(f"triplet shapes differ: {A.shape}, {P.shape}, {N.shape}")
    v = P - A
    u = N - A
    h = np.sum(v * v, axis=1) - np.sum(u * u, axis=1) + alpha
    if gamma != 0.0:
        cos, dcos_u, dcos_v = _cosine_and_grads(u, v)
        h = h - gamma * cos
    active = (h > 0.0)[:, None]
    gP = np.where(active, 2.0 * v, 0.0)
    gN = np.where(active, -2.0 * u, 0.0)
    if gamma != 0.0:
        gP = gP - np.where(active, gamma * dcos_v, 0.0)
        gN = gN - np.where(active, gamma * dcos_u, 0.0)
    gA = -(gP + gN)
    value = float(np.sum(np.maximum(h, 0.0)))
    return LossValue(value, (gA, gP, gN))


def triplet_loss_embedded(A, P, N, alpha=1.0) -> LossValue:
    return apn_loss_embedded(A, P, N, alpha, 0.0)


def _embed_triplet(t, embedding):
    a, p, n = (np.atleast_2d(np.asarray(x, dtype=np.float64)) for x in t)
    if not a.shape == p.shape == n.shape:
        raise ValueError("triplet members must share a dimension")
    m = Metric(embedding)
    return m.embed(a), m.embed(p), m.embed(n)


def triplet_loss(t, embedding=None, alpha=1.0) -> LossValue:
    """Hinge triplet loss of ``t = (anchor, positive, negative)`` under the pullback metric."""
    return triplet_loss_embedded(*_embed_triplet(t, embedding), alpha)


def apn_loss(t, embedding=None, alpha=1.0, gamma=0.01) -> LossValue:
    return apn_loss_embedded(*_embed_triplet(t, embedding), alpha, gamma)


# --- supervised terms -------------------------------------------------------

def pair_loss_embedded(E_R, E_F) -> LossValue:
    """Mean Euclidean distance between paired embedded rows."""
    E_R = np.asarray(E_R, dtype=np.float64)
    E_F = np.asarray(E_F, dtype=np.float64)
    if E_R.shape != E_F.shape:
        raise ValueError(f"paired batches differ in shape: {E_R.shape} vs {E_F.shape}")
    k = E_R.shape[0]
    diff = E_R - E_F
    norms = np.sqrt(np.sum(diff * diff, axis=1))
    safe = np.where(norms > 0.0, norms, 1.0)[:, None]
    g = np.where(norms[:, None] > 0.0, diff / safe, 0.0) / k
    return LossValue(float(norms.mean()), (g, -g))


def pair_loss(x_R, x_F, embedding=None) -> LossValue:
    x_R = as_samples(x_R, "x_R")
    x_F = as_samples(x_F, "x_F", dim=x_R.shape[1])
    if x_R.shape[0] != x_F.shape[0]:
        raise ValueError("paired batches must have equal cardinality")
    m = Metric(embedding)
    return pair_loss_embedded(m.embed(x_R), m.embed(x_F))


def img_loss(x_R, x_F) -> LossValue:
    """Mean absolute coordinate error; the gradient is w.r.t. ``x_F``."""
    x_R = np.atleast_2d(np.asarray(x_R, dtype=np.float64))
    x_F = np.atleast_2d(np.asarray(x_F, dtype=np.float64))
    if x_R.shape != x_F.shape:
        raise ValueError(f"shape mismatch: {x_R.shape} vs {x_F.shape}")
    diff = x_F - x_R
    return LossValue(float(np.mean(np.abs(diff))), (np.sign(diff) / diff.size,))


def gen_total_loss(img: LossValue, pair: LossValue, mm: LossValue,
                   lambda2=1e-3, lambda3=1e-3) -> LossValue:
    """``img + lambda2*pair + lambda3*mm``; all gradients must live on the same outputs."""
    if not len(img.grads) == len(pair.grads) == len(mm.grads):
        raise ValueError("component losses carry gradients over different outputs")
    value = img.value + lambda2 * pair.value + lambda3 * mm.value
    grads = tuple(gi + lambda2 * gp + lambda3 * gm
                  for gi, gp, gm in zip(img.grads, pair.grads, mm.grads))
    return LossValue(float(value), grads)
