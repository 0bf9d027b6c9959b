"""Finite-difference audit of every loss composed with small random networks.

For each case the analytic gradient (backprop through the networks plus the
loss's own gradient) is compared with a central difference. A partial is
skipped when the +h and -h evaluations land on different sides of a kink
(activation sign, hinge, absolute value), since the derivative is not
defined there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses
from .losses import LossValue
from .tinynet import DenseNetwork, init_network, mlp_spec

H = 1e-5
REL_TOL = 1e-4
# Denominator floor, relative to |loss|: central differences carry roundoff of
# order eps*|loss|/H ~ 1e-11*|loss|, so exactly-zero partials need a floor.
FLOOR = 1e-6


@dataclass
class Partial:
    case: str
    target: str
    index: int
    analytic: float
    numeric: float
    rel_error: float

    @property
    def passed(self) -> bool:
        return self.rel_error < REL_TOL


@dataclass
class Report:
    partials: list
    skipped: int

    @property
    def passed(self) -> bool:
        return bool(self.partials) and all(p.passed for p in self.partials)

    @property
    def worst(self) -> Partial | None:
        return max(self.partials, key=lambda p: p.rel_error, default=None)

    def summary(self) -> str:
        w = self.worst
        lines = [f"checked {len(self.partials)} partials, skipped {self.skipped} near kinks"]
        if w is not None:
            lines.append(f"worst: {w.case}/{w.target}[{w.index}] analytic={w.analytic:.10g} "
                         f"numeric={w.numeric:.10g} rel_error={w.rel_error:.3e}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _signature(nets, extra=()):
    sig = []
    for net in nets:
        if net._tape is not None:
            for _, z, _ in net._tape:
                sig.append(np.signbit(z).tobytes())
    for e in extra:
        sig.append(np.signbit(np.asarray(e)).tobytes())
    return tuple(sig)


class _Case:
    """Random problem: generator f, metric g, and data for one loss."""

    def __init__(self, rng, D=3, m=3, n=3, hidden=8, k=10):
        self.f = init_network(mlp_spec(m, (hidden,), D), int(rng.integers(2**31)))
        self.g = init_network(mlp_spec(D, (hidden,), n), int(rng.integers(2**31)))
        for net in (self.f, self.g):
            net.set_params(net.get_params() + 0.1 * rng.normal(size=net.n_params))
        self.S_R = rng.normal(size=(k, D))
        self.Z = rng.normal(size=(k, m))
        self.A = rng.normal(size=(k, D))
        self.P = rng.normal(size=(k, D))
        self.N = rng.normal(size=(k, D))


def _mm(case, lam=1.0):
    k = case.S_R.shape[0]
    S_F = case.f.forward(case.Z)
    E = case.g.forward(np.vstack([case.S_R, S_F]))
    mm = losses.mm_loss_embedded(E[:k], E[k:], lam)
    gw, dX = case.g.backward(np.vstack(mm.grads))
    gth, dZ = case.f.backward(dX[k:])
    dR, dF = losses.diam2_embedded(E[:k])[0], losses.diam2_embedded(E[k:])[0]
    sig = _signature([case.f, case.g], [dR - dF])
    return mm.value, {"theta": gth, "w": gw, "S_R": dX[:k], "Z": dZ}, sig


def _apn(case, gamma, alpha=2.0):
    l = case.A.shape[0]
    E = case.g.forward(np.vstack([case.A, case.P, case.N]))
    a, p, n = E[:l], E[l:2 * l], E[2 * l:]
    if gamma == 0.0:
        val = losses.triplet_loss_embedded(a, p, n, alpha)
    else:
        val = losses.apn_loss_embedded(a, p, n, alpha, gamma)
    gw, dX = case.g.backward(np.vstack(val.grads))
    h = np.sum((a - p) ** 2, 1) - np.sum((a - n) ** 2, 1) + alpha
    if gamma != 0.0:
        h = h - gamma * losses._cosine_and_grads(n - a, p - a)[0]
    sig = _signature([case.g], [h])
    return val.value, {"w": gw, "A": dX[:l], "P": dX[l:2 * l], "N": dX[2 * l:]}, sig


def _supervised(case, which, lambda2=0.5, lambda3=0.25):
    # generator reconstructs S_R from Z (stands in for the degraded input)
    k = case.S_R.shape[0]
    x_F = case.f.forward(case.Z)
    E = case.g.forward(np.vstack([case.S_R, x_F]))
    pair = losses.pair_loss_embedded(E[:k], E[k:])
    mm = losses.mm_loss_embedded(E[:k], E[k:], 1.0)
    img = losses.img_loss(case.S_R, x_F)
    _, dX_pair = case.g.backward(np.vstack(pair.grads))
    _, dX_mm = case.g.backward(np.vstack(mm.grads))
    if which == "pair":
        value, grad_out = pair.value, dX_pair[k:]
    elif which == "img":
        value, grad_out = img.value, img.grads[0]
    else:
        total = losses.gen_total_loss(img, LossValue(pair.value, (dX_pair[k:],)),
                                      LossValue(mm.value, (dX_mm[k:],)), lambda2, lambda3)
        value, grad_out = total.value, total.grads[0]
    gth, dZ = case.f.backward(grad_out)
    dR, dF = losses.diam2_embedded(E[:k])[0], losses.diam2_embedded(E[k:])[0]
    sig = _signature([case.f, case.g], [x_F - case.S_R, dR - dF])
    return value, {"theta": gth, "Z": dZ}, sig


CASES = {
    "mm_loss": _mm,
    "triplet_loss": lambda c: _apn(c, 0.0),
    "apn_loss": lambda c: _apn(c, 0.01),
    "pair_loss": lambda c: _supervised(c, "pair"),
    "img_loss": lambda c: _supervised(c, "img"),
    "gen_total_loss": lambda c: _supervised(c, "total"),
}


def _setter(case, target):
    if target in ("theta", "w"):
        net: DenseNetwork = case.f if target == "theta" else case.g
        base = net.get_params()
        return base, lambda v: net.set_params(v)
    arr = getattr(case, target)
    base = arr.ravel().copy()
    return base, lambda v: arr.__setitem__(..., v.reshape(arr.shape))


def check_case(name, case, rng, per_target=40, corrupt=False):
    fn = CASES[name]
    f0, grads, _ = fn(case)
    floor = FLOOR * max(1.0, abs(f0))
    results, skipped = [], 0
    for target, g in grads.items():
        g = np.asarray(g, dtype=np.float64).ravel().copy()
        if corrupt:
            g *= 1.0 + 1e-2
        base, put = _setter(case, target)
        idx = rng.choice(base.size, size=min(per_target, base.size), replace=False)
        for i in idx:
            v = base.copy()
            v[i] += H
            put(v)
            fp, _, sp = fn(case)
            v[i] -= 2 * H
            put(v)
            fm, _, sm = fn(case)
            put(base)
            if sp != sm:
                skipped += 1
                continue
            num = (fp - fm) / (2 * H)
            denom = max(abs(num), abs(g[i]), floor)
            results.append(Partial(name, target, int(i), float(g[i]), float(num),
                                   float(abs(num - g[i]) / denom)))
    return results, skipped


def run_gradcheck(seed=0, per_target=40, corrupt=None) -> Report:
    """Check every loss; ``corrupt`` names a case whose analytic gradient is skewed by 1%."""
    rng = np.random.default_rng(seed)
    partials, skipped = [], 0
    for name in CASES:
        case = _Case(rng)
        res, sk = check_case(name, case, rng, per_target, corrupt == name)
        partials += res
        skipped += sk
    return Report(partials, skipped)
