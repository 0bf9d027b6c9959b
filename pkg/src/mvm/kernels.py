"""Hot distance kernels.

Every kernel exists twice: an explicit-loop version compiled with numba and a
vectorized numpy version. ``USE_NUMBA`` (see ``_accel``) picks which one the
public names point to. Both operate on float64 C-contiguous ``(k, n)`` arrays
of already-embedded points.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# --- numba path -------------------------------------------------------------

@njit(cache=True)
def _pairwise_loop(x):
    k, n = x.shape
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            s = 0.0
            for c in range(n):
                t = x[i, c] - x[j, c]
                s += t * t
            d = np.sqrt(s)
            out[i, j] = d
            out[j, i] = d
    return out


@njit(cache=True)
def _cross_loop(a, b):
    ka, n = a.shape
    kb = b.shape[0]
    out = np.empty((ka, kb))
    for i in range(ka):
        for j in range(kb):
            s = 0.0
            for c in range(n):
                t = a[i, c] - b[j, c]
                s += t * t
            out[i, j] = np.sqrt(s)
    return out


@njit(cache=True)
def _directed_hausdorff_loop(a, b):
    # sup_{x in a} inf_{y in b} |x - y|, with the usual early break once the
    # running inf can no longer raise the sup.
    ka, n = a.shape
    kb = b.shape[0]
    cmax = 0.0
    for i in range(ka):
        cmin = np.inf
        for j in range(kb):
            s = 0.0
            for c in range(n):
                t = a[i, c] - b[j, c]
                s += t * t
            if s < cmin:
                cmin = s
                if cmin < cmax:
                    break
        if cmin > cmax:
            cmax = cmin
    return np.sqrt(cmax)


@njit(cache=True)
def _power_sum_loop(x, p):
    # sum over ordered pairs i != j of |x_i - x_j|^p, plus the running max
    k, n = x.shape
    total = 0.0
    dmax = 0.0
    half = 0.5 * p
    for i in range(k):
        for j in range(i + 1, k):
            s = 0.0
            for c in range(n):
                t = x[i, c] - x[j, c]
                s += t * t
            total += s ** half
            if s > dmax:
                dmax = s
    return 2.0 * total, np.sqrt(dmax)


# --- numpy path -------------------------------------------------------------

def _pairwise_np(x):
    diff = x[:, None, :] - x[None, :, :]
    out = np.sqrt(np.einsum("ijc,ijc->ij", diff, diff))
    np.fill_diagonal(out, 0.0)
    return out


def _cross_np(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijc,ijc->ij", diff, diff))


def _directed_hausdorff_np(a, b):
    return float(_cross_np(a, b).min(axis=1).max())


def _power_sum_np(x, p):
    d = _pairwise_np(x)
    return float(np.sum(d ** p)), float(d.max())


NUMBA_KERNELS = {
    "pairwise": _pairwise_loop,
    "cross": _cross_loop,
    "directed_hausdorff": _directed_hausdorff_loop,
    "power_sum": _power_sum_loop,
}
NUMPY_KERNELS = {
    "pairwise": _pairwise_np,
    "cross": _cross_np,
    "directed_hausdorff": _directed_hausdorff_np,
    "power_sum": _power_sum_np,
}

_active = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"


def _prep(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def pairwise_distances(x):
    """Symmetric ``(k, k)`` Euclidean distance matrix with an exact zero diagonal."""
    return _active["pairwise"](_prep(x))


def cross_distances(a, b):
    return _active["cross"](_prep(a), _prep(b))


def directed_hausdorff(a, b):
    return float(_active["directed_hausdorff"](_prep(a), _prep(b)))


def pairwise_power_sum(x, p):
    """``(sum_{i,j} |x_i - x_j|^p, max_{i,j} |x_i - x_j|)`` over ordered pairs.

    Only safe from overflow for moderate ``p``; large exponents go through the
    log-domain path in ``metric.p_diameter``.
    """
    total, dmax = _active["power_sum"](_prep(x), float(p))
    return float(total), float(dmax)
