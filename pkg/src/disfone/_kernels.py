"""Inner loops shared by SGD, FONE and the aggregation step.

Every loss handled here is a generalized linear loss: the subgradient at a
sample is ``x * psi(y, x'theta)`` for a scalar link ``psi``. The kernels work
on that scalar so the per-sample cost is two dot products and one axpy.

Two implementations exist with identical signatures. The numba one is used
unless ``DISFONE_DISABLE_NUMBA`` is set to a non-empty value other than
``"0"`` (or numba cannot be imported). Both consume pre-drawn index arrays, so
the random stream never depends on which path runs.
"""

import math
import os

import numpy as np
from scipy.special import expit

LOGISTIC = 0
QUANTILE = 1
QUADRATIC = 2


def psi(kind, tau, y, u):
    """Vectorized scalar link: subgradient = x * psi(y, u) with u = x'theta."""
    if kind == LOGISTIC:
        return -y * expit(-y * u)
    if kind == QUANTILE:
        return (y <= u).astype(np.float64) - tau
    return u - y


def loss_values(kind, tau, y, u):
    if kind == LOGISTIC:
        v = -y * u
        return np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))
    if kind == QUANTILE:
        r = y - u
        return r * (tau - (r <= 0.0))
    r = y - u
    return 0.5 * r * r


# ---------------------------------------------------------------- numpy path


def _np_batch_grad_sum(kind, tau, X, y, idx, theta):
    Xb = X[idx]
    return Xb.T @ psi(kind, tau, y[idx], Xb @ theta)


def _np_fone_loop(kind, tau, X, y, batches, z0, a, eta, guard):
    z = z0.copy()
    m = batches.shape[1]
    for t in range(batches.shape[0]):
        idx = batches[t]
        Xb = X[idx]
        yb = y[idx]
        diff = psi(kind, tau, yb, Xb @ z) - psi(kind, tau, yb, Xb @ z0)
        z -= eta * (Xb.T @ diff / m + a)
        dev = np.linalg.norm(z - z0)
        if not dev <= guard:
            return z, t + 1
    return z, 0


def _np_sgd_loop(kind, tau, X, y, batches, z0, c0, alpha, p):
    z = z0.copy()
    m = batches.shape[1]
    for i in range(batches.shape[0]):
        idx = batches[i]
        Xb = X[idx]
        r = c0 / max((i + 1) ** alpha, p)
        z -= (r / m) * (Xb.T @ psi(kind, tau, y[idx], Xb @ z))
    return z


# ---------------------------------------------------------------- numba path

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

if _HAVE_NUMBA:
    # Reassociation lets LLVM vectorize the dot products. NaN/Inf semantics
    # are kept so the divergence guard still sees a NaN iterate.
    _FASTMATH = {"reassoc", "contract"}

    @njit(cache=True, nogil=True)
    def _nb_psi(kind, tau, y, u):
        if kind == 0:
            v = y * u
            if v >= 0.0:
                e = math.exp(-v)
                return -y * e / (1.0 + e)
            return -y / (1.0 + math.exp(v))
        if kind == 1:
            return (1.0 if y <= u else 0.0) - tau
        return u - y

    @njit(cache=True, nogil=True, fastmath=_FASTMATH)
    def _nb_batch_grad_sum(kind, tau, X, y, idx, theta):
        p = X.shape[1]
        out = np.zeros(p)
        for j in range(idx.shape[0]):
            i = idx[j]
            xi = X[i]
            u = 0.0
            for k in range(p):
                u += xi[k] * theta[k]
            c = _nb_psi(kind, tau, y[i], u)
            for k in range(p):
                out[k] += c * xi[k]
        return out

    @njit(cache=True, nogil=True, fastmath=_FASTMATH)
    def _nb_fone_loop(kind, tau, X, y, batches, z0, a, eta, guard):
        p = X.shape[1]
        T, m = batches.shape
        z = z0.copy()
        acc = np.empty(p)
        for t in range(T):
            acc[:] = 0.0
            for j in range(m):
                i = batches[t, j]
                xi = X[i]
                uz = 0.0
                u0 = 0.0
                for k in range(p):
                    uz += xi[k] * z[k]
                    u0 += xi[k] * z0[k]
                c = _nb_psi(kind, tau, y[i], uz) - _nb_psi(kind, tau, y[i], u0)
                if c != 0.0:
                    for k in range(p):
                        acc[k] += c * xi[k]
            dev = 0.0
            for k in range(p):
                z[k] -= eta * (acc[k] / m + a[k])
                d = z[k] - z0[k]
                dev += d * d
            dev = math.sqrt(dev)
            if not dev <= guard:
                return z, t + 1
        return z, 0

    @njit(cache=True, nogil=True, fastmath=_FASTMATH)
    def _nb_sgd_loop(kind, tau, X, y, batches, z0, c0, alpha, p):
        s, m = batches.shape
        q = X.shape[1]
        z = z0.copy()
        acc = np.empty(q)
        for it in range(s):
            acc[:] = 0.0
            for j in range(m):
                i = batches[it, j]
                xi = X[i]
                u = 0.0
                for k in range(q):
                    u += xi[k] * z[k]
                c = _nb_psi(kind, tau, y[i], u)
                for k in range(q):
                    acc[k] += c * xi[k]
            r = c0 / max((it + 1.0) ** alpha, p)
            for k in range(q):
                z[k] -= (r / m) * acc[k]
        return z


def _numba_requested():
    flag = os.environ.get("DISFONE_DISABLE_NUMBA", "")
    return _HAVE_NUMBA and flag in ("", "0")


USE_NUMBA = _numba_requested()

numpy_impl = {
    "batch_grad_sum": _np_batch_grad_sum,
    "fone_loop": _np_fone_loop,
    "sgd_loop": _np_sgd_loop,
}
numba_impl = (
    {
        "batch_grad_sum": _nb_batch_grad_sum,
        "fone_loop": _nb_fone_loop,
        "sgd_loop": _nb_sgd_loop,
    }
    if _HAVE_NUMBA
    else None
)

_active = numba_impl if USE_NUMBA else numpy_impl
batch_grad_sum = _active["batch_grad_sum"]
fone_loop = _active["fone_loop"]
sgd_loop = _active["sgd_loop"]


def backend():
    return "numba" if USE_NUMBA else "numpy"
