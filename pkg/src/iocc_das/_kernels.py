"""Hot numeric kernels, each with a numba loop version and a pure-numpy version.

The active backend is chosen from the ``IOCC_DAS_BACKEND`` environment
variable (``numba`` or ``numpy``) at import time and can be switched at
runtime with :func:`set_backend` / :func:`backend`. When numba is not
importable the numpy path is used regardless of the flag.

Both paths compute the same quantities; they may differ in the last few
ulps because the summation order is not the same.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


_JIT = dict(cache=True, nogil=True, fastmath=False)

_VALID = ("numba", "numpy")


def _initial_backend() -> str:
    name = os.environ.get("IOCC_DAS_BACKEND", "numba").strip().lower()
    if name not in _VALID:
        raise ValueError(f"IOCC_DAS_BACKEND must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def backend(name: str):
    """Temporarily switch the kernel backend."""
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# ---------------------------------------------------------------------------
# clamped path-loss gain matrix


@njit(**_JIT)
def _clamped_gain_nb(points, centers, alpha, d_min):
    n, q = points.shape
    k = centers.shape[0]
    out = np.empty((n, k))
    cap = d_min ** (-alpha)
    for i in range(n):
        for j in range(k):
            acc = 0.0
            for d in range(q):
                diff = points[i, d] - centers[j, d]
                acc += diff * diff
            dist = np.sqrt(acc)
            if dist <= d_min:
                out[i, j] = cap
            else:
                out[i, j] = dist ** (-alpha)
    return out


def _clamped_gain_np(points, centers, alpha, d_min):
    diff = points[:, None, :] - centers[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return np.maximum(dist, d_min) ** (-alpha)


def clamped_gain(points, centers, alpha, d_min):
    """Matrix ``G[i, j] = min(d_min^-a, |points_i - centers_j|^-a)``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if _backend == "numba":
        return _clamped_gain_nb(points, centers, float(alpha), float(d_min))
    return _clamped_gain_np(points, centers, float(alpha), float(d_min))


# ---------------------------------------------------------------------------
# nearest-centre assignment (squared euclidean or L1)


@njit(**_JIT)
def _nearest_center_nb(data, centers, l1):
    n, dim = data.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    cost = np.empty(n)
    for i in range(n):
        best = np.inf
        arg = 0
        for j in range(k):
            acc = 0.0
            for d in range(dim):
                diff = data[i, d] - centers[j, d]
                if l1:
                    acc += abs(diff)
                else:
                    acc += diff * diff
            if acc < best:
                best = acc
                arg = j
        labels[i] = arg
        cost[i] = best
    return labels, cost


def _nearest_center_np(data, centers, l1):
    diff = data[:, None, :] - centers[None, :, :]
    if l1:
        dist = np.abs(diff).sum(axis=2)
    else:
        dist = (diff * diff).sum(axis=2)
    labels = np.argmin(dist, axis=1).astype(np.int64)
    return labels, dist[np.arange(data.shape[0]), labels]


def nearest_center(data, centers, l1=False):
    """Label of the nearest centre per row (lowest index wins ties) and its cost."""
    data = np.ascontiguousarray(data, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if _backend == "numba":
        return _nearest_center_nb(data, centers, bool(l1))
    return _nearest_center_np(data, centers, bool(l1))


# ---------------------------------------------------------------------------
# Monte Carlo capacity statistics for one location


@njit(**_JIT)
def _capacity_stats_nb(gain, shadow, small):
    n, k = shadow.shape
    total = 0.0
    total_sq = 0.0
    for i in range(n):
        snr = 0.0
        for j in range(k):
            snr += gain[j] * shadow[i, j] * small[i, j]
        c = np.log2(1.0 + snr)
        total += c
        total_sq += c * c
    mean = total / n
    var = (total_sq - n * mean * mean) / (n - 1) if n > 1 else 0.0
    if var < 0.0:
        var = 0.0
    return mean, var


def _capacity_stats_np(gain, shadow, small):
    cap = np.log2(1.0 + (shadow * small) @ gain)
    n = cap.shape[0]
    var = float(np.var(cap, ddof=1)) if n > 1 else 0.0
    return float(np.mean(cap)), var


def capacity_stats(gain, shadow, small):
    """Mean and unbiased variance of ``log2(1 + sum_k gain_k s_k g_k)`` over draws."""
    gain = np.ascontiguousarray(gain, dtype=np.float64)
    shadow = np.ascontiguousarray(shadow, dtype=np.float64)
    small = np.ascontiguousarray(small, dtype=np.float64)
    if _backend == "numba":
        mean, var = _capacity_stats_nb(gain, shadow, small)
        return float(mean), float(var)
    return _capacity_stats_np(gain, shadow, small)


# ---------------------------------------------------------------------------
# Euclidean projection onto {x >= lo, sum(x) <= budget}


@njit(**_JIT)
def _project_nb(v, lo, budget):
    k = v.shape[0]
    out = np.empty(k)
    total = 0.0
    for i in range(k):
        out[i] = v[i] if v[i] > lo[i] else lo[i]
        total += out[i]
    if total <= budget:
        return out
    # sum constraint active: project u = v - lo onto {u >= 0, sum(u) = b}
    b = budget
    for i in range(k):
        b -= lo[i]
    u = np.empty(k)
    for i in range(k):
        u[i] = v[i] - lo[i]
    srt = np.sort(u)[::-1]
    css = 0.0
    rho = 1
    top = srt[0]
    for i in range(k):
        css += srt[i]
        if srt[i] - (css - b) / (i + 1) > 0.0:
            rho = i + 1
            top = css
    # u - tau written as (u - mean of the support) + b / rho: no cancellation
    # against b when the entries of u dwarf the budget
    mean = top / rho
    share = b / rho
    for i in range(k):
        w = (u[i] - mean) + share
        out[i] = lo[i] + (w if w > 0.0 else 0.0)
    return out


def _project_np(v, lo, budget):
    out = np.maximum(v, lo)
    if out.sum() <= budget:
        return out
    u = v - lo
    b = budget - lo.sum()
    srt = np.sort(u)[::-1]
    css = np.cumsum(srt) - b
    idx = np.arange(1, u.shape[0] + 1)
    rho = max(int(np.count_nonzero(srt - css / idx > 0)), 1)
    mean = np.sum(srt[:rho]) / rho
    return lo + np.maximum((u - mean) + b / rho, 0.0)


def project_box_budget(v, lo, budget):
    """Project ``v`` onto ``{x : x >= lo, sum(x) <= budget}``; needs ``sum(lo) <= budget``."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    lo = np.ascontiguousarray(np.broadcast_to(lo, v.shape), dtype=np.float64)
    if _backend == "numba":
        return _project_nb(v, lo, float(budget))
    return _project_np(v, lo, float(budget))


# ---------------------------------------------------------------------------
# accelerated projected gradient for 0.5 x'Gx - h'x over the same set


@njit(**_JIT)
def _fista_nb(gram, lin, lo, budget, x0, lip, max_iter, tol):
    k = x0.shape[0]
    x = _project_nb(x0, lo, budget)
    y = x.copy()
    t = 1.0
    step = 1.0 / lip
    it = 0
    stat = np.inf
    grad = np.empty(k)
    for it in range(1, max_iter + 1):
        for i in range(k):
            acc = -lin[i]
            for j in range(k):
                acc += gram[i, j] * y[j]
            grad[i] = acc
        z = np.empty(k)
        for i in range(k):
            z[i] = y[i] - step * grad[i]
        x_new = _project_nb(z, lo, budget)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # gradient-based adaptive restart
        dot = 0.0
        for i in range(k):
            dot += (y[i] - x_new[i]) * (x_new[i] - x[i])
        if dot > 0.0:
            t_new = 1.0
            for i in range(k):
                y[i] = x_new[i]
        else:
            coef = (t - 1.0) / t_new
            for i in range(k):
                y[i] = x_new[i] + coef * (x_new[i] - x[i])
        t = t_new
        x = x_new
        # projected-gradient stationarity at x
        for i in range(k):
            acc = -lin[i]
            for j in range(k):
                acc += gram[i, j] * x[j]
            z[i] = x[i] - step * acc
        px = _project_nb(z, lo, budget)
        num = 0.0
        den = 0.0
        for i in range(k):
            num += (x[i] - px[i]) ** 2
            den += x[i] * x[i]
        stat = np.sqrt(num) / max(np.sqrt(den), 1e-300)
        if stat <= tol:
            break
    return x, it, stat


def _fista_np(gram, lin, lo, budget, x0, lip, max_iter, tol):
    x = _project_np(x0, lo, budget)
    y = x.copy()
    t = 1.0
    step = 1.0 / lip
    it = 0
    stat = np.inf
    for it in range(1, max_iter + 1):
        x_new = _project_np(y - step * (gram @ y - lin), lo, budget)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if np.dot(y - x_new, x_new - x) > 0.0:
            t_new = 1.0
            y = x_new.copy()
        else:
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        t = t_new
        x = x_new
        px = _project_np(x - step * (gram @ x - lin), lo, budget)
        stat = np.linalg.norm(x - px) / max(np.linalg.norm(x), 1e-300)
        if stat <= tol:
            break
    return x, it, stat


def fista_box_budget(gram, lin, lo, budget, x0, max_iter=200_000, tol=1e-12):
    """Minimise ``0.5 x'Gx - h'x`` over ``{x >= lo, sum(x) <= budget}``.

    Returns ``(x, iterations, stationarity)`` where stationarity is the
    relative norm of the projected-gradient step ``|x - P(x - grad/L)| / |x|``.
    """
    gram = np.ascontiguousarray(gram, dtype=np.float64)
    lin = np.ascontiguousarray(lin, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    lo = np.ascontiguousarray(np.broadcast_to(lo, x0.shape), dtype=np.float64)
    lip = float(np.linalg.eigvalsh(gram)[-1])
    if lip <= 0.0:
        return _project_np(x0, lo, float(budget)), 0, 0.0
    args = (gram, lin, lo, float(budget), x0, lip, int(max_iter), float(tol))
    if _backend == "numba":
        x, it, stat = _fista_nb(*args)
    else:
        x, it, stat = _fista_np(*args)
    return np.asarray(x), int(it), float(stat)
