"""Transmit power allocation under a sum-power constraint.

Powers are found at the fading-averaged SNR level, where the received SNR
is linear in ``p``. Feasible set: ``p >= eps_p`` element-wise and
``sum(p) <= p_sum`` with ``eps_p = 1e-12 * p_sum``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .geometry import DemandSamples, Scenario, path_loss

Norm = Literal["l1", "l2"]

EPS_P = 1e-12


@dataclass(frozen=True, eq=False)
class SnrSystem:
    """``A @ (sbar * p) = target``: average SNR at each RAU site."""

    a_matrix: np.ndarray
    target: np.ndarray
    sbar: np.ndarray

    @property
    def k(self) -> int:
        return self.target.shape[0]

    def is_diagonally_dominant(self) -> bool:
        a = np.abs(self.a_matrix)
        off = a.sum(axis=1) - np.diag(a)
        return bool(np.all(np.diag(a) > off))


@dataclass(frozen=True, eq=False)
class PowerSolution:
    p: np.ndarray
    feasible_exact: bool
    residual: float
    iterations: int = 0
    stationarity: float = 0.0


def build_system(c, targets, scenario: Scenario) -> SnrSystem:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim == 1:
        c = c.reshape(-1, 1)
    targets = np.asarray(targets, dtype=np.float64).ravel()
    gain = _kernels.clamped_gain(c, c, scenario.alpha, scenario.d_min)
    np.fill_diagonal(gain, path_loss(scenario.d_min, scenario.alpha, scenario.d_min))
    a = scenario.small_scale_mean * gain / scenario.noise_power
    return SnrSystem(a, targets, np.full(c.shape[0], scenario.shadow_mean))


def solve_exact(system: SnrSystem, p_sum: float) -> PowerSolution:
    """Solve the square system; ``feasible_exact`` reports whether the
    solution is strictly positive and within the budget."""
    if not system.is_diagonally_dominant():
        warnings.warn("SNR system matrix is not diagonally dominant", RuntimeWarning,
                      stacklevel=2)
    try:
        y = np.linalg.solve(system.a_matrix, system.target)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular SNR system matrix") from exc
    p = y / system.sbar
    feasible = bool(np.all(p > 0) and p.sum() <= p_sum * (1.0 + 1e-12))
    res = float(np.sum((system.a_matrix @ y - system.target) ** 2))
    return PowerSolution(p, feasible, res)


# ---------------------------------------------------------------------------
# constrained least squares / least absolute deviations


def _polish(gram, lin, lo, budget, x, thr):
    """Re-solve the equality-constrained problem on the active set of ``x``
    and return it if it satisfies the KKT conditions, else ``None``.

    Both the budget-active and budget-inactive systems are tried (nearest
    first), so a first-order iterate that stopped a hair inside the budget
    still gets polished onto it.
    """
    lower = x <= lo + thr
    free = ~lower
    if not free.any():
        return None
    near_budget = x.sum() >= budget * (1.0 - 1e-6)
    for on_budget in ((True, False) if near_budget else (False, True)):
        out = _kkt_solve(gram, lin, lo, budget, x, lower, on_budget)
        if out is not None:
            return out
    return None


def _kkt_solve(gram, lin, lo, budget, x, lower, on_budget):
    free = ~lower
    nf = int(free.sum())
    xl = lo[lower]
    rhs = lin[free] - gram[np.ix_(free, lower)] @ xl
    try:
        if on_budget:
            kkt = np.zeros((nf + 1, nf + 1))
            kkt[:nf, :nf] = gram[np.ix_(free, free)]
            kkt[:nf, nf] = 1.0
            kkt[nf, :nf] = 1.0
            room = budget - xl.sum()
            sol = np.linalg.solve(kkt, np.append(rhs, room))
            xf, lam = sol[:nf], sol[nf]
            # a large multiplier costs the equality row a few digits; restore it
            xf = xf + (room - xf.sum()) / nf
        else:
            xf, lam = np.linalg.solve(gram[np.ix_(free, free)], rhs), 0.0
    except np.linalg.LinAlgError:
        return None
    out = x.copy()
    out[lower] = xl
    out[free] = xf
    grad = gram @ out - lin
    scale = max(np.abs(lin).max(), np.abs(gram).max() * np.abs(out).max(), 1e-300)
    if lam < -1e-10 * scale or np.any(out[free] < lo[free]):
        return None
    if np.any(grad[lower] + lam < -1e-9 * scale) or out.sum() > budget * (1 + 1e-12):
        return None
    return out


def _restore(x, lo, budget):
    """Undo round-off: clip to the floor and shrink the excess over the budget."""
    x = np.maximum(x, lo)
    total = x.sum()
    if total > budget:
        free = x - lo
        x = lo + free * ((budget - lo.sum()) / free.sum())
    return x


def _least_squares(mat, target, p_sum, tol, max_iter):
    """min |mat @ p - target|^2 over the feasible set, via FISTA + active-set polish."""
    k = mat.shape[1]
    gram = mat.T @ mat
    lin = mat.T @ target
    lo_p = np.full(k, EPS_P * p_sum)
    x0 = np.full(k, p_sum / k)
    x, it, stat = _kernels.fista_box_budget(gram, lin, lo_p, p_sum, x0, max_iter, tol)
    f = lambda v: float(np.sum((mat @ v - target) ** 2))  # noqa: E731
    polished = _polish(gram, lin, lo_p, p_sum, x, thr=max(1e-9 * p_sum, 1e2 * EPS_P * p_sum))
    if polished is not None and f(polished) <= f(x) * (1 + 1e-12) + 1e-300:
        x = polished
        px = _kernels.project_box_budget(
            x - (gram @ x - lin) / np.linalg.eigvalsh(gram)[-1], lo_p, p_sum)
        stat = float(np.linalg.norm(x - px) / max(np.linalg.norm(x), 1e-300))
    x = _restore(x, lo_p, p_sum)
    return x, f(x), it, stat


def _least_absolute(mat, target, p_sum):
    """min sum |mat @ p - target| over the feasible set, as an LP (HiGHS)."""
    n, k = mat.shape
    tscale = max(float(np.abs(target).max()), 1e-300)
    a = mat * (p_sum / tscale)          # unknown u = p / p_sum in [eps, 1]
    t = target / tscale
    # variables [u (k), r (n)] ; minimise sum r  s.t.  -r <= a u - t <= r
    c = np.concatenate([np.zeros(k), np.ones(n)])
    eye = np.eye(n)
    a_ub = np.block([[a, -eye], [-a, -eye], [np.ones((1, k)), np.zeros((1, n))]])
    b_ub = np.concatenate([t, -t, [1.0]])
    bounds = [(EPS_P, None)] * k + [(0, None)] * n
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs",
                  options=dict(primal_feasibility_tolerance=1e-10,
                               dual_feasibility_tolerance=1e-10))
    if res.status != 0:
        raise RuntimeError(f"l1 power allocation failed: {res.message}")
    lo = np.full(k, EPS_P * p_sum)
    p = _restore(res.x[:k] * p_sum, lo, p_sum)
    f = lambda v: float(np.sum(np.abs(mat @ v - target)))  # noqa: E731
    # the solver's absolute tolerances can leave a sliver of budget unused on
    # badly scaled instances; keep the rescaled point when it is no worse
    full = _restore(p * (p_sum / p.sum()), lo, p_sum)
    if f(full) <= f(p):
        p = full
    return p, f(p)


def _solve(mat, target, p_sum, mode, tol, max_iter):
    if p_sum <= 0:
        raise ValueError("p_sum must be > 0")
    if mode == "l2":
        p, res, it, stat = _least_squares(mat, target, p_sum, tol, max_iter)
        if stat > tol:
            warnings.warn(f"power solver stopped at stationarity {stat:.3g} > {tol:.3g}",
                          RuntimeWarning, stacklevel=3)
        return p, res, it, stat
    if mode == "l1":
        p, res = _least_absolute(mat, target, p_sum)
        return p, res, 0, 0.0
    raise ValueError(f"unknown mode {mode!r}")


def solve_constrained(system: SnrSystem, p_sum: float, mode: Norm = "l2",
                      tol: float = 1e-8, max_iter: int = 200_000) -> PowerSolution:
    """Best sum-power-feasible fit of the site SNR targets."""
    mat = system.a_matrix * system.sbar
    p, res, it, stat = _solve(mat, system.target, p_sum, mode, tol, max_iter)
    exact = solve_exact_quiet(system, p_sum)
    return PowerSolution(p, exact, res, it, stat)


def solve_exact_quiet(system: SnrSystem, p_sum: float) -> bool:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return solve_exact(system, p_sum).feasible_exact
        except np.linalg.LinAlgError:
            return False


def allocate_cluster_power(system: SnrSystem, p_sum: float, mode: Norm = "l2") -> PowerSolution:
    """Exact solve when feasible, constrained fit otherwise."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            sol = solve_exact(system, p_sum)
        except np.linalg.LinAlgError:
            sol = None
    if sol is not None and sol.feasible_exact:
        return sol
    return solve_constrained(system, p_sum, mode)


def sample_system(c, samples: DemandSamples, scenario: Scenario, nu: float):
    """Matrix ``B`` with ``(B @ p)_l`` the average SNR at sample ``l`` and the
    per-sample target ``theta_d + delta/nu``."""
    gain = _kernels.clamped_gain(samples.x, np.asarray(c, dtype=np.float64).reshape(-1, samples.dim),
                                 scenario.alpha, scenario.d_min)
    mat = gain * (scenario.small_scale_mean * scenario.shadow_mean / scenario.noise_power)
    return mat, samples.theta_d + scenario.delta / nu


def optimize_global_power(c, samples: DemandSamples, scenario: Scenario, nu: float,
                          mode: Norm = "l2", tol: float = 1e-8,
                          max_iter: int = 200_000) -> PowerSolution:
    """Powers minimising the SNR-level error over all demand samples."""
    mat, target = sample_system(c, samples, scenario, nu)
    p, res, it, stat = _solve(mat, target, scenario.sum_power, mode, tol, max_iter)
    return PowerSolution(p, False, res, it, stat)


def surrogate_objective(p, c, samples: DemandSamples, scenario: Scenario, nu: float,
                        mode: Norm = "l2") -> float:
    mat, target = sample_system(c, samples, scenario, nu)
    r = mat @ np.asarray(p, dtype=np.float64) - target
    return float(np.sum(r * r)) if mode == "l2" else float(np.sum(np.abs(r)))
