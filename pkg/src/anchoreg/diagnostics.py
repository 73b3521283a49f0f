"""Lyapunov functionals, theoretical bounds, and empirical rate estimates.

The varying-step functional is

    V_k = A_k ||G(z^k)||^2 + B_k <G(z^k), z^k - zbar^k> + c_k ||z* - zbar^k||^2

and the fast-extragradient functional flips the inner-product sign,

    V_k = A_k ||G(z^k)||^2 - B_k <G(z^k), zbar^k - z^k> + c_k ||z* - zbar^k||^2,

which is the same number; only the bookkeeping of the middle term differs.
Both are nonincreasing along their algorithms (up to the capped-negative
anchor mode, where V_k stays below V_0 plus the summable e budget).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .problems import JointPoint, SaddleProblem
from .schedules import e_default, eagv_schedule_at, feg_schedule_at

if TYPE_CHECKING:  # pragma: no cover
    from .algorithms import SolverState

__all__ = [
    "TrajectoryRecord",
    "Trajectory",
    "MonotoneReport",
    "RateReport",
    "BoundConstants",
    "HypothesisWarning",
    "ExactConvergence",
    "lyapunov_eagv",
    "lyapunov_feg",
    "check_lyapunov_monotone",
    "theoretical_bound",
    "rate_slope",
]


class HypothesisWarning(UserWarning):
    """A theorem hypothesis on the limit constants does not hold."""


class ExactConvergence(RuntimeError):
    """The gradient norm vanished exactly inside the requested window."""


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-iteration metrics; fields are None when the quantity is undefined."""

    k: int
    grad_norm_sq: float
    dist_to_saddle_sq: Optional[float]
    anchor_dist_sq: Optional[float]
    lyapunov: Optional[float]
    alpha_k: float
    c_k: float
    gamma_k: float
    bound: Optional[float]


@dataclass
class Trajectory:
    """A recorded run: metric rows plus run-level metadata."""

    records: list[TrajectoryRecord]
    algorithm: str
    anchor_mode: str
    completed: bool = True
    error: Optional[str] = None
    e_scale: float = 1.0
    coords: Optional[list[tuple[float, float, float, float]]] = None  # (x, y, xbar, ybar)
    iterates: Optional[list[np.ndarray]] = None
    anchors: Optional[list[np.ndarray]] = None
    max_resolvent_residual: Optional[float] = None
    max_feasibility_violation: Optional[float] = None
    hypothesis_note: Optional[str] = None

    def __len__(self) -> int:
        return len(self.records)


def _records(trajectory) -> Sequence[TrajectoryRecord]:
    return trajectory.records if isinstance(trajectory, Trajectory) else trajectory


def _state_coefficients(state: "SolverState") -> tuple[float, float, float]:
    sch = state.schedule
    if state.algorithm == "eagv":
        _, B, A = eagv_schedule_at(sch.k, sch.alpha)
    else:
        _, _, B, A = feg_schedule_at(sch.k, sch.R, sch.rho)
    return A, B, sch.anchor.c


def _lyapunov(state: "SolverState", problem: SaddleProblem, z_star: JointPoint, sign: float) -> float:
    if z_star is None:
        raise ValueError("Lyapunov evaluation needs a known saddle point")
    A, B, c = _state_coefficients(state)
    z = state.z.coords
    zbar = state.z_bar.coords
    g = problem.operator(z)
    anchor_gap = z_star.coords - zbar
    if sign > 0:
        middle = B * float(g @ (z - zbar))
    else:
        middle = -B * float(g @ (zbar - z))
    return A * float(g @ g) + middle + c * float(anchor_gap @ anchor_gap)


def lyapunov_eagv(state: "SolverState", problem: SaddleProblem, z_star: JointPoint) -> float:
    """Varying-step functional at the state's current index."""
    return _lyapunov(state, problem, z_star, sign=+1.0)


def lyapunov_feg(state: "SolverState", problem: SaddleProblem, z_star: JointPoint) -> float:
    """Fast-extragradient functional at the state's current index."""
    return _lyapunov(state, problem, z_star, sign=-1.0)


@dataclass(frozen=True)
class MonotoneReport:
    ok: bool
    first_violation: Optional[int]
    max_increase: float
    applicable: bool = True


def check_lyapunov_monotone(
    trajectory,
    mode: Optional[str] = None,
    e_scale: Optional[float] = None,
) -> MonotoneReport:
    """Verify the mode-appropriate descent property of the recorded V_k.

    In fixed, positive-moving, and proximal runs V must not increase beyond
    a relative slack of 1e-8.  The capped negative mode instead keeps
    V_k <= V_0 + sum_{j<=k} e_j (same slack).  The naive negative mode has
    no guarantee and is reported as not applicable.
    """
    records = _records(trajectory)
    if mode is None:
        mode = trajectory.anchor_mode if isinstance(trajectory, Trajectory) else None
    if mode is None:
        raise ValueError("anchor mode is required to pick the right criterion")
    if e_scale is None:
        e_scale = trajectory.e_scale if isinstance(trajectory, Trajectory) else 1.0
    values = [r.lyapunov for r in records]
    if any(v is None for v in values) or not values:
        raise ValueError("trajectory has no Lyapunov values")
    if mode == "moving_neg_naive":
        return MonotoneReport(ok=True, first_violation=None, max_increase=0.0, applicable=False)
    if mode == "moving_neg_strict":
        v0 = values[0]
        slack = 1e-8 * max(1.0, v0)
        budget = 0.0
        worst = -math.inf
        first = None
        for k, v in enumerate(values):
            budget += e_default(k, e_scale)
            excess = v - (v0 + budget + slack)
            worst = max(worst, excess)
            if excess > 0 and first is None:
                first = k
        return MonotoneReport(ok=first is None, first_violation=first, max_increase=max(worst, 0.0))
    worst = 0.0
    first = None
    for k in range(len(values) - 1):
        allowed = 1e-8 * max(1.0, abs(values[k]))
        increase = values[k + 1] - values[k]
        worst = max(worst, increase)
        if increase > allowed and first is None:
            first = k + 1
    return MonotoneReport(ok=first is None, first_violation=first, max_increase=worst)


@dataclass(frozen=True)
class BoundConstants:
    """Constants entering the closed-form gradient bounds."""

    R: float
    rho: float
    alpha0: float
    alpha_inf: float
    c0: float
    c_inf: float
    dist0_sq: float  # ||z^0 - z*||^2


def theoretical_bound(k: int, algorithm: str, consts: BoundConstants) -> Optional[float]:
    """Closed-form bound on ||G(z^k)||^2, or None when hypotheses fail.

    ``algorithm`` is one of "eagv_fixed", "eagv_moving", "feg_moving".  The
    moving-anchor forms require c_inf * alpha_inf >= 1 (varying-step) or
    c_inf >= 1/(1/R + 2 rho) (fast-extragradient); violations produce a
    warning and None.  The fast-extragradient bound is defined for k >= 1.
    """
    if algorithm == "eagv_fixed":
        num = 4.0 * (1.0 + consts.alpha0 * consts.alpha_inf * consts.R**2)
        return num / consts.alpha_inf**2 * consts.dist0_sq / ((k + 1.0) * (k + 2.0))
    if algorithm == "eagv_moving":
        if consts.c_inf * consts.alpha_inf < 1.0:
            warnings.warn(
                f"c_inf * alpha_inf = {consts.c_inf * consts.alpha_inf:.6g} < 1; "
                "moving-anchor bound unavailable",
                HypothesisWarning,
                stacklevel=2,
            )
            return None
        num = 4.0 * (consts.alpha0 * consts.R**2 + consts.c0) * consts.dist0_sq
        return num / (consts.alpha_inf * (k + 1.0) * (k + 2.0))
    if algorithm == "feg_moving":
        slope = 1.0 / consts.R + 2.0 * consts.rho
        if consts.c_inf < 1.0 / slope:
            warnings.warn(
                f"c_inf = {consts.c_inf:.6g} < 1/(1/R + 2 rho) = {1.0 / slope:.6g}; "
                "bound unavailable",
                HypothesisWarning,
                stacklevel=2,
            )
            return None
        if k < 1:
            raise ValueError("the fast-extragradient bound is defined for k >= 1")
        return 4.0 * consts.c0 * consts.dist0_sq / (k * k * slope)
    raise ValueError(f"unknown bound kind {algorithm!r}")


@dataclass(frozen=True)
class RateReport:
    slope: float
    k_window: tuple[int, int]
    r_squared: float


def rate_slope(trajectory, k_min: int, k_max: int) -> RateReport:
    """Least-squares slope of log ||G||^2 against log k over [k_min, k_max]."""
    if k_min < 1:
        raise ValueError("k_min must be at least 1 (log of the index)")
    if k_min >= k_max:
        raise ValueError("window must satisfy k_min < k_max")
    records = _records(trajectory)
    pts = [(r.k, r.grad_norm_sq) for r in records if k_min <= r.k <= k_max]
    if len(pts) < 2:
        raise ValueError("window contains fewer than two records")
    ks = np.array([p[0] for p in pts], dtype=float)
    gs = np.array([p[1] for p in pts], dtype=float)
    if np.any(gs <= 0.0):
        raise ExactConvergence("converged exactly: zero gradient norm inside the window")
    logk = np.log(ks)
    logg = np.log(gs)
    slope, intercept = np.polyfit(logk, logg, 1)
    fitted = slope * logk + intercept
    ss_res = float(np.sum((logg - fitted) ** 2))
    ss_tot = float(np.sum((logg - logg.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateReport(slope=float(slope), k_window=(k_min, k_max), r_squared=r_squared)
