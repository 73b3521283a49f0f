"""One-step transitions and full runners for the anchored extragradient family.

Both algorithms share the anchor machinery.  With beta_k = 1/(k+2) the
varying-step method iterates

    z^{k+1/2} = z^k + beta_k (zbar^k - z^k) - alpha_k G(z^k)
    z^{k+1}   = z^k + beta_k (zbar^k - z^k) - alpha_k G(z^{k+1/2})

while the fast-extragradient method (beta_k = 1/(k+1), alpha = 1/R) uses

    z^{k+1/2} = z^k + beta_k (zbar^k - z^k) - (1-beta_k)(alpha + 2 rho) G(z^k)
    z^{k+1}   = z^k + beta_k (zbar^k - z^k) - alpha G(z^{k+1/2})
                - (1-beta_k) 2 rho G(z^k).

The anchor then moves by zbar^{k+1} = zbar^k + gamma_{k+1} G(z^{k+1}) with a
signed, possibly capped gamma (zero in fixed mode), optionally through the
resolvent (I + t H)^{-1} when a proximal term is attached.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .diagnostics import (
    BoundConstants,
    HypothesisWarning,
    Trajectory,
    TrajectoryRecord,
    _state_coefficients,
    theoretical_bound,
)
from .problems import JointPoint, SaddleProblem, project_simplex
from .schedules import PI2_OVER_6, ANCHOR_MODES, AnchorSchedule, EagvSchedule, FegSchedule

__all__ = [
    "ProximalSpec",
    "RunConfig",
    "SolverState",
    "StepOutput",
    "ResolventError",
    "init_state",
    "eagv_step",
    "feg_step",
    "proximal_anchor_update",
    "projected_step",
    "run",
]

DIVERGENCE_LIMIT = 1e12


class ResolventError(RuntimeError):
    """The resolvent solve failed to reach the requested residual."""


@dataclass(frozen=True)
class ProximalSpec:
    """Proximal anchor settings: weight t, residual tolerance, optional H.

    H defaults to the problem operator.  A custom affine H is given by
    (h_matrix, h_offset); a custom black-box H by h_operator together with
    its Lipschitz constant for the iterative solve.
    """

    t: float = 1.0
    tol: float = 1e-12
    h_matrix: Optional[np.ndarray] = None
    h_offset: Optional[np.ndarray] = None
    h_operator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h_lipschitz: Optional[float] = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("proximal weight t must be nonnegative")
        if self.tol <= 0:
            raise ValueError("resolvent tolerance must be positive")


@dataclass
class RunConfig:
    """Algorithm-level configuration of a single solver run."""

    algorithm: str  # "eagv" or "feg"
    anchor_mode: str = "moving_pos"
    iters: int = 2000
    z0: Optional[np.ndarray] = None
    alpha0: Optional[float] = None  # varying-step start; ignored by "feg"
    c0: float = PI2_OVER_6
    delta_scale: float = 1.0
    delta_literal: bool = False
    e_scale: float = 1.0
    proximal: Optional[ProximalSpec] = None
    keep_iterates: bool = False

    def __post_init__(self):
        if self.algorithm not in ("eagv", "feg"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.anchor_mode not in ANCHOR_MODES:
            raise ValueError(f"unknown anchor mode {self.anchor_mode!r}")
        if self.iters < 0:
            raise ValueError("iters must be nonnegative")


@dataclass
class SolverState:
    """Iterate, anchor, and schedule of one solver at index k."""

    z: JointPoint
    z_bar: JointPoint
    algorithm: str
    anchor_mode: str
    schedule: EagvSchedule | FegSchedule
    proximal: Optional[ProximalSpec] = None

    @property
    def k(self) -> int:
        return self.schedule.k


@dataclass(frozen=True)
class StepOutput:
    next_state: SolverState
    half_point: JointPoint
    g_half: JointPoint
    g_next: JointPoint
    gamma_used: float
    resolvent_residual: Optional[float] = None


def init_state(problem: SaddleProblem, config: RunConfig) -> SolverState:
    """Initial state with z^0 = zbar^0 and a fresh schedule."""
    if config.z0 is not None:
        z0 = np.asarray(config.z0, dtype=float)
        if z0.shape != (problem.dim,):
            raise ValueError(f"z0 must have {problem.dim} coordinates")
    elif problem.constraint == "simplex":
        z0 = np.concatenate(
            [np.full(problem.n, 1.0 / problem.n), np.full(problem.m, 1.0 / problem.m)]
        )
    else:
        z0 = np.ones(problem.dim)
    if problem.constraint == "simplex":
        z0 = _project_blocks(z0, problem)
    anchor = AnchorSchedule(
        mode=config.anchor_mode,
        c0=config.c0,
        delta_scale=config.delta_scale,
        e_scale=config.e_scale,
        literal_delta=config.delta_literal,
    )
    if config.algorithm == "eagv":
        schedule = EagvSchedule(problem.smoothness, alpha0=config.alpha0, anchor=anchor)
    else:
        schedule = FegSchedule(problem.smoothness, problem.comonotonicity, anchor=anchor)
    point = JointPoint(z0, n=problem.n, m=problem.m)
    return SolverState(
        z=point,
        z_bar=point,
        algorithm=config.algorithm,
        anchor_mode=config.anchor_mode,
        schedule=schedule,
        proximal=config.proximal,
    )


def _affine_h(problem: SaddleProblem, spec: ProximalSpec):
    """Matrix/offset form of H when one is available, else None."""
    if spec.h_matrix is not None:
        off = (
            np.zeros(spec.h_matrix.shape[0])
            if spec.h_offset is None
            else np.asarray(spec.h_offset, float)
        )
        return np.asarray(spec.h_matrix, float), off
    if spec.h_operator is not None:
        return None
    if problem.matrix is not None:
        return problem.matrix, problem.offset
    return None


def _h_callable(problem: SaddleProblem, spec: ProximalSpec):
    if spec.h_operator is not None:
        lip = spec.h_lipschitz if spec.h_lipschitz is not None else problem.smoothness
        return spec.h_operator, lip
    return problem.operator, problem.smoothness


def _resolve(rhs: np.ndarray, t: float, problem: SaddleProblem, spec: ProximalSpec):
    """Solve (I + t H)(w) = rhs; returns (w, residual)."""
    affine = _affine_h(problem, spec)
    if affine is not None:
        mat, off = affine
        system = np.eye(rhs.size) + t * mat
        try:
            w = np.linalg.solve(system, rhs - t * off)
        except np.linalg.LinAlgError as exc:
            # Impossible for monotone affine H with t >= 0, but guarded.
            raise ResolventError(f"singular resolvent system: {exc}") from exc
        residual = float(np.linalg.norm(w + t * (mat @ w + off) - rhs))
    else:
        h, lip = _h_callable(problem, spec)
        step = 1.0 / (1.0 + t * lip) ** 2
        w = rhs.copy()
        residual = math.inf
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(50_000):
                flow = w + t * h(w) - rhs
                residual = float(np.linalg.norm(flow))
                if residual <= spec.tol or not math.isfinite(residual):
                    break
                w = w - step * flow
    if not residual <= spec.tol:  # also catches NaN residuals
        raise ResolventError(
            f"resolvent residual {residual:.3e} exceeds tolerance {spec.tol:.1e}"
        )
    return w, residual


def proximal_anchor_update(
    z_bar: JointPoint,
    g_next: JointPoint,
    gamma: float,
    t_k: float,
    problem: SaddleProblem,
    tol: float = 1e-12,
    spec: Optional[ProximalSpec] = None,
) -> JointPoint:
    """Resolvent anchor move: (I + t H)^{-1}(zbar + gamma G(z^{k+1}) + t H(zbar)).

    With t_k = 0 this is exactly zbar + gamma * G(z^{k+1}).
    """
    if t_k < 0:
        raise ValueError("t_k must be nonnegative")
    if spec is None:
        spec = ProximalSpec(t=t_k, tol=tol)
    target = z_bar.coords + gamma * g_next.coords
    if t_k == 0.0:
        return JointPoint(target, n=z_bar.n, m=z_bar.m)
    if spec.h_operator is not None:
        h = spec.h_operator
    elif spec.h_matrix is not None:
        h = lambda v: spec.h_matrix @ v + (
            spec.h_offset if spec.h_offset is not None else 0.0
        )
    else:
        h = problem.operator
    rhs = target + t_k * h(z_bar.coords)
    w, _ = _resolve(rhs, t_k, problem, spec)
    return JointPoint(w, n=z_bar.n, m=z_bar.m)


def _anchor_update(
    zbar: np.ndarray,
    g_next: np.ndarray,
    gamma: float,
    proximal: Optional[ProximalSpec],
    problem: SaddleProblem,
):
    target = zbar + gamma * g_next
    if proximal is None or proximal.t == 0.0:
        return target, (0.0 if proximal is not None else None)
    if proximal.h_operator is not None:
        h_zbar = proximal.h_operator(zbar)
    elif proximal.h_matrix is not None:
        off = proximal.h_offset if proximal.h_offset is not None else 0.0
        h_zbar = proximal.h_matrix @ zbar + off
    else:
        h_zbar = problem.operator(zbar)
    return _resolve(target + proximal.t * h_zbar, proximal.t, problem, proximal)


def _finish_step(state, problem, half, g_half, z_next, g_next) -> StepOutput:
    schedule = state.schedule.clone()
    gamma = schedule.advance(float(g_next @ g_next))
    zbar_next, residual = _anchor_update(
        state.z_bar.coords, g_next, gamma, state.proximal, problem
    )
    n, m = problem.n, problem.m
    next_state = SolverState(
        z=JointPoint(z_next, n=n, m=m),
        z_bar=JointPoint(zbar_next, n=n, m=m),
        algorithm=state.algorithm,
        anchor_mode=state.anchor_mode,
        schedule=schedule,
        proximal=state.proximal,
    )
    return StepOutput(
        next_state=next_state,
        half_point=JointPoint(half, n=n, m=m),
        g_half=JointPoint(g_half, n=n, m=m),
        g_next=JointPoint(g_next, n=n, m=m),
        gamma_used=gamma,
        resolvent_residual=residual,
    )


def eagv_step(state: SolverState, problem: SaddleProblem) -> StepOutput:
    """One varying-step transition, anchor handled per the state's mode."""
    sch = state.schedule
    z = state.z.coords
    zbar = state.z_bar.coords
    pull = sch.beta * (zbar - z)
    g_z = problem.operator(z)
    half = z + pull - sch.alpha * g_z
    g_half = problem.operator(half)
    z_next = z + pull - sch.alpha * g_half
    g_next = problem.operator(z_next)
    return _finish_step(state, problem, half, g_half, z_next, g_next)


def feg_step(state: SolverState, problem: SaddleProblem) -> StepOutput:
    """One fast-extragradient transition for comonotone problems."""
    sch = state.schedule
    rho = sch.rho
    z = state.z.coords
    zbar = state.z_bar.coords
    beta = sch.beta
    alpha = sch.alpha
    pull = beta * (zbar - z)
    g_z = problem.operator(z)
    half = z + pull - (1.0 - beta) * (alpha + 2.0 * rho) * g_z
    g_half = problem.operator(half)
    z_next = z + pull - alpha * g_half - (1.0 - beta) * 2.0 * rho * g_z
    g_next = problem.operator(z_next)
    return _finish_step(state, problem, half, g_half, z_next, g_next)


def _project_blocks(coords: np.ndarray, problem: SaddleProblem) -> np.ndarray:
    return np.concatenate(
        [project_simplex(coords[: problem.n]), project_simplex(coords[problem.n :])]
    )


def projected_step(
    step: Callable[[SolverState, SaddleProblem], StepOutput],
    state: SolverState,
    problem: SaddleProblem,
) -> StepOutput:
    """Apply a step, then project iterate, half point, and anchor per block."""
    if problem.constraint != "simplex":
        raise ValueError("projected stepping requires a simplex-constrained problem")
    out = step(state, problem)
    nxt = out.next_state
    nxt = SolverState(
        z=JointPoint(_project_blocks(nxt.z.coords, problem), problem.n, problem.m),
        z_bar=JointPoint(_project_blocks(nxt.z_bar.coords, problem), problem.n, problem.m),
        algorithm=nxt.algorithm,
        anchor_mode=nxt.anchor_mode,
        schedule=nxt.schedule,
        proximal=nxt.proximal,
    )
    half = JointPoint(_project_blocks(out.half_point.coords, problem), problem.n, problem.m)
    return StepOutput(
        next_state=nxt,
        half_point=half,
        g_half=out.g_half,
        g_next=out.g_next,
        gamma_used=out.gamma_used,
        resolvent_residual=out.resolvent_residual,
    )


def _bound_kind(config: RunConfig, problem: SaddleProblem) -> Optional[str]:
    if problem.saddle_point is None:
        return None
    if config.anchor_mode in ("moving_neg_naive", "moving_neg_strict"):
        return None
    if config.algorithm == "eagv":
        return "eagv_fixed" if config.anchor_mode == "fixed" else "eagv_moving"
    return None if config.anchor_mode == "fixed" else "feg_moving"


def _feasibility_violation(coords: np.ndarray, problem: SaddleProblem) -> float:
    worst = 0.0
    for block in (coords[: problem.n], coords[problem.n :]):
        worst = max(worst, abs(float(block.sum()) - 1.0), -float(block.min(initial=0.0)))
    return worst


def run(problem: SaddleProblem, config: RunConfig) -> Trajectory:
    """Execute the configured solver and record one metrics row per index.

    Runs are deterministic for a fixed configuration.  Numerical failures
    (non-finite iterates, an iterate norm beyond 1e12, a resolvent that will
    not converge) end the run early; the partial trajectory carries the
    error message and completed=False.
    """
    state = init_state(problem, config)
    step = eagv_step if config.algorithm == "eagv" else feg_step
    projected = problem.constraint == "simplex"
    z_star = problem.saddle_point

    kind = _bound_kind(config, problem)
    consts = None
    hypothesis_note = None
    if kind is not None:
        sch = state.schedule
        alpha0 = sch.alpha0 if config.algorithm == "eagv" else 1.0 / problem.smoothness
        alpha_inf = sch.alpha_inf if config.algorithm == "eagv" else alpha0
        gap0 = state.z.coords - z_star.coords
        consts = BoundConstants(
            R=problem.smoothness,
            rho=problem.comonotonicity,
            alpha0=alpha0,
            alpha_inf=alpha_inf,
            c0=config.c0,
            c_inf=sch.anchor.c_inf,
            dist0_sq=float(gap0 @ gap0),
        )
        if kind == "eagv_moving" and consts.c_inf * consts.alpha_inf < 1.0:
            hypothesis_note = (
                f"c_inf * alpha_inf = {consts.c_inf * consts.alpha_inf:.6g} < 1; "
                "moving-anchor bound not emitted"
            )
        if kind == "feg_moving":
            need = 1.0 / (1.0 / consts.R + 2.0 * consts.rho)
            if consts.c_inf < need:
                hypothesis_note = (
                    f"c_inf = {consts.c_inf:.6g} < {need:.6g}; bound not emitted"
                )
        if hypothesis_note is not None:
            warnings.warn(hypothesis_note, HypothesisWarning, stacklevel=2)
            kind = None

    trajectory = Trajectory(
        records=[],
        algorithm=config.algorithm,
        anchor_mode=config.anchor_mode,
        e_scale=config.e_scale,
        coords=[] if problem.n == 1 and problem.m == 1 else None,
        iterates=[] if config.keep_iterates else None,
        anchors=[] if config.keep_iterates else None,
        max_resolvent_residual=0.0 if config.proximal is not None else None,
        max_feasibility_violation=0.0 if projected else None,
        hypothesis_note=hypothesis_note,
    )

    def record(st: SolverState):
        z = st.z.coords
        zbar = st.z_bar.coords
        k = st.k
        g = problem.operator(z)
        g2 = float(g @ g)
        dist = anchor_dist = lyap = None
        if z_star is not None:
            gap = z - z_star.coords
            agap = zbar - z_star.coords
            dist = float(gap @ gap)
            anchor_dist = float(agap @ agap)
            A, B, c = _state_coefficients(st)
            lyap = A * g2 + B * float(g @ (z - zbar)) + c * float(agap @ agap)
        bound = None
        if kind is not None and not (kind == "feg_moving" and k == 0):
            bound = theoretical_bound(k, kind, consts)
        trajectory.records.append(
            TrajectoryRecord(
                k=k,
                grad_norm_sq=g2,
                dist_to_saddle_sq=dist,
                anchor_dist_sq=anchor_dist,
                lyapunov=lyap,
                alpha_k=st.schedule.alpha,
                c_k=st.schedule.anchor.c,
                gamma_k=st.schedule.anchor.gamma,
                bound=bound,
            )
        )
        if trajectory.coords is not None:
            trajectory.coords.append((float(z[0]), float(z[1]), float(zbar[0]), float(zbar[1])))
        if trajectory.iterates is not None:
            trajectory.iterates.append(z.copy())
            trajectory.anchors.append(zbar.copy())
        if projected:
            violation = max(
                _feasibility_violation(z, problem), _feasibility_violation(zbar, problem)
            )
            trajectory.max_feasibility_violation = max(
                trajectory.max_feasibility_violation, violation
            )

    record(state)
    for _ in range(config.iters):
        try:
            if projected:
                out = projected_step(step, state, problem)
            else:
                out = step(state, problem)
        except (ResolventError, ValueError, FloatingPointError) as exc:
            trajectory.completed = False
            trajectory.error = f"iteration {state.k}: {exc}"
            break
        state = out.next_state
        coords = state.z.coords
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(state.z_bar.coords))):
            trajectory.completed = False
            trajectory.error = f"iteration {state.k}: non-finite iterate or anchor"
            break
        if float(np.linalg.norm(coords)) > DIVERGENCE_LIMIT:
            trajectory.completed = False
            trajectory.error = (
                f"iteration {state.k}: iterate norm exceeds {DIVERGENCE_LIMIT:.0e}, aborting"
            )
            break
        if out.resolvent_residual is not None and trajectory.max_resolvent_residual is not None:
            trajectory.max_resolvent_residual = max(
                trajectory.max_resolvent_residual, out.resolvent_residual
            )
        record(state)
    return trajectory
