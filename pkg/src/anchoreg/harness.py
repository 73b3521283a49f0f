"""Experiment front end: configs, presets, CSV trajectories, summaries.

Config files are flat ``key = value`` text with ``#`` comments.  The CSV
schema is one header plus one row per iteration::

    k,grad_norm_sq,dist_to_saddle_sq,anchor_dist_sq,lyapunov,alpha_k,c_k,gamma_k,bound

with full double precision and empty fields for undefined quantities.  For
one-dimensional blocks a ``<name>.coords.csv`` sidecar with columns
``k,x,y,xbar,ybar`` is written next to the trajectory for plotting.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import diagnostics
from .algorithms import ProximalSpec, RunConfig, run
from .diagnostics import ExactConvergence, Trajectory, TrajectoryRecord
from .problems import (
    SaddleProblem,
    make_almost_bilinear,
    make_comonotone_quadratic,
    make_nonlinear_game,
)
from .schedules import PI2_OVER_6

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ConfigError",
    "parse_config",
    "preset",
    "preset_names",
    "build_problem",
    "run_experiment",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

CSV_COLUMNS = (
    "k",
    "grad_norm_sq",
    "dist_to_saddle_sq",
    "anchor_dist_sq",
    "lyapunov",
    "alpha_k",
    "c_k",
    "gamma_k",
    "bound",
)


class ConfigError(ValueError):
    """A configuration document failed validation; the message names the key."""


@dataclass
class ExperimentConfig:
    """One experiment: a problem, an algorithm, and all schedule constants."""

    problem: str  # almost_bilinear | comonotone | game
    algorithm: str  # eagv | feg
    anchor_mode: str = "moving_pos"
    eps: float = 0.01
    R: float = 1.0
    rho: float = -1.0 / 3.0
    m: int = 50
    k: int = 100
    n: int = 250
    seed: int = 0
    proximal: bool = False
    proximal_t: float = 1.0
    proximal_tol: float = 1e-12
    iters: int = 2000
    z0: Optional[tuple[float, ...]] = None
    alpha0: Optional[float] = None
    c0: float = PI2_OVER_6
    delta_scale: float = 1.0
    delta_literal: bool = False
    e_scale: float = 1.0
    output_path: str = "trajectory.csv"


_DEFAULTS = ExperimentConfig(problem="", algorithm="")

_PROBLEMS = ("almost_bilinear", "comonotone", "game")
_ALGORITHMS = ("eagv", "feg")
_MODES = ("fixed", "moving_pos", "moving_neg_naive", "moving_neg_strict")


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    raise ConfigError(f"key {key!r}: expected true or false, got {raw!r}")


def _parse_scalar(key: str, raw: str, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None


def _coerce(key: str, raw: str):
    if key in ("problem", "algorithm", "anchor_mode", "output_path"):
        return raw
    if key in ("proximal", "delta_literal"):
        return _parse_bool(key, raw)
    if key in ("m", "k", "n", "seed", "iters"):
        return _parse_scalar(key, raw, int)
    if key == "z0":
        try:
            return tuple(float(part) for part in raw.split(","))
        except ValueError:
            raise ConfigError(f"key 'z0': cannot parse {raw!r} as a comma-separated vector") from None
    return _parse_scalar(key, raw, float)


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.problem not in _PROBLEMS:
        raise ConfigError(f"key 'problem': must be one of {_PROBLEMS}, got {cfg.problem!r}")
    if cfg.algorithm not in _ALGORITHMS:
        raise ConfigError(f"key 'algorithm': must be one of {_ALGORITHMS}, got {cfg.algorithm!r}")
    if cfg.anchor_mode not in _MODES:
        raise ConfigError(f"key 'anchor_mode': must be one of {_MODES}, got {cfg.anchor_mode!r}")
    if cfg.iters < 0:
        raise ConfigError(f"key 'iters': must be nonnegative, got {cfg.iters}")
    for key in ("c0", "delta_scale", "e_scale", "proximal_tol"):
        if getattr(cfg, key) <= 0:
            raise ConfigError(f"key {key!r}: must be positive, got {getattr(cfg, key)}")
    if cfg.proximal_t < 0:
        raise ConfigError(f"key 'proximal_t': must be nonnegative, got {cfg.proximal_t}")
    if cfg.alpha0 is not None and cfg.alpha0 <= 0:
        raise ConfigError(f"key 'alpha0': must be positive, got {cfg.alpha0}")
    if cfg.problem == "almost_bilinear" and cfg.eps <= 0:
        raise ConfigError(f"key 'eps': must be positive, got {cfg.eps}")
    if cfg.problem == "comonotone":
        if cfg.R <= 0:
            raise ConfigError(f"key 'R': must be positive, got {cfg.R}")
        if abs(cfg.rho) * cfg.R > 1 or not cfg.rho > -1.0 / (2.0 * cfg.R):
            raise ConfigError(
                f"key 'rho': needs |rho|*R <= 1 and rho > -1/(2R), got rho={cfg.rho}, R={cfg.R}"
            )
    if cfg.problem == "game" and min(cfg.m, cfg.k, cfg.n) < 1:
        raise ConfigError("key 'm'/'k'/'n': game dimensions must be at least 1")
    return cfg


def _build_config(values: dict) -> ExperimentConfig:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}")
    for required in ("problem", "algorithm"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}")
    return _validate(ExperimentConfig(**values))


def parse_config(source: str) -> ExperimentConfig:
    """Parse a flat key = value document into a validated config."""
    values: dict = {}
    for lineno, line in enumerate(source.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        if key not in known:
            raise ConfigError(f"unknown key {key!r}")
        if key in values:
            raise ConfigError(f"duplicate key {key!r}")
        values[key] = _coerce(key, raw)
    return _build_config(values)


def build_problem(cfg: ExperimentConfig) -> SaddleProblem:
    if cfg.problem == "almost_bilinear":
        return make_almost_bilinear(cfg.eps)
    if cfg.problem == "comonotone":
        return make_comonotone_quadratic(cfg.R, cfg.rho)
    return make_nonlinear_game(cfg.m, cfg.k, cfg.n, cfg.seed)


def to_run_config(cfg: ExperimentConfig) -> RunConfig:
    return RunConfig(
        algorithm=cfg.algorithm,
        anchor_mode=cfg.anchor_mode,
        iters=cfg.iters,
        z0=None if cfg.z0 is None else np.asarray(cfg.z0, dtype=float),
        alpha0=cfg.alpha0,
        c0=cfg.c0,
        delta_scale=cfg.delta_scale,
        delta_literal=cfg.delta_literal,
        e_scale=cfg.e_scale,
        proximal=ProximalSpec(t=cfg.proximal_t, tol=cfg.proximal_tol) if cfg.proximal else None,
    )


# Each preset is a list of key -> value dictionaries, one per run.
_AB = {"problem": "almost_bilinear", "eps": 0.01, "algorithm": "eagv", "iters": 2000}
_AB_FEG = {"problem": "almost_bilinear", "eps": 0.01, "algorithm": "feg", "iters": 2000}
_CM = {"problem": "comonotone", "R": 1.0, "rho": -1.0 / 3.0, "algorithm": "feg", "iters": 2000}
_GAME_DESK = {"problem": "game", "m": 50, "k": 100, "n": 250, "seed": 0, "algorithm": "feg"}
_GAME_FULL = {"problem": "game", "m": 500, "k": 1000, "n": 2500, "seed": 0, "algorithm": "feg"}

_PRESETS: dict[str, list[dict]] = {
    "fig1_fixed": [dict(_AB, anchor_mode="fixed", output_path="fig1_fixed.csv")],
    "fig1_moving": [dict(_AB, anchor_mode="moving_pos", output_path="fig1_moving.csv")],
    "fig2_pos": [dict(_AB, anchor_mode="moving_pos", output_path="fig2_pos.csv")],
    "fig2_neg": [dict(_AB, anchor_mode="moving_neg_naive", output_path="fig2_neg.csv")],
    "fig3_pos": [dict(_AB_FEG, anchor_mode="moving_pos", output_path="fig3_pos.csv")],
    "fig3_neg": [dict(_AB_FEG, anchor_mode="moving_neg_naive", output_path="fig3_neg.csv")],
    "fig4_all": [
        dict(_AB, anchor_mode="fixed", output_path="fig4_eagv_fixed.csv"),
        dict(_AB, anchor_mode="moving_pos", output_path="fig4_eagv_moving_pos.csv"),
        dict(_AB, anchor_mode="moving_neg_naive", output_path="fig4_eagv_moving_neg.csv"),
    ],
    "fig5_all": [
        dict(_CM, anchor_mode="fixed", output_path="fig5_feg_fixed.csv"),
        dict(_CM, anchor_mode="moving_pos", output_path="fig5_feg_moving_pos.csv"),
        dict(_CM, anchor_mode="moving_neg_naive", output_path="fig5_feg_moving_neg.csv"),
    ],
    "fig6_all": [
        dict(_GAME_FULL, iters=20000, anchor_mode="fixed", output_path="fig6_fixed.csv"),
        dict(
            _GAME_FULL,
            iters=20000,
            anchor_mode="moving_neg_naive",
            delta_scale=0.1,
            output_path="fig6_neg_scale01.csv",
        ),
        dict(
            _GAME_FULL,
            iters=20000,
            anchor_mode="moving_neg_naive",
            delta_scale=0.01,
            output_path="fig6_neg_scale001.csv",
        ),
    ],
    "fig6_desk": [
        dict(_GAME_DESK, iters=2000, anchor_mode="fixed", output_path="fig6_desk_fixed.csv"),
        dict(
            _GAME_DESK,
            iters=2000,
            anchor_mode="moving_neg_naive",
            delta_scale=0.1,
            output_path="fig6_desk_neg_scale01.csv",
        ),
        dict(
            _GAME_DESK,
            iters=2000,
            anchor_mode="moving_neg_naive",
            delta_scale=0.01,
            output_path="fig6_desk_neg_scale001.csv",
        ),
    ],
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str, overrides: Optional[dict] = None) -> list[ExperimentConfig]:
    """Configurations reproducing a named figure; user overrides win."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r} (choose from {', '.join(preset_names())})")
    configs = []
    for entry in _PRESETS[name]:
        values = dict(entry)
        if overrides:
            coerced = {key: _coerce(key, str(val)) for key, val in overrides.items()}
            values.update(coerced)
        configs.append(_build_config(values))
    return configs


def _format_field(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_trajectory_csv(path, records: list[TrajectoryRecord], error: Optional[str] = None) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.k),
                    _format_field(r.grad_norm_sq),
                    _format_field(r.dist_to_saddle_sq),
                    _format_field(r.anchor_dist_sq),
                    _format_field(r.lyapunov),
                    _format_field(r.alpha_k),
                    _format_field(r.c_k),
                    _format_field(r.gamma_k),
                    _format_field(r.bound),
                ]
            )
        )
    if error is not None:
        lines.append(f"# error: {error}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory_csv(path) -> list[TrajectoryRecord]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: missing or unexpected trajectory header")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: malformed row {line!r}")

        def opt(v: str):
            return None if v == "" else float(v)

        records.append(
            TrajectoryRecord(
                k=int(parts[0]),
                grad_norm_sq=float(parts[1]),
                dist_to_saddle_sq=opt(parts[2]),
                anchor_dist_sq=opt(parts[3]),
                lyapunov=opt(parts[4]),
                alpha_k=float(parts[5]),
                c_k=float(parts[6]),
                gamma_k=float(parts[7]),
                bound=opt(parts[8]),
            )
        )
    return records


def _write_coords_sidecar(path, trajectory: Trajectory) -> Optional[Path]:
    if trajectory.coords is None:
        return None
    sidecar = Path(path).with_suffix(".coords.csv")
    lines = ["k,x,y,xbar,ybar"]
    for k, (x, y, xbar, ybar) in enumerate(trajectory.coords):
        lines.append(f"{k},{x!r},{y!r},{xbar!r},{ybar!r}")
    sidecar.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return sidecar


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trajectory: Trajectory
    csv_path: Path
    coords_path: Optional[Path]
    summary: str
    exit_code: int


def _summarize(cfg: ExperimentConfig, trajectory: Trajectory) -> str:
    lines = [
        f"run: {cfg.problem} {cfg.algorithm} {cfg.anchor_mode}"
        + (" proximal" if cfg.proximal else ""),
        f"  iterations: {len(trajectory.records) - 1}"
        + (" (complete)" if trajectory.completed else f" (ABORTED: {trajectory.error})"),
    ]
    if trajectory.records:
        lines.append(f"  final grad_norm_sq: {trajectory.records[-1].grad_norm_sq:.6e}")
    k_hi = trajectory.records[-1].k if trajectory.records else 0
    k_lo = max(100, cfg.iters // 20)
    if k_lo < k_hi:
        try:
            rate = diagnostics.rate_slope(trajectory, k_lo, k_hi)
            lines.append(
                f"  rate slope on [{k_lo}, {k_hi}]: {rate.slope:.3f} (r^2={rate.r_squared:.4f})"
            )
        except ExactConvergence:
            lines.append(f"  rate slope on [{k_lo}, {k_hi}]: converged exactly")
    else:
        lines.append("  rate slope: window empty (run too short)")
    if trajectory.records and trajectory.records[0].lyapunov is not None:
        report = diagnostics.check_lyapunov_monotone(trajectory)
        if not report.applicable:
            lines.append("  lyapunov: check not applicable (naive negative anchor)")
        elif report.ok:
            lines.append(f"  lyapunov: ok (max increase {report.max_increase:.3e})")
        else:
            lines.append(
                f"  lyapunov: VIOLATED at k={report.first_violation}"
                f" (max increase {report.max_increase:.3e})"
            )
    else:
        lines.append("  lyapunov: n/a (saddle point unknown)")
    if trajectory.hypothesis_note:
        lines.append(f"  hypothesis warning: {trajectory.hypothesis_note}")
    if trajectory.max_resolvent_residual is not None:
        lines.append(f"  max resolvent residual: {trajectory.max_resolvent_residual:.3e}")
    if trajectory.max_feasibility_violation is not None:
        lines.append(
            f"  max feasibility violation: {trajectory.max_feasibility_violation:.3e}"
        )
    return "\n".join(lines)


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> ExperimentResult:
    """Run one experiment, write its CSV (plus 2-D sidecar), build a summary."""
    problem = build_problem(cfg)
    trajectory = run(problem, to_run_config(cfg))
    csv_path = Path(cfg.output_path)
    if output_dir is not None and not csv_path.is_absolute():
        csv_path = Path(output_dir) / csv_path
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(csv_path, trajectory.records, error=trajectory.error)
    coords_path = _write_coords_sidecar(csv_path, trajectory)
    summary = _summarize(cfg, trajectory)
    return ExperimentResult(
        config=cfg,
        trajectory=trajectory,
        csv_path=csv_path,
        coords_path=coords_path,
        summary=summary,
        exit_code=0 if trajectory.completed else 1,
    )
