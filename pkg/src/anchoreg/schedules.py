"""Scalar sequences that drive the anchored extragradient iterations.

Two families are covered.  The varying-step family uses
beta_k = 1/(k+2), B_k = k+1, A_k = alpha_k (k+1)(k+2)/2 together with the
step-size recurrence

    alpha_{k+1} = alpha_k * (1 - alpha_k^2 R^2 / ((k+1)(k+3)(1 - alpha_k^2 R^2)))

while the fast-extragradient family holds alpha_k = 1/R with
beta_k = 1/(k+1), B_k = k and A_k = (k^2/2)(1/R + 2 rho) - k rho.

The anchor weights come from

    c_{k+1} = c_k / (1 + delta_k)
    gamma_{k+1} = B_{k+1} / (c_{k+1} (1 + 1/delta_k))

with delta_k summable in the sense sum log(1 + delta_k) < infinity.  The
default delta_k = exp(delta_scale/(k+1)^2) - 1 makes that log-sum equal to
delta_scale * pi^2/6 exactly, so c_inf = c0 * exp(-delta_scale * pi^2/6).
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

__all__ = [
    "PI2_OVER_6",
    "ANCHOR_MODES",
    "eagv_alpha_next",
    "alpha_limit",
    "eagv_schedule_at",
    "feg_schedule_at",
    "delta_default",
    "delta_literal",
    "e_default",
    "c_limit",
    "anchor_schedule_next",
    "negative_gamma_cap",
    "AnchorSchedule",
    "EagvSchedule",
    "FegSchedule",
]

PI2_OVER_6 = math.pi * math.pi / 6.0

ANCHOR_MODES = ("fixed", "moving_pos", "moving_neg_naive", "moving_neg_strict")


def eagv_alpha_next(alpha_k: float, k: int, R: float) -> float:
    """Advance the varying step size by one index."""
    x = alpha_k * R
    if not 0.0 < x < 1.0:
        raise ValueError(f"alpha_k * R = {x!r} must lie in (0, 1)")
    q = x * x / (1.0 - x * x)
    return alpha_k * (1.0 - q / ((k + 1.0) * (k + 3.0)))


@functools.lru_cache(maxsize=None)
def alpha_limit(alpha0: float, R: float, tol: float = 1e-14, max_iter: int = 30_000_000) -> float:
    """Numerical limit of the step-size recurrence.

    Iterates until consecutive values differ by less than ``tol``; there is
    no known closed form.  The crossing happens around k ~ 3e6 for the
    default tolerance, so results are cached per (alpha0, R).
    """
    alpha = alpha0
    for k in range(max_iter):
        nxt = eagv_alpha_next(alpha, k, R)
        if abs(nxt - alpha) < tol:
            return nxt
        alpha = nxt
    raise RuntimeError("step-size recurrence did not settle within the iteration budget")


def eagv_schedule_at(k: int, alpha_k: float) -> tuple[float, float, float]:
    """Return (beta_k, B_k, A_k) for the varying-step family."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    beta = 1.0 / (k + 2.0)
    B = k + 1.0
    A = alpha_k * (k + 1.0) * (k + 2.0) / 2.0
    return beta, B, A


def feg_schedule_at(k: int, R: float, rho: float) -> tuple[float, float, float, float]:
    """Return (alpha_k, beta_k, B_k, A_k) for the fast-extragradient family."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if R <= 0:
        raise ValueError("R must be positive")
    if not rho > -1.0 / (2.0 * R):
        raise ValueError("rho must exceed -1/(2R)")
    alpha = 1.0 / R
    beta = 1.0 / (k + 1.0)
    B = float(k)
    A = (k * k / 2.0) * (alpha + 2.0 * rho) - k * rho
    return alpha, beta, B, A


def delta_default(k: int, delta_scale: float) -> float:
    """Summable default delta_k = exp(delta_scale/(k+1)^2) - 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if delta_scale <= 0:
        raise ValueError("delta_scale must be positive")
    return math.expm1(delta_scale / (k + 1.0) ** 2)


def delta_literal(k: int) -> float:
    """Archaeology variant delta_k = exp((k+1)^2) - 1; its log-sum diverges.

    The +1 shift keeps the zero-based indexing aligned with the default
    family; the divergent log-sum makes moving-anchor runs blow up within a
    handful of steps, which is the honest behavior of this choice.
    """
    try:
        return math.expm1((k + 1.0) ** 2)
    except OverflowError:
        return math.inf


def e_default(k: int, e_scale: float = 1.0) -> float:
    """Summable cap budget e_k = e_scale/(k+1)^2 with total e_scale * pi^2/6."""
    return e_scale / (k + 1.0) ** 2


def c_limit(c0: float, delta_scale: float, literal: bool = False) -> float:
    """Limit of the c sequence under the default (or literal) delta family."""
    if literal:
        return 0.0
    return c0 * math.exp(-delta_scale * PI2_OVER_6)


def anchor_schedule_next(c_k: float, delta_k: float, B_next: float) -> tuple[float, float]:
    """One anchor-schedule transition: returns (c_{k+1}, gamma_{k+1}).

    Both relations are applied with equality.
    """
    if not c_k > 0:
        raise ValueError("c_k must be positive")
    if not delta_k > 0:
        raise ValueError("delta_k must be positive")
    if B_next < 0:
        raise ValueError("B_next must be nonnegative")
    c_next = c_k / (1.0 + delta_k)
    if c_next == 0.0 or not math.isfinite(c_next):
        # Divergent delta families drive c to zero and the weight to infinity.
        return c_next, math.inf if B_next > 0 else 0.0
    gamma_next = B_next / (c_next * (1.0 + 1.0 / delta_k))
    return c_next, gamma_next


def negative_gamma_cap(
    gamma_raw: float, e_next: float, B_next: float, grad_norm_sq: float
) -> float:
    """Cap the anchor weight by e_{k+1} / (2 B_{k+1} ||G(z^{k+1})||^2)."""
    if not e_next > 0:
        raise ValueError("e_next must be positive")
    if not B_next > 0:
        raise ValueError("B_next must be positive")
    if grad_norm_sq < 0:
        raise ValueError("grad_norm_sq must be nonnegative")
    if grad_norm_sq == 0.0:
        return gamma_raw
    return min(gamma_raw, e_next / (2.0 * B_next * grad_norm_sq))


@dataclass
class AnchorSchedule:
    """State of the anchor weight sequence: c_k, delta_k, gamma_k, e_k.

    ``gamma`` holds the signed weight that produced the current anchor
    (zero before the first step and always zero in fixed mode).
    """

    mode: str = "moving_pos"
    c0: float = PI2_OVER_6
    delta_scale: float = 1.0
    e_scale: float = 1.0
    literal_delta: bool = False
    k: int = 0
    c: float = None  # type: ignore[assignment]
    gamma: float = 0.0

    def __post_init__(self):
        if self.mode not in ANCHOR_MODES:
            raise ValueError(f"unknown anchor mode {self.mode!r}")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.e_scale <= 0:
            raise ValueError("e_scale must be positive")
        if self.c is None:
            self.c = self.c0

    @property
    def c_inf(self) -> float:
        return c_limit(self.c0, self.delta_scale, self.literal_delta)

    def delta_at(self, k: int) -> float:
        return delta_literal(k) if self.literal_delta else delta_default(k, self.delta_scale)

    def e_at(self, k: int) -> float:
        return e_default(k, self.e_scale)

    @property
    def delta(self) -> float:
        return self.delta_at(self.k)

    @property
    def e(self) -> float:
        return self.e_at(self.k)

    def clone(self) -> "AnchorSchedule":
        return AnchorSchedule(
            mode=self.mode,
            c0=self.c0,
            delta_scale=self.delta_scale,
            e_scale=self.e_scale,
            literal_delta=self.literal_delta,
            k=self.k,
            c=self.c,
            gamma=self.gamma,
        )

    def advance(self, B_next: float, grad_norm_sq_next: float) -> float:
        """Advance c by one index and return the signed anchor weight."""
        c_next, gamma_raw = anchor_schedule_next(self.c, self.delta_at(self.k), B_next)
        if self.mode == "fixed":
            gamma = 0.0
        elif self.mode == "moving_pos":
            gamma = gamma_raw
        elif self.mode == "moving_neg_naive":
            gamma = -gamma_raw
        else:  # moving_neg_strict
            gamma = -negative_gamma_cap(
                gamma_raw, self.e_at(self.k + 1), B_next, grad_norm_sq_next
            )
        self.c = c_next
        self.k += 1
        self.gamma = gamma
        return gamma


class EagvSchedule:
    """Varying step size plus anchor weights.

    Valid for alpha0 * R in (0, 1); the convergence theorem additionally
    wants alpha0 < 3/(4R), outside of which a warning is emitted because the
    step sizes may turn negative along the way.
    """

    def __init__(
        self,
        R: float,
        alpha0: float | None = None,
        anchor: AnchorSchedule | None = None,
    ):
        if R <= 0:
            raise ValueError("R must be positive")
        if alpha0 is None:
            alpha0 = 0.5 / R
        if not 0.0 < alpha0 * R < 1.0:
            raise ValueError(f"alpha0 * R = {alpha0 * R!r} must lie in (0, 1)")
        if alpha0 * R >= 0.75:
            warnings.warn(
                "alpha0 >= 3/(4R) is outside the proven convergence range", stacklevel=2
            )
        self.R = R
        self.alpha0 = alpha0
        self.alpha = alpha0
        self.k = 0
        self.anchor = anchor if anchor is not None else AnchorSchedule()

    @property
    def beta(self) -> float:
        return 1.0 / (self.k + 2.0)

    @property
    def B(self) -> float:
        return self.k + 1.0

    @property
    def A(self) -> float:
        return self.alpha * (self.k + 1.0) * (self.k + 2.0) / 2.0

    @property
    def alpha_inf(self) -> float:
        return alpha_limit(self.alpha0, self.R)

    def clone(self) -> "EagvSchedule":
        dup = object.__new__(EagvSchedule)
        dup.R, dup.alpha0, dup.alpha, dup.k = self.R, self.alpha0, self.alpha, self.k
        dup.anchor = self.anchor.clone()
        return dup

    def advance(self, grad_norm_sq_next: float) -> float:
        """Move to index k+1; returns the signed anchor weight gamma_{k+1}."""
        gamma = self.anchor.advance(self.k + 2.0, grad_norm_sq_next)
        self.alpha = eagv_alpha_next(self.alpha, self.k, self.R)
        self.k += 1
        return gamma


class FegSchedule:
    """Constant step size 1/R plus anchor weights for comonotone problems."""

    def __init__(self, R: float, rho: float, anchor: AnchorSchedule | None = None):
        feg_schedule_at(0, R, rho)  # validates R and rho
        self.R = R
        self.rho = rho
        self.k = 0
        self.anchor = anchor if anchor is not None else AnchorSchedule()

    @property
    def alpha(self) -> float:
        return 1.0 / self.R

    @property
    def beta(self) -> float:
        return 1.0 / (self.k + 1.0)

    @property
    def B(self) -> float:
        return float(self.k)

    @property
    def A(self) -> float:
        return feg_schedule_at(self.k, self.R, self.rho)[3]

    def clone(self) -> "FegSchedule":
        dup = object.__new__(FegSchedule)
        dup.R, dup.rho, dup.k = self.R, self.rho, self.k
        dup.anchor = self.anchor.clone()
        return dup

    def advance(self, grad_norm_sq_next: float) -> float:
        gamma = self.anchor.advance(self.k + 1.0, grad_norm_sq_next)
        self.k += 1
        return gamma
