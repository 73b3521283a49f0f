"""Saddle-point problems and operator-property checks.

A joint point z stacks the primal block x (length n) in front of the dual
block y (length m).  The saddle operator of a payoff L(x, y) is
G(z) = (grad_x L, -grad_y L); its zeros are exactly the saddle points.
Every problem carries a Lipschitz constant R for G and a comonotonicity
level rho with ``<G(z1)-G(z2), z1-z2> >= rho * ||G(z1)-G(z2)||^2``:
rho > 0 is cocoercive, rho = 0 monotone, rho < 0 negative comonotone.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

__all__ = [
    "JointPoint",
    "GameInstance",
    "SaddleProblem",
    "ComonotonicityReport",
    "eval_operator",
    "finite_difference_operator",
    "estimate_lipschitz",
    "check_comonotonicity",
    "project_simplex",
    "make_almost_bilinear",
    "make_comonotone_quadratic",
    "make_nonlinear_game",
    "write_matrix",
    "read_matrix",
]


def _rng(seed: int) -> np.random.Generator:
    # Philox is counter-based, so instances are reproducible across platforms.
    return np.random.Generator(np.random.Philox(key=seed))


def _uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws in the open interval (0, 1), safe to feed to ndtri."""
    return (rng.integers(0, 1 << 53, size=size).astype(np.float64) + 0.5) * 2.0**-53


def _standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    # Inverse-CDF transform of uniforms keeps the stream platform independent.
    return ndtri(_uniform_open(rng, size))


@dataclass(frozen=True)
class JointPoint:
    """A point of the joint primal-dual space, primal block first."""

    coords: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim != 1 or coords.size != self.n + self.m:
            raise ValueError(
                f"joint point needs {self.n + self.m} coordinates, got shape {coords.shape}"
            )
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @staticmethod
    def from_blocks(x, y) -> "JointPoint":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return JointPoint(np.concatenate([x, y]), n=x.size, m=y.size)

    @property
    def x(self) -> np.ndarray:
        return self.coords[: self.n]

    @property
    def y(self) -> np.ndarray:
        return self.coords[self.n :]


@dataclass(frozen=True)
class GameInstance:
    """Payoff data of the two-player game min_x max_y 0.5<Qx,x> + <Kx,y>."""

    Q: np.ndarray  # n x n, equals A.T @ A, positive semidefinite
    K: np.ndarray  # m x n, entries in [-1, 1]
    A: np.ndarray  # k x n standard-normal generator
    seed: int


@dataclass(frozen=True)
class SaddleProblem:
    """Descriptor of a smooth saddle-point problem via its operator G.

    ``operator`` maps raw joint coordinates to G(z) coordinates.  When
    ``matrix`` is set the problem is affine-explicit with
    G(z) = matrix @ z + offset, and operator evaluation goes through that
    exact form.  ``value`` optionally evaluates the scalar payoff L(z),
    which enables the finite-difference oracle.
    """

    n: int
    m: int
    operator: Callable[[np.ndarray], np.ndarray]
    smoothness: float  # R, Lipschitz constant of G
    comonotonicity: float  # rho
    value: Optional[Callable[[np.ndarray], float]] = None
    matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    saddle_point: Optional[JointPoint] = None
    constraint: str = "none"  # "none" or "simplex"
    game: Optional[GameInstance] = None

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m == 0:
            raise ValueError("problem dimensions must be positive")
        if self.constraint not in ("none", "simplex"):
            raise ValueError(f"unknown constraint kind {self.constraint!r}")
        if self.smoothness < 0:
            raise ValueError("smoothness R must be nonnegative")
        if self.smoothness > 0 and not self.comonotonicity > -1.0 / (2.0 * self.smoothness):
            raise ValueError("rho must exceed -1/(2R)")
        if self.matrix is not None:
            mat = np.asarray(self.matrix, dtype=float)
            if mat.shape != (self.dim, self.dim):
                raise ValueError("affine matrix shape must match the joint dimension")
            off = np.zeros(self.dim) if self.offset is None else np.asarray(self.offset, float)
            if off.shape != (self.dim,):
                raise ValueError("affine offset shape must match the joint dimension")
            object.__setattr__(self, "matrix", mat)
            object.__setattr__(self, "offset", off)
            if self.saddle_point is not None:
                resid = np.linalg.norm(mat @ self.saddle_point.coords + off)
                if resid > 1e-10 * max(1.0, float(np.linalg.norm(off))):
                    raise ValueError(
                        f"declared saddle point has operator residual {resid:.3e}"
                    )
        else:
            # User-supplied constants on black-box operators are sampled and
            # only warned about, never rejected.
            _warn_on_sampled_violations(self)

    @property
    def dim(self) -> int:
        return self.n + self.m

    @property
    def operator_kind(self) -> str:
        return "affine-explicit" if self.matrix is not None else "black-box"


def _warn_on_sampled_violations(problem: SaddleProblem, num_samples: int = 100) -> None:
    z1, z2 = _sample_pairs(problem, num_samples, seed=0, radius=10.0)
    g1 = _eval_many(problem, z1)
    g2 = _eval_many(problem, z2)
    dg, dz = g1 - g2, z1 - z2
    dg_sq = np.einsum("ij,ij->j", dg, dg)
    inner = np.einsum("ij,ij->j", dg, dz)
    dz_norm = np.sqrt(np.einsum("ij,ij->j", dz, dz))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.sqrt(dg_sq) / dz_norm
    ratios = ratios[np.isfinite(ratios)]
    if ratios.size and float(ratios.max()) > problem.smoothness * (1 + 1e-8):
        warnings.warn(
            f"sampled Lipschitz ratio {float(ratios.max()):.6g} exceeds declared "
            f"R={problem.smoothness:.6g}",
            stacklevel=3,
        )
    margins = inner - problem.comonotonicity * dg_sq
    if margins.size and float(margins.min()) < -1e-12:
        warnings.warn(
            f"sampled comonotonicity margin {float(margins.min()):.3e} violates "
            f"declared rho={problem.comonotonicity:.6g}",
            stacklevel=3,
        )


def _eval_many(problem: SaddleProblem, Z: np.ndarray) -> np.ndarray:
    """Evaluate G column-wise on a (dim, N) batch."""
    if problem.matrix is not None:
        return problem.matrix @ Z + problem.offset[:, None]
    return np.stack([problem.operator(Z[:, j]) for j in range(Z.shape[1])], axis=1)


def _sample_ball(problem: SaddleProblem, count: int, rng, radius: float) -> np.ndarray:
    center = (
        problem.saddle_point.coords if problem.saddle_point is not None else np.zeros(problem.dim)
    )
    directions = _standard_normal(rng, (problem.dim, count))
    directions /= np.linalg.norm(directions, axis=0, keepdims=True)
    radii = radius * _uniform_open(rng, count) ** (1.0 / problem.dim)
    return center[:, None] + directions * radii


def _sample_pairs(problem, count, seed, radius):
    rng = _rng(seed)
    return _sample_ball(problem, count, rng, radius), _sample_ball(problem, count, rng, radius)


def eval_operator(problem: SaddleProblem, z: JointPoint) -> JointPoint:
    """Evaluate the saddle operator G at z."""
    if (z.n, z.m) != (problem.n, problem.m):
        raise ValueError(
            f"point blocks ({z.n}, {z.m}) do not match problem blocks ({problem.n}, {problem.m})"
        )
    return JointPoint(problem.operator(z.coords), n=problem.n, m=problem.m)


def finite_difference_operator(problem: SaddleProblem, z: JointPoint, h: float) -> JointPoint:
    """Central-difference approximation of (grad_x L, -grad_y L).

    Componentwise error is O(h^2); exact up to rounding for quadratic L.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if problem.value is None:
        raise ValueError("problem exposes no scalar payoff; cannot difference a black-box operator")
    if (z.n, z.m) != (problem.n, problem.m):
        raise ValueError("point dimensions do not match the problem")
    base = z.coords
    out = np.empty(problem.dim)
    for i in range(problem.dim):
        step = np.zeros(problem.dim)
        step[i] = h
        diff = (problem.value(base + step) - problem.value(base - step)) / (2.0 * h)
        out[i] = diff if i < problem.n else -diff
    return JointPoint(out, n=problem.n, m=problem.m)


def _power_iteration_norm(mat: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest singular value of mat by power iteration on mat.T @ mat."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        raise ValueError("cannot estimate the norm of an empty matrix")
    v = _standard_normal(_rng(0), mat.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:  # pragma: no cover - measure-zero draw
        v = np.ones(mat.shape[1])
        nv = np.linalg.norm(v)
    v /= nv
    sigma = 0.0
    for _ in range(max_iter):
        w = mat.T @ (mat @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        sigma_new = float(np.sqrt(norm_w))  # ||M.T M v|| -> lambda_max, sigma = sqrt
        v = w / norm_w
        if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
            return sigma_new
        sigma = sigma_new
    return sigma


def estimate_lipschitz(
    problem: SaddleProblem,
    num_samples: int = 1000,
    seed: int = 0,
    radius: float = 10.0,
) -> float:
    """Lipschitz constant of G.

    Affine-explicit problems get the spectral norm of the operator matrix by
    power iteration (relative tolerance 1e-10).  Black-box problems get the
    largest sampled difference quotient, which is only a lower estimate and
    is flagged with a warning.
    """
    if problem.dim == 0:
        raise ValueError("zero-dimensional problem")
    if problem.matrix is not None:
        return _power_iteration_norm(problem.matrix)
    z1, z2 = _sample_pairs(problem, num_samples, seed, radius)
    dg = _eval_many(problem, z1) - _eval_many(problem, z2)
    dz = z1 - z2
    norms_dz = np.linalg.norm(dz, axis=0)
    keep = norms_dz > 0
    ratios = np.linalg.norm(dg[:, keep], axis=0) / norms_dz[keep]
    warnings.warn("sampled Lipschitz constant is a lower estimate", stacklevel=2)
    return float(ratios.max(initial=0.0))


@dataclass(frozen=True)
class ComonotonicityReport:
    holds: bool
    worst_margin: float
    witness: tuple[JointPoint, JointPoint]


def check_comonotonicity(
    problem: SaddleProblem,
    rho: float,
    num_samples: int = 10_000,
    seed: int = 0,
    radius: float = 10.0,
) -> ComonotonicityReport:
    """Sample pairs around the saddle and test the comonotonicity inequality.

    The margin of a pair is <G(z1)-G(z2), z1-z2> - rho * ||G(z1)-G(z2)||^2;
    the property holds when the worst sampled margin stays above -1e-12.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be at least 1")
    z1, z2 = _sample_pairs(problem, num_samples, seed, radius)
    dg = _eval_many(problem, z1) - _eval_many(problem, z2)
    dz = z1 - z2
    margins = np.einsum("ij,ij->j", dg, dz) - rho * np.einsum("ij,ij->j", dg, dg)
    worst = int(np.argmin(margins))
    witness = (
        JointPoint(z1[:, worst], n=problem.n, m=problem.m),
        JointPoint(z2[:, worst], n=problem.n, m=problem.m),
    )
    worst_margin = float(margins[worst])
    return ComonotonicityReport(worst_margin >= -1e-12, worst_margin, witness)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex, exact sort-based method."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("need a nonempty vector")
    u = np.sort(v)[::-1]
    cumsum = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    mask = u + (1.0 - cumsum) / j > 0
    rho = int(np.nonzero(mask)[0][-1])
    lam = (1.0 - cumsum[rho]) / (rho + 1.0)
    return np.maximum(v + lam, 0.0)


def _affine_problem(mat, off, n, m, value, saddle, rho, constraint="none", game=None):
    mat = np.asarray(mat, dtype=float)
    off = np.zeros(n + m) if off is None else np.asarray(off, dtype=float)

    def operator(z, _mat=mat, _off=off):
        return _mat @ z + _off

    return SaddleProblem(
        n=n,
        m=m,
        operator=operator,
        smoothness=_power_iteration_norm(mat),
        comonotonicity=rho,
        value=value,
        matrix=mat,
        offset=off,
        saddle_point=saddle,
        constraint=constraint,
        game=game,
    )


def make_almost_bilinear(eps: float) -> SaddleProblem:
    """Scalar payoff eps*x^2/2 + x*y - eps*y^2/2 with saddle at the origin."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    mat = np.array([[eps, 1.0], [-1.0, eps]])

    def value(z, _eps=eps):
        x, y = z
        return _eps * x * x / 2.0 + x * y - _eps * y * y / 2.0

    return _affine_problem(
        mat, None, 1, 1, value, JointPoint(np.zeros(2), 1, 1), rho=0.0
    )


def make_comonotone_quadratic(R: float, rho: float) -> SaddleProblem:
    """Scalar payoff (rho R^2/2)x^2 + R sqrt(1-rho^2 R^2) xy - (rho R^2/2)y^2.

    The operator is exactly R-Lipschitz and exactly rho-comonotone; with
    rho < 0 it is nonmonotone while staying inside the admissible band.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if abs(rho) * R > 1:
        raise ValueError("|rho| * R must not exceed 1")
    if not rho > -1.0 / (2.0 * R):
        raise ValueError("rho must exceed -1/(2R)")
    a = rho * R * R
    b = R * np.sqrt(1.0 - rho * rho * R * R)
    mat = np.array([[a, b], [-b, a]])

    def value(z, _a=a, _b=b):
        x, y = z
        return _a * x * x / 2.0 + _b * x * y - _a * y * y / 2.0

    return _affine_problem(
        mat, None, 1, 1, value, JointPoint(np.zeros(2), 1, 1), rho=rho
    )


def make_nonlinear_game(m: int, k: int, n: int, seed: int) -> SaddleProblem:
    """Two-player game on a product of simplices with quadratic payoff.

    A is k x n standard normal, K is m x n uniform on [-1, 1], Q = A.T A, and
    the payoff is 0.5<Qx,x> + <Kx,y>.  Draws come from a seeded counter-based
    generator: A first, then K, so instances are bit-reproducible.
    """
    if min(m, k, n) < 1:
        raise ValueError("game dimensions must be at least 1")
    rng = _rng(seed)
    A = _standard_normal(rng, (k, n))
    K = 2.0 * _uniform_open(rng, (m, n)) - 1.0
    Q = A.T @ A
    mat = np.zeros((n + m, n + m))
    mat[:n, :n] = Q
    mat[:n, n:] = K.T
    mat[n:, :n] = -K

    def value(z, _Q=Q, _K=K, _n=n):
        x, y = z[:_n], z[_n:]
        return 0.5 * float(x @ (_Q @ x)) + float(y @ (_K @ x))

    return _affine_problem(
        mat,
        None,
        n,
        m,
        value,
        None,
        rho=0.0,
        constraint="simplex",
        game=GameInstance(Q=Q, K=K, A=A, seed=seed),
    )


_MATRIX_HEADER = struct.Struct("<QQ")


def write_matrix(path, mat: np.ndarray) -> None:
    """Write a matrix as (rows, cols) header plus row-major little-endian doubles."""
    mat = np.ascontiguousarray(mat, dtype="<f8")
    if mat.ndim != 2:
        raise ValueError("only 2-D matrices are serializable")
    with open(path, "wb") as fh:
        fh.write(_MATRIX_HEADER.pack(mat.shape[0], mat.shape[1]))
        fh.write(mat.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        rows, cols = _MATRIX_HEADER.unpack(fh.read(_MATRIX_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"matrix file holds {data.size} doubles, expected {rows * cols}")
    return data.reshape(rows, cols).copy()
