"""Seeded generators and loaders for the benchmark problem families.

Four families share the composite-problem interface:

* vector quadratic program over the probability simplex, with a concave
  and a convex quadratic part scaled to hit target curvature bounds;
* its matrix version over the spectraplex, built from sparse linear
  operators and calibrated by power iteration on the vectorized form;
* low-rank matrix completion with a log-sum penalty on singular values,
  a weighted nuclear norm, and a Frobenius-ball constraint;
* nonnegative matrix factorization (unbounded domain; solvers still run
  but the stationarity guarantees degrade).

Randomness goes through PCG64 with one spawned stream per array, so every
generator is a pure function of (seed, parameters) and instances are
bitwise reproducible across platforms.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .oracles import (
    ConvexPartOracle,
    CurvatureInfo,
    OmegaProjector,
    ProblemInstance,
    SmoothOracle,
    identity_projector,
)
from .point import Point
from .prox import project_nonneg, project_psd, project_simplex, project_spectraplex, prox_nuclear_ball

# Stream channels, one per generated array.
_CH_DIAG, _CH_B, _CH_A, _CH_RHS, _CH_POWER, _CH_SUBSET, _CH_INIT, _CH_NMF, _CH_RATINGS = range(9)

_FEAS_TOL = 1e-8


class CalibrationError(RuntimeError):
    """Curvature calibration failed (degenerate spectra or no convergence)."""


def _stream(seed: int, channel: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(channel,))))


# ---------------------------------------------------------------------------
# vector quadratic program on the simplex


def calibrate_alphas(
    gram_pos: np.ndarray,
    gram_neg: np.ndarray,
    lipschitz_target: float,
    weak_convexity_target: float,
    rel_tol: float = 0.01,
    max_rounds: int = 100,
) -> Tuple[float, float]:
    """Scale the concave/convex quadratic parts to hit curvature targets.

    Finds (alpha_neg, alpha_pos) such that alpha_pos * gram_pos -
    alpha_neg * gram_neg has largest eigenvalue within rel_tol of
    lipschitz_target and smallest within rel_tol of -weak_convexity_target.
    Starts from the decoupled spectral normalization and then rescales each
    coefficient by the ratio of its target to the achieved extreme.
    """
    if not (lipschitz_target >= weak_convexity_target > 0):
        raise ValueError("need lipschitz_target >= weak_convexity_target > 0")
    top_pos = float(np.linalg.eigvalsh(gram_pos)[-1])
    top_neg = float(np.linalg.eigvalsh(gram_neg)[-1])
    if top_pos <= 0 or top_neg <= 0:
        raise CalibrationError("both quadratic parts must be nonzero PSD")

    alpha_neg = weak_convexity_target / top_neg
    alpha_pos = lipschitz_target / top_pos
    for _ in range(max_rounds):
        w = np.linalg.eigvalsh(alpha_pos * gram_pos - alpha_neg * gram_neg)
        lo, hi = float(w[0]), float(w[-1])
        if hi <= 0 or lo >= 0:
            raise CalibrationError(f"extreme eigenvalues lost their signs: [{lo:g}, {hi:g}]")
        if (
            abs(hi - lipschitz_target) <= rel_tol * lipschitz_target
            and abs(lo + weak_convexity_target) <= rel_tol * weak_convexity_target
        ):
            return alpha_neg, alpha_pos
        alpha_neg *= weak_convexity_target / (-lo)
        alpha_pos *= lipschitz_target / hi
    raise CalibrationError(f"calibration did not converge in {max_rounds} rounds")


def _simplex_oracle() -> ConvexPartOracle:
    def value(p: Point) -> float:
        z = p.blocks[0]
        if abs(z.sum() - 1.0) <= _FEAS_TOL and z.min() >= -_FEAS_TOL:
            return 0.0
        return math.inf

    def resolvent(center: Point, coeff: float) -> Point:
        return Point.vector(project_simplex(center.blocks[0]))

    return ConvexPartOracle(value=value, resolvent=resolvent)


def gen_qp_vector(
    seed: int,
    l: int,
    n: int,
    lipschitz_target: float,
    weak_convexity_target: float,
    convex: bool = False,
) -> ProblemInstance:
    """Nonconvex quadratic over the simplex with calibrated curvature.

    The concave part is ||D B z||^2 with an integer diagonal D in
    {1..1000} and uniform B; the convex part is ||A z - b||^2 with uniform
    A, b.  With ``convex=True`` the concave part is dropped and only the
    largest eigenvalue is calibrated.  Curvature metadata stores the
    eigenvalue extremes of the assembled Hessian, and the initial point is
    the simplex centroid.
    """
    if l < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    diag = _stream(seed, _CH_DIAG).integers(1, 1001, size=n).astype(float)
    B = _stream(seed, _CH_B).uniform(size=(n, n))
    A = _stream(seed, _CH_A).uniform(size=(l, n))
    b = _stream(seed, _CH_RHS).uniform(size=l)

    gram_pos = A.T @ A
    if convex:
        if lipschitz_target <= 0:
            raise ValueError("lipschitz_target must be positive")
        alpha_neg = 0.0
        alpha_pos = lipschitz_target / float(np.linalg.eigvalsh(gram_pos)[-1])
        hess = alpha_pos * gram_pos
    else:
        scaled = diag[:, None] * B
        gram_neg = scaled.T @ scaled
        alpha_neg, alpha_pos = calibrate_alphas(
            gram_pos, gram_neg, lipschitz_target, weak_convexity_target
        )
        hess = alpha_pos * gram_pos - alpha_neg * gram_neg
    hess = 0.5 * (hess + hess.T)
    w = np.linalg.eigvalsh(hess)
    lo, hi = float(w[0]), float(w[-1])

    linear = alpha_pos * (A.T @ b)
    offset = 0.5 * alpha_pos * float(b @ b)

    def value(p: Point) -> float:
        z = p.blocks[0]
        return 0.5 * float(z @ (hess @ z)) - float(linear @ z) + offset

    def grad(p: Point) -> Point:
        z = p.blocks[0]
        return Point.vector(hess @ z - linear)

    tag = ",convex" if convex else ""
    return ProblemInstance(
        smooth=SmoothOracle(value=value, grad=grad),
        convex_part=_simplex_oracle(),
        omega=identity_projector(),
        curvature=CurvatureInfo(
            lipschitz=max(hi, -lo),
            weak_convexity=max(-lo, 0.0),
            domain_diameter=math.sqrt(2.0),
        ),
        initial_point=Point.vector(np.full(n, 1.0 / n)),
        label=f"qp_vector[seed={seed},l={l},n={n},lip={lipschitz_target:g},"
        f"weak={weak_convexity_target:g}{tag}]",
    )


# ---------------------------------------------------------------------------
# matrix quadratic program on the spectraplex


def _power_iteration(matvec, dim: int, rng: np.random.Generator, tol: float, max_iter: int = 50_000) -> float:
    """Largest eigenvalue of a PSD operator by power iteration.

    Stops when the Rayleigh quotient changes by at most ``tol`` relative;
    raises on non-convergence.
    """
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    prev = math.inf
    for _ in range(max_iter):
        w = matvec(v)
        ray = float(v @ w)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(ray - prev) <= tol * max(abs(ray), 1e-30):
            return ray
        prev = ray
    raise CalibrationError("power iteration did not converge")


def _sparse_operator(rng: np.random.Generator, rows: int, dim: int, density: float) -> sp.csr_matrix:
    nnz_per_row = max(1, int(round(density * dim)))
    indptr = np.arange(rows + 1) * nnz_per_row
    indices = np.empty(rows * nnz_per_row, dtype=np.int64)
    for i in range(rows):
        cols = np.sort(rng.choice(dim, size=nnz_per_row, replace=False))
        indices[i * nnz_per_row : (i + 1) * nnz_per_row] = cols
    data = rng.uniform(size=rows * nnz_per_row)
    return sp.csr_matrix((data, indices, indptr), shape=(rows, dim))


def _spectraplex_oracle() -> ConvexPartOracle:
    def value(p: Point) -> float:
        Z = p.blocks[0]
        scale = 1.0 + float(np.linalg.norm(Z))
        if np.linalg.norm(Z - Z.T) > _FEAS_TOL * scale:
            return math.inf
        w = np.linalg.eigvalsh(0.5 * (Z + Z.T))
        if w[0] < -_FEAS_TOL * scale or abs(np.trace(Z) - 1.0) > _FEAS_TOL * scale:
            return math.inf
        return 0.0

    def resolvent(center: Point, coeff: float) -> Point:
        return Point.matrix(project_spectraplex(center.blocks[0]))

    return ConvexPartOracle(value=value, resolvent=resolvent)


def gen_qp_matrix(
    seed: int,
    l: int,
    n: int,
    density: float,
    lipschitz_target: float,
    weak_convexity_target: float,
    power_tol: float = 1e-4,
) -> ProblemInstance:
    """Matrix quadratic over the spectraplex via sparse linear operators.

    The operators map a matrix Z to Frobenius inner products with sparse
    uniform matrices; gradients are assembled through the operator
    adjoints without materializing the quadratic form.  Calibration runs
    power iteration on the vectorized form with shift-and-invert-free
    bounds from the two PSD parts.
    """
    if not (0 < density <= 1):
        raise ValueError("density must lie in (0, 1]")
    if l < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    dim = n * n
    diag = _stream(seed, _CH_DIAG).integers(1, 1001, size=n).astype(float)
    op_pos = _sparse_operator(_stream(seed, _CH_A), l, dim, density)
    op_neg = sp.diags(diag) @ _sparse_operator(_stream(seed, _CH_B), n, dim, density)
    op_neg = op_neg.tocsr()
    b = _stream(seed, _CH_RHS).uniform(size=l)

    def quad_pos(z):
        return op_pos.T @ (op_pos @ z)

    def quad_neg(z):
        return op_neg.T @ (op_neg @ z)

    rng_power = _stream(seed, _CH_POWER)
    top_pos = _power_iteration(quad_pos, dim, rng_power, power_tol)
    top_neg = _power_iteration(quad_neg, dim, rng_power, power_tol)
    if top_pos <= 0 or top_neg <= 0:
        raise CalibrationError("degenerate sparse operators")

    alpha_neg = weak_convexity_target / top_neg
    alpha_pos = lipschitz_target / top_pos
    hi = lo = math.nan
    for _ in range(100):
        shift_neg = 1.05 * alpha_neg * top_neg  # H + shift_neg I is PSD
        shift_pos = 1.05 * alpha_pos * top_pos  # shift_pos I - H is PSD

        def hess(z):
            return alpha_pos * quad_pos(z) - alpha_neg * quad_neg(z)

        hi = _power_iteration(lambda z: hess(z) + shift_neg * z, dim, rng_power, power_tol) - shift_neg
        lo = shift_pos - _power_iteration(lambda z: shift_pos * z - hess(z), dim, rng_power, power_tol)
        if hi <= 0 or lo >= 0:
            raise CalibrationError(f"extreme eigenvalues lost their signs: [{lo:g}, {hi:g}]")
        if (
            abs(hi - lipschitz_target) <= 0.01 * lipschitz_target
            and abs(lo + weak_convexity_target) <= 0.01 * weak_convexity_target
        ):
            break
        alpha_neg *= weak_convexity_target / (-lo)
        alpha_pos *= lipschitz_target / hi
    else:
        raise CalibrationError("matrix calibration did not converge in 100 rounds")

    a_neg, a_pos = alpha_neg, alpha_pos

    def value(p: Point) -> float:
        z = p.blocks[0].reshape(-1)
        t_neg = op_neg @ z
        t_pos = op_pos @ z - b
        return -0.5 * a_neg * float(t_neg @ t_neg) + 0.5 * a_pos * float(t_pos @ t_pos)

    def grad(p: Point) -> Point:
        z = p.blocks[0].reshape(-1)
        g = a_pos * (op_pos.T @ (op_pos @ z - b)) - a_neg * (op_neg.T @ (op_neg @ z))
        return Point.matrix(g.reshape(n, n))

    return ProblemInstance(
        smooth=SmoothOracle(value=value, grad=grad),
        convex_part=_spectraplex_oracle(),
        omega=OmegaProjector(project=lambda p: Point.matrix(project_psd(p.blocks[0]))),
        curvature=CurvatureInfo(
            lipschitz=max(hi, -lo),
            weak_convexity=max(-lo, 0.0),
            domain_diameter=math.sqrt(2.0),
        ),
        initial_point=Point.matrix(np.eye(n) / n),
        label=f"qp_matrix[seed={seed},l={l},n={n},density={density:g},"
        f"lip={lipschitz_target:g},weak={weak_convexity_target:g}]",
    )


# ---------------------------------------------------------------------------
# matrix completion with a log-sum spectral penalty


def load_movielens(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Tuple[int, int]]:
    """Parse a ratings file: user <TAB> item <TAB> rating <TAB> timestamp.

    Ids are 1-indexed in the file and returned 0-indexed; ratings must be
    integers in 1..5.  Dimensions are inferred from the largest ids.
    Malformed lines raise with their line number.
    """
    rows, cols, vals = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(
                    f"line {lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            try:
                user, item, rating, _ = (int(x) for x in parts)
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer field") from None
            if user < 1 or item < 1:
                raise ValueError(f"line {lineno}: ids must be 1-indexed positive")
            if not 1 <= rating <= 5:
                raise ValueError(f"line {lineno}: rating {rating} outside 1..5")
            rows.append(user - 1)
            cols.append(item - 1)
            vals.append(float(rating))
    if not rows:
        raise ValueError("no ratings found: cannot infer matrix dimensions")
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    return rows, cols, vals, (int(rows.max()) + 1, int(cols.max()) + 1)


def select_submatrix(
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    dims: Tuple[int, int],
    sub_rows: int,
    sub_cols: int,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Tuple[int, int]]:
    """Deterministic random submatrix of a sparse ratings matrix."""
    if not (1 <= sub_rows <= dims[0] and 1 <= sub_cols <= dims[1]):
        raise ValueError("submatrix dimensions exceed the data")
    rng = _stream(seed, _CH_SUBSET)
    keep_r = np.sort(rng.choice(dims[0], size=sub_rows, replace=False))
    keep_c = np.sort(rng.choice(dims[1], size=sub_cols, replace=False))
    mask = np.isin(rows, keep_r) & np.isin(cols, keep_c)
    new_r = np.searchsorted(keep_r, rows[mask])
    new_c = np.searchsorted(keep_c, cols[mask])
    return new_r, new_c, vals[mask].copy(), (sub_rows, sub_cols)


def default_completion_radius(vals: np.ndarray, dims: Tuple[int, int]) -> float:
    """Frobenius norm of the matrix with observed entries and 5 elsewhere."""
    unseen = dims[0] * dims[1] - len(vals)
    return math.sqrt(float(vals @ vals) + 25.0 * unseen)


def build_matrix_completion(
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    dims: Tuple[int, int],
    mu: float,
    beta: float,
    tau: float,
    sub_rows: Optional[int] = None,
    sub_cols: Optional[int] = None,
    sub_seed: int = 0,
    init_seed: int = 0,
    radius: Optional[float] = None,
) -> ProblemInstance:
    """Matrix completion with a log-sum penalty on singular values.

    The smooth part is the squared misfit on observed entries plus the
    difference between the log-sum penalty and its linearization at zero,
    which keeps it differentiable everywhere; the convex part is a
    weighted nuclear norm restricted to a Frobenius ball.  The ball radius
    defaults to the norm of the matrix with unobserved entries set to 5.
    The initial point is a seeded standard Gaussian matrix.
    """
    if not (mu > 0 and beta > 0 and tau > 0):
        raise ValueError("mu, beta, tau must be positive")
    if sub_rows is not None or sub_cols is not None:
        if sub_rows is None or sub_cols is None:
            raise ValueError("give both sub_rows and sub_cols or neither")
        rows, cols, vals, dims = select_submatrix(
            rows, cols, vals, dims, sub_rows, sub_cols, sub_seed
        )
    n_rows, n_cols = dims
    if len(rows) == 0:
        raise ValueError("matrix completion needs at least one observed entry")
    if rows.max() >= n_rows or cols.max() >= n_cols:
        raise ValueError("observed indices exceed the declared dimensions")

    slope0 = beta / tau  # derivative of the penalty at zero
    if radius is None:
        radius = default_completion_radius(vals, dims)
    ball = float(radius)

    def value(p: Point) -> float:
        X = p.blocks[0]
        resid = X[rows, cols] - vals
        s = np.linalg.svd(X, compute_uv=False)
        penalty = mu * float(np.sum(beta * np.log1p(s / tau) - slope0 * s))
        return 0.5 * float(resid @ resid) + penalty

    def grad(p: Point) -> Point:
        X = p.blocks[0]
        resid = X[rows, cols] - vals
        G = np.zeros_like(X)
        np.add.at(G, (rows, cols), resid)
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        G += (U * (mu * (beta / (tau + s) - slope0))) @ Vt
        return Point.matrix(G)

    def h_value(p: Point) -> float:
        X = p.blocks[0]
        fro = float(np.linalg.norm(X))
        if fro > ball * (1.0 + 1e-9):
            return math.inf
        s = np.linalg.svd(X, compute_uv=False)
        return mu * slope0 * float(s.sum())

    def h_resolvent(center: Point, coeff: float) -> Point:
        return Point.matrix(
            prox_nuclear_ball(center.blocks[0], coeff, mu * slope0, ball)
        )

    weak = 2.0 * mu * beta / tau**2
    init = _stream(init_seed, _CH_INIT).standard_normal((n_rows, n_cols))
    return ProblemInstance(
        smooth=SmoothOracle(value=value, grad=grad),
        convex_part=ConvexPartOracle(value=h_value, resolvent=h_resolvent),
        omega=identity_projector(),
        curvature=CurvatureInfo(
            lipschitz=max(1.0, weak),
            weak_convexity=weak,
            domain_diameter=2.0 * ball,
        ),
        initial_point=Point.matrix(init),
        label=f"matrix_completion[{n_rows}x{n_cols},obs={len(vals)},mu={mu:g},"
        f"beta={beta:g},tau={tau:g}]",
    )


# ---------------------------------------------------------------------------
# nonnegative matrix factorization


def build_nmf(X: np.ndarray, k: int) -> ProblemInstance:
    """Factorization of a nonnegative matrix into two nonnegative factors.

    The iterate is the factor pair; the convex part is the indicator of
    entrywise nonnegativity of both factors.  The domain is unbounded, so
    no curvature metadata is available.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("data must be a matrix")
    if (X < 0).any():
        raise ValueError("data must be entrywise nonnegative")
    if k < 1:
        raise ValueError("inner dimension must be positive")
    n, l = X.shape

    def value(p: Point) -> float:
        V, W = p.blocks
        resid = V @ W - X
        return 0.5 * float(np.vdot(resid, resid))

    def grad(p: Point) -> Point:
        V, W = p.blocks
        resid = V @ W - X
        return Point.pair(resid @ W.T, V.T @ resid)

    def h_value(p: Point) -> float:
        if min(b.min() for b in p.blocks) >= 0.0:
            return 0.0
        return math.inf

    def h_resolvent(center: Point, coeff: float) -> Point:
        return project_nonneg(center)

    return ProblemInstance(
        smooth=SmoothOracle(value=value, grad=grad),
        convex_part=ConvexPartOracle(value=h_value, resolvent=h_resolvent),
        omega=identity_projector(),
        curvature=CurvatureInfo(),
        initial_point=Point.pair(
            np.full((n, k), 1.0 / (n * k)), np.full((k, l), 1.0 / (k * l))
        ),
        label=f"nmf[{n}x{l},k={k}]",
    )


def gen_nmf(seed: int, n: int, l: int, k: int) -> ProblemInstance:
    """Seeded uniform data matrix fed into the factorization problem."""
    X = _stream(seed, _CH_NMF).uniform(size=(n, l))
    return dataclasses.replace(build_nmf(X, k), label=f"nmf[seed={seed},{n}x{l},k={k}]")


# ---------------------------------------------------------------------------
# synthetic ratings (canonical file format support without the dataset)


def gen_synthetic_ratings(
    seed: int, n_users: int, n_items: int, n_ratings: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Tuple[int, int]]:
    """Seeded sparse integer ratings with distinct (user, item) pairs."""
    if n_ratings > n_users * n_items:
        raise ValueError("more ratings than cells")
    rng = _stream(seed, _CH_RATINGS)
    flat = np.sort(rng.choice(n_users * n_items, size=n_ratings, replace=False))
    rows, cols = np.divmod(flat, n_items)
    vals = rng.integers(1, 6, size=n_ratings).astype(float)
    return rows.astype(np.int64), cols.astype(np.int64), vals, (n_users, n_items)


def write_ratings_file(path, rows, cols, vals) -> None:
    """Write ratings in the canonical tab-separated 4-column format."""
    with open(path, "w", encoding="utf-8") as fh:
        for idx, (r, c, v) in enumerate(zip(rows, cols, vals)):
            fh.write(f"{int(r) + 1}\t{int(c) + 1}\t{int(v)}\t{880000000 + idx}\n")
