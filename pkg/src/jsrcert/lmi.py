"""Feasibility engine for the sampled Lyapunov programs.

Every program solved here has the same shape: find a symmetric P with
I <= P <= C*I satisfying a list of homogeneous linear inequalities
<G_i, P> <= 0.  The engine works in packed coordinates z = vech(P) and
solves a sequence of linear programs over an outer approximation of the
semidefinite constraints, refining it with eigenvector cuts w^T P w >= r
whenever the LP solution leaves the cone.  Because the LP relaxation only
ever over-estimates the achievable margin, a relaxation margin below the
infeasibility threshold certifies that the true program is infeasible.

The inequality constraints are homogeneous in P, so the search is run under
the normalization trace(P) = D with the norm cap C mapped to the eigenvalue
floor D/C (lambda_max never exceeds the trace, so the floor caps the
condition number at the same sqrt(C) as the original box).  That keeps every
LP variable in [-D, D] regardless of C, and the accepted iterate is rescaled
afterwards so P >= I holds exactly.  Margins
are measured in this normalization, on unit-norm constraint rows; the
feasibility margin must therefore sit well above the LP feasibility
tolerance (1e-9), since rescaling divides residual noise by the eigenvalue
floor.

Feasibility is decided in two phases: a margin-maximizing phase answers
yes/no, and a second pass re-balances accepted witnesses by maximizing their
eigenvalue floor at the required margin (the margin-maximal vertex is
typically near-singular, which would amplify LP noise when rescaled).

Two entry points: `max_margin_feasibility` (the yes/no oracle used by the
gamma bisection) and `min_lambda_max` (the condition-number tie-break).
Both accept a mutable list of probe directions so the semidefiniteness cuts
learned in one call (which are independent of gamma) can warm-start the
next.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "SolverStallError",
    "MarginResult",
    "quad_form_rows",
    "unpack_sym",
    "seed_cut_directions",
    "max_margin_feasibility",
    "min_lambda_max",
]

_EIG_TOL = 1e-9
_MAX_CUT_ROUNDS = 500
# Tight tolerances first so witnesses meet the 1e-8 constraint-slack
# contract; retried with HiGHS defaults on numerically degenerate systems.
_LP_OPTION_LADDER = (
    {"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    {},
)


class SolverStallError(RuntimeError):
    """Iteration limit exhausted before the oracle could decide; distinct
    from infeasibility."""


@dataclass(frozen=True)
class MarginResult:
    feasible: bool
    P: np.ndarray | None
    margin: float


def _triu(D: int):
    return np.triu_indices(D)


def quad_form_rows(V: np.ndarray) -> np.ndarray:
    """Rows r with r . vech(P) = v^T P v for each row v of V.

    Off-diagonal vech entries carry a factor 2 so plain dot products give
    the quadratic form.
    """
    V = np.atleast_2d(V)
    D = V.shape[1]
    iu, ju = _triu(D)
    rows = V[:, iu] * V[:, ju]
    rows[:, iu != ju] *= 2.0
    return rows


def unpack_sym(z: np.ndarray, D: int) -> np.ndarray:
    P = np.zeros((D, D))
    iu = _triu(D)
    P[iu] = z
    P.T[iu] = z
    return P


def seed_cut_directions(D: int) -> list[np.ndarray]:
    """Initial probe directions: coordinate axes and pairwise diagonals."""
    dirs = [np.eye(D)[i] for i in range(D)]
    for i in range(D):
        for j in range(i + 1, D):
            w = np.zeros(D)
            w[i] = w[j] = np.sqrt(0.5)
            dirs.append(w.copy())
            w[j] = -np.sqrt(0.5)
            dirs.append(w)
    return dirs


def _clean_rows(rows: np.ndarray) -> np.ndarray:
    """Normalize rows to unit norm, drop zero rows, merge duplicates.

    Duplicates are detected after rounding to 12 decimals, which perturbs a
    unit-norm constraint by far less than the feasibility margin but removes
    the heavy degeneracy of dense grids (antipodal points give identical
    rows).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    norms = np.linalg.norm(rows, axis=1)
    keep = norms > 1e-300
    rows = rows[keep] / norms[keep, None]
    if rows.shape[0] > 1:
        rows = np.unique(np.round(rows, 12), axis=0)
    return rows


def _solve_lp(c, A_ub, b_ub, bounds, A_eq=None, b_eq=None):
    res = None
    for options in _LP_OPTION_LADDER:
        res = linprog(
            c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
            bounds=bounds, method="highs", options=options,
        )
        if res.status == 0:
            return res.x
    raise SolverStallError(f"LP solve failed (status {res.status}): {res.message}")


def _negative_directions(eigvals, eigvecs, threshold: float) -> list[np.ndarray]:
    return [eigvecs[:, k] for k in range(len(eigvals)) if eigvals[k] < threshold]


def _balanced_witness(
    rows: np.ndarray, D: int, margin: float, dirs: list[np.ndarray]
) -> np.ndarray:
    """Maximize the eigenvalue floor of P subject to margins >= `margin`.

    Run after feasibility is established: trading surplus margin for
    conditioning keeps the rescaled witness numerically meaningful.
    Variables are vech(P) (trace-normalized) plus the floor s.
    """
    K = D * (D + 1) // 2
    iu, ju = _triu(D)
    diag_mask = iu == ju
    c = np.zeros(K + 1)
    c[-1] = -1.0  # maximize the floor variable
    bounds = [(0.0, float(D)) if d else (-D / 2.0, D / 2.0) for d in diag_mask]
    bounds.append((0.0, 1.0))  # lambda_min is at most the mean eigenvalue 1
    trace_row = np.zeros((1, K + 1))
    trace_row[0, :K][diag_mask] = 1.0

    base = np.hstack([rows, np.zeros((rows.shape[0], 1))])
    base_rhs = np.full(rows.shape[0], -margin)
    for _ in range(_MAX_CUT_ROUNDS):
        q = quad_form_rows(np.array(dirs))
        A_ub = np.vstack([base, np.hstack([-q, np.ones((q.shape[0], 1))])])
        b_ub = np.concatenate([base_rhs, np.zeros(q.shape[0])])
        x = _solve_lp(c, A_ub, b_ub, bounds, A_eq=trace_row, b_eq=[float(D)])
        s = float(x[-1])
        P = unpack_sym(x[:K], D)
        eigvals, eigvecs = np.linalg.eigh(P)
        new_dirs = _negative_directions(eigvals, eigvecs, s - _EIG_TOL)
        if new_dirs:
            dirs.extend(new_dirs)
            continue
        return P
    raise SolverStallError("eigenvector-cut iteration limit reached in witness balancing")


def max_margin_feasibility(
    rows: np.ndarray,
    D: int,
    c_bound: float,
    margin: float,
    dirs: list[np.ndarray] | None = None,
) -> MarginResult:
    """Decide whether some P with I <= P <= c_bound*I satisfies all rows.

    `rows` hold the packed coefficients of <G_i, P> <= 0.  Returns a witness
    scaled so P >= I holds exactly, or infeasible when the trace-normalized
    relaxation (eigenvalue floor D/c_bound) cannot reach margin -`margin`.
    `dirs` accumulates semidefiniteness probe directions across calls.
    """
    rows = _clean_rows(rows)
    if rows.shape[0] == 0:
        return MarginResult(feasible=True, P=np.eye(D), margin=1.0)
    K = D * (D + 1) // 2
    iu, ju = _triu(D)
    diag_mask = iu == ju
    # lambda_max <= trace = D, so this floor caps lambda_max/lambda_min at
    # c_bound, matching the I <= P <= C*I box after rescaling.
    floor = min(D / c_bound, 0.9)
    if dirs is None:
        dirs = seed_cut_directions(D)
    elif not dirs:
        dirs.extend(seed_cut_directions(D))

    c = np.zeros(K + 1)
    c[-1] = -1.0  # maximize the margin variable
    # Valid boxes for PSD P with trace D: diagonal in [0, D], off-diagonal
    # magnitude at most D/2, margins at most ||P||_F <= D.
    bounds = [(0.0, float(D)) if d else (-D / 2.0, D / 2.0) for d in diag_mask]
    bounds.append((-2.0 * D, 2.0 * D))
    trace_row = np.zeros((1, K + 1))
    trace_row[0, :K][diag_mask] = 1.0

    base = np.hstack([rows, np.ones((rows.shape[0], 1))])
    base_rhs = np.zeros(base.shape[0])

    for _ in range(_MAX_CUT_ROUNDS):
        q = quad_form_rows(np.array(dirs))
        A_ub = np.vstack([base, np.hstack([-q, np.zeros((q.shape[0], 1))])])
        b_ub = np.concatenate([base_rhs, np.full(q.shape[0], -floor)])
        x = _solve_lp(c, A_ub, b_ub, bounds, A_eq=trace_row, b_eq=[float(D)])
        t = float(x[-1])
        if t < -margin:
            return MarginResult(feasible=False, P=None, margin=t)
        P = unpack_sym(x[:K], D)
        eigvals, eigvecs = np.linalg.eigh(P)
        new_dirs = _negative_directions(eigvals, eigvecs, floor - _EIG_TOL * max(1.0, floor))
        if new_dirs:
            dirs.extend(new_dirs)
            continue
        if t < margin:
            return MarginResult(feasible=False, P=None, margin=t)
        P = _balanced_witness(rows, D, min(t, max(margin, 1e-6)), dirs)
        lmin = float(np.linalg.eigvalsh(P)[0])
        if lmin <= 0:
            return MarginResult(feasible=False, P=None, margin=t)
        P = P / lmin  # homogeneous constraints: rescale so P >= I exactly
        if float(np.max(rows @ P[np.triu_indices(D)])) > 1e-9:
            # Rescaling amplified LP noise past the contract; boundary case.
            return MarginResult(feasible=False, P=None, margin=t)
        return MarginResult(feasible=True, P=P, margin=t)
    raise SolverStallError("eigenvector-cut iteration limit reached in feasibility oracle")


def min_lambda_max(
    rows: np.ndarray,
    D: int,
    c_bound: float,
    upper_hint: float | None = None,
    dirs: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Minimize lambda_max(P) over P >= I satisfying all rows.

    The scale of P is pinned by the lower eigenvalue bound, so minimizing
    the top eigenvalue minimizes the condition number.  `upper_hint` is a
    known-achievable ceiling (for instance from a feasibility witness); it
    tightens the variable boxes without affecting the optimum.  Returns the
    full symmetric minimizer, rescaled so P >= I holds exactly.
    """
    rows = _clean_rows(rows)
    K = D * (D + 1) // 2
    iu, ju = _triu(D)
    diag_mask = iu == ju
    top = float(min(c_bound, upper_hint)) if upper_hint is not None else float(c_bound)
    top = max(top, 1.0 + 1e-9)
    if dirs is None:
        dirs = seed_cut_directions(D)
    elif not dirs:
        dirs.extend(seed_cut_directions(D))

    c = np.zeros(K + 1)
    c[-1] = 1.0  # minimize the eigenvalue ceiling variable
    bounds = [(1.0, top) if d else (-top, top) for d in diag_mask]
    bounds.append((1.0, top))

    blocks = []
    rhs = []
    if rows.shape[0]:
        blocks.append(np.hstack([rows, np.zeros((rows.shape[0], 1))]))
        rhs.append(np.zeros(rows.shape[0]))
    # Ceiling rows valid for any PSD P: diagonal entries and off-diagonal
    # magnitudes never exceed lambda_max.
    mag = []
    for k, (i, j) in enumerate(zip(iu, ju)):
        row = np.zeros(K + 1)
        row[k] = 1.0
        row[-1] = -1.0
        mag.append(row.copy())
        if i != j:
            row[k] = -1.0
            mag.append(row)
    blocks.append(np.array(mag))
    rhs.append(np.zeros(len(mag)))
    base = np.vstack(blocks)
    base_rhs = np.concatenate(rhs)

    hi_dirs: list[np.ndarray] = []
    for _ in range(_MAX_CUT_ROUNDS):
        parts = [base]
        parts_rhs = [base_rhs]
        q = quad_form_rows(np.array(dirs))
        parts.append(np.hstack([-q, np.zeros((q.shape[0], 1))]))
        parts_rhs.append(np.full(q.shape[0], -1.0))
        if hi_dirs:
            q = quad_form_rows(np.array(hi_dirs))
            parts.append(np.hstack([q, -np.ones((q.shape[0], 1))]))
            parts_rhs.append(np.zeros(q.shape[0]))
        x = _solve_lp(c, np.vstack(parts), np.concatenate(parts_rhs), bounds)
        ceiling = float(x[-1])
        P = unpack_sym(x[:K], D)
        eigvals, eigvecs = np.linalg.eigh(P)
        cut_added = False
        new_dirs = _negative_directions(eigvals, eigvecs, 1.0 - _EIG_TOL)
        if new_dirs:
            dirs.extend(new_dirs)
            cut_added = True
        if eigvals[-1] > ceiling + _EIG_TOL * max(1.0, ceiling):
            hi_dirs.append(eigvecs[:, -1])
            cut_added = True
        if cut_added:
            continue
        if eigvals[0] < 1.0:
            P = P / float(eigvals[0])
        return P
    raise SolverStallError("eigenvector-cut iteration limit reached in tie-break solve")
