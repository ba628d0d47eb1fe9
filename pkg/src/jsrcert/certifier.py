"""Sampled Lyapunov programs: growth rate, decrease rate, and tie-break.

Given observed endpoint pairs (x0, xl), three quantities are computed:

* `solve_lambda` -- the largest observed one-step-per-trace growth,
  max ||xl|| over the sample (initial states are unit norm);
* `solve_gamma` -- the smallest decrease rate gamma for which some shape
  matrix P with I <= P <= C*I makes the lifted quadratic form decrease on
  every observation, found by bisection over a semidefinite feasibility
  oracle (the problem is quasi-convex: the feasible set only grows with
  gamma);
* `tie_break_P` -- among shapes feasible at (slightly above) the optimum,
  one minimizing lambda_max(P), hence the condition number, which enters
  the certificate bound directly.

Degree d = 1 is the common-quadratic case; higher d certifies with
sum-of-squares forms via the monomial lift.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import lmi
from .lift import SymMatrix, lift_batch, lift_dimension, matrix_metrics
from .lmi import SolverStallError
from .sampling import ObservationSet

__all__ = [
    "SolveOptions",
    "LyapunovCandidate",
    "ConstraintSystem",
    "SolverStallError",
    "MAX_LIFT_DIM",
    "solve_lambda",
    "assemble_constraints",
    "feasibility_check",
    "solve_gamma",
    "solve_gamma_endpoints",
    "tie_break_P",
]

# Lift dimensions beyond this make the D(D+1)/2-variable feasibility
# problems unreasonable at desk scale; rejected before any lifting happens.
MAX_LIFT_DIM = 20


@dataclass(frozen=True)
class SolveOptions:
    """Solver knobs.

    `c_bound` is the eigenvalue ceiling C that compactifies the set of
    admissible shape matrices.  The certificate is valid for any C; the
    default keeps certificates useful: the condition number kappa <= sqrt(C)
    of the shape enters the reported bound multiplicatively, so an enormous
    C lets ill-conditioned shapes shave the optimum a little while ruining
    the certificate a lot.  Reports flag when the ceiling binds.
    `feasibility_margin` is measured on unit-norm constraint rows under the
    trace normalization and must stay well above the LP tolerance (1e-9).
    """

    c_bound: float = 100.0
    bisection_rel_tol: float = 1e-6
    feasibility_margin: float = 1e-7
    tiebreak_slack: float = 1e-7

    def __post_init__(self):
        for name in ("c_bound", "bisection_rel_tol", "feasibility_margin", "tiebreak_slack"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.c_bound <= 1.0:
            raise ValueError("c_bound must exceed 1 (P = I must be admissible)")


@dataclass(frozen=True)
class LyapunovCandidate:
    """Certified pair (gamma, P): the lifted form decreases at rate gamma.

    `gamma` is the rate at which P was certified feasible; for tie-broken
    candidates this is the bisection optimum inflated by the tie-break
    slack.
    """

    degree: int
    gamma: float
    P: SymMatrix
    kappa: float
    c_bound_binding: bool = False


@dataclass(frozen=True)
class ConstraintSystem:
    """Decrease constraints at a fixed gamma, in packed coefficients.

    Row i dotted with vech(P) equals
    (xl_i lift)^T P (xl_i lift) - gamma^(2dl) (x0_i lift)^T P (x0_i lift),
    so feasibility means every row value is <= 0 alongside I <= P <= C*I.
    """

    dim: int
    degree: int
    l: int
    gamma: float
    rows: np.ndarray
    c_bound: float


class _PairCache:
    """Lifted endpoints with precomputed quadratic-form rows."""

    def __init__(self, X0: np.ndarray, XL: np.ndarray, degree: int, l: int):
        n = X0.shape[1]
        D = lift_dimension(n, degree)
        if D > MAX_LIFT_DIM:
            raise ValueError(
                f"lift dimension D={D} exceeds the supported maximum {MAX_LIFT_DIM} "
                f"(n={n}, degree={degree})"
            )
        self.degree = degree
        self.l = l
        self.dim = D
        self.lambda_star = float(np.max(np.linalg.norm(XL, axis=1))) if len(XL) else 0.0
        self.Wu = lmi.quad_form_rows(lift_batch(X0, degree)) if len(X0) else np.zeros((0, 0))
        self.Wv = lmi.quad_form_rows(lift_batch(XL, degree)) if len(XL) else np.zeros((0, 0))

    def rows(self, gamma: float) -> np.ndarray:
        factor = gamma ** (2 * self.degree * self.l)
        return self.Wv - factor * self.Wu


def solve_lambda(obs: ObservationSet) -> float:
    """Largest observed endpoint norm, the sampled growth-rate optimum."""
    if obs.N == 0:
        raise ValueError("solve_lambda requires at least one observation")
    _, XL = obs.endpoints()
    return float(np.max(np.linalg.norm(XL, axis=1)))


def assemble_constraints(
    obs: ObservationSet, d: int, gamma: float, opts: SolveOptions | None = None
) -> ConstraintSystem:
    """Build the feasibility system of the sampled problem at fixed gamma."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    opts = opts or SolveOptions()
    X0, XL = obs.endpoints()
    cache = _PairCache(X0, XL, d, obs.l)
    return ConstraintSystem(
        dim=cache.dim,
        degree=d,
        l=obs.l,
        gamma=gamma,
        rows=cache.rows(gamma),
        c_bound=opts.c_bound,
    )


def feasibility_check(system: ConstraintSystem, opts: SolveOptions | None = None):
    """Find P with I <= P <= C*I satisfying the system, or report infeasible.

    Returns the witness as a SymMatrix, or None when no shape matrix
    satisfies the constraints even with margin -feasibility_margin.  Raises
    SolverStallError when the iteration limit is exhausted undecided.
    """
    opts = opts or SolveOptions()
    result = lmi.max_margin_feasibility(
        system.rows, system.dim, system.c_bound, opts.feasibility_margin
    )
    if not result.feasible:
        return None
    return SymMatrix.from_full(result.P)


def _bisect_gamma(
    cache: _PairCache, opts: SolveOptions
) -> tuple[float, np.ndarray, list[np.ndarray]]:
    lam = cache.lambda_star
    D = cache.dim
    dirs: list[np.ndarray] = []  # semidefiniteness cuts carry over between gammas
    if lam == 0.0:
        return 0.0, np.eye(D), dirs
    hi = lam ** (1.0 / cache.l)
    lo = 0.0
    witness = np.eye(D)  # feasible at hi: ||xl||^2d <= lambda*^2d for all rows
    for _ in range(300):
        if hi - lo <= opts.bisection_rel_tol * max(hi, 1e-12):
            break
        mid = 0.5 * (lo + hi)
        try:
            result = lmi.max_margin_feasibility(
                cache.rows(mid), D, opts.c_bound, opts.feasibility_margin, dirs
            )
            feasible = result.feasible
        except SolverStallError as exc:
            # Undecided counts as not-proven-feasible: the stored upper
            # witness stays valid, so the certificate merely loosens.
            warnings.warn(f"feasibility oracle undecided at gamma={mid:.6g}: {exc}",
                          RuntimeWarning, stacklevel=2)
            feasible = False
        if feasible:
            hi = mid
            witness = result.P
        else:
            lo = mid
    return hi, witness, dirs


def _tie_break_cache(
    cache: _PairCache,
    gamma_star: float,
    witness: np.ndarray,
    opts: SolveOptions,
    dirs: list[np.ndarray] | None = None,
) -> LyapunovCandidate:
    gamma_tb = gamma_star * (1.0 + opts.tiebreak_slack)
    hint = matrix_metrics(witness).lambda_max * (1.0 + 1e-6)
    try:
        P = lmi.min_lambda_max(
            cache.rows(gamma_tb), cache.dim, opts.c_bound, upper_hint=hint, dirs=dirs
        )
        gamma_cert = gamma_tb
    except SolverStallError:
        P, gamma_cert = witness, gamma_star
    m = matrix_metrics(P)
    m_w = matrix_metrics(witness)
    if m.kappa > m_w.kappa + 1e-6:
        # The slackened problem should never beat the bisection witness;
        # keep the better-conditioned shape if it somehow does.
        P, m, gamma_cert = witness, m_w, gamma_star
    return LyapunovCandidate(
        degree=cache.degree,
        gamma=gamma_cert,
        P=SymMatrix.from_full(P),
        kappa=m.kappa,
        c_bound_binding=bool(m.lambda_max >= 0.9 * opts.c_bound),
    )


def solve_gamma_endpoints(
    X0: np.ndarray,
    XL: np.ndarray,
    d: int,
    l: int,
    opts: SolveOptions | None = None,
    tie_break: bool = True,
) -> tuple[float, LyapunovCandidate]:
    """Bisection solve on raw endpoint arrays; see `solve_gamma`."""
    opts = opts or SolveOptions()
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    XL = np.atleast_2d(np.asarray(XL, dtype=float))
    cache = _PairCache(X0, XL, d, l)
    gamma_star, witness, dirs = _bisect_gamma(cache, opts)
    if tie_break:
        cand = _tie_break_cache(cache, gamma_star, witness, opts, dirs)
    else:
        m = matrix_metrics(witness)
        cand = LyapunovCandidate(
            degree=d,
            gamma=gamma_star,
            P=SymMatrix.from_full(witness),
            kappa=m.kappa,
            c_bound_binding=bool(m.lambda_max >= 0.9 * opts.c_bound),
        )
    return gamma_star, cand


def solve_gamma(
    obs: ObservationSet, d: int, opts: SolveOptions | None = None
) -> tuple[float, LyapunovCandidate]:
    """Minimal certified decrease rate gamma* of the sampled program.

    Bisects gamma over [0, lambda*^(1/l)] (the upper end is always feasible
    with P = I) until the bracket shrinks below bisection_rel_tol relative
    to the upper end, then applies the condition-number tie-break at the
    returned gamma.
    """
    if obs.N == 0:
        raise ValueError("solve_gamma requires at least one observation")
    X0, XL = obs.endpoints()
    return solve_gamma_endpoints(X0, XL, d, obs.l, opts)


def tie_break_P(
    obs: ObservationSet, d: int, gamma_star: float, opts: SolveOptions | None = None
) -> LyapunovCandidate:
    """Minimize lambda_max(P) over shapes feasible at the slackened gamma*.

    With the scale pinned by P >= I, minimizing lambda_max minimizes the
    condition number kappa = sqrt(lambda_max / lambda_min).
    """
    opts = opts or SolveOptions()
    X0, XL = obs.endpoints()
    cache = _PairCache(X0, XL, d, obs.l)
    gamma_tb = gamma_star * (1.0 + opts.tiebreak_slack)
    try:
        P = lmi.min_lambda_max(cache.rows(gamma_tb), cache.dim, opts.c_bound)
    except SolverStallError as exc:
        raise SolverStallError(
            "tie-break solve failed at the slackened gamma; this should be "
            "impossible for a gamma certified feasible"
        ) from exc
    m = matrix_metrics(P)
    return LyapunovCandidate(
        degree=d,
        gamma=gamma_tb,
        P=SymMatrix.from_full(P),
        kappa=m.kappa,
        c_bound_binding=bool(m.lambda_max >= 0.9 * opts.c_bound),
    )
