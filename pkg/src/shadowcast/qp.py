"""Constrained least-squares center estimation with a KKT active-set search.

Blocked links enter a quadratic objective sum_i (n_i . theta - beta_i)^2;
non-blocked links impose guard constraints |n_j . theta - beta_j| >= D_min
with D_min = mu_r + alpha * sigma_r. Each guard is a slab around the link
line, so the feasible set is a plane minus a union of slabs and the
optimum is either the unconstrained minimum, a point pinned to one slab
boundary, or an intersection of two boundaries. The solver enumerates
exactly those candidates, expanding the working set of guards until a
movement bound certifies that no excluded guard can matter, and relaxes
alpha in steps of 0.5 when the candidate set is empty (null feasible
region).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfcx

from .errors import Outage
from .geometry import PARALLEL_TOL, LinkLine, Point2, line_offset, projection_param
from .scene import ObservationSet, RadiusPrior

# Guards may be violated by this much and still count as satisfied.
FEASIBILITY_TOL = 1e-9

# Below this determinant the blocked-link normals are treated as parallel.
RANK_TOL = 1e-12

# Guards whose segment projection parameter falls outside this window at
# the unconstrained minimum are phantom constraints from unrelated links.
SEGMENT_PARAM_WINDOW = (-0.1, 1.1)

_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Assembled quadratic program for one observation set."""

    blocked: Tuple[LinkLine, ...]
    nonblocked: Tuple[LinkLine, ...]
    d_min: float
    A: np.ndarray  # 2x2, sum of n n^T over blocked links
    b: np.ndarray  # 2-vector, sum of beta n over blocked links


@dataclass(frozen=True)
class KktSolution:
    """Solver output: the estimate plus its optimality certificate inputs."""

    theta_star: Point2
    active_set: Tuple[Tuple[int, int], ...]  # (nonblocked index, side +1/-1)
    multipliers: Tuple[float, ...]
    alpha_final: float
    objective: float
    d_min: float
    rank_deficient: bool = False
    infeasible_relaxed: bool = False
    nb_indices: Tuple[int, ...] = ()  # guards instantiated for this solve


def build_problem(obs: ObservationSet, prior: RadiusPrior, alpha: float) -> QpProblem:
    """Assemble the normal-equation matrices and the guard distance."""
    if not obs.blocked:
        raise Outage("constrained estimation needs at least one blocked link")
    a00 = a01 = a11 = b0 = b1 = 0.0
    for link in obs.blocked:
        nx, ny = link.n
        a00 += nx * nx
        a01 += nx * ny
        a11 += ny * ny
        b0 += link.beta * nx
        b1 += link.beta * ny
    return QpProblem(
        blocked=tuple(obs.blocked),
        nonblocked=tuple(obs.nonblocked),
        d_min=prior.mu_r + alpha * prior.sigma_r,
        A=np.array([[a00, a01], [a01, a11]]),
        b=np.array([b0, b1]),
    )


def objective(p: QpProblem, theta) -> float:
    """Sum of squared line offsets over the blocked links."""
    tx, ty = (theta.x, theta.y) if isinstance(theta, Point2) else (theta[0], theta[1])
    total = 0.0
    for link in p.blocked:
        nx, ny = link.n
        r = nx * tx + ny * ty - link.beta
        total += r * r
    return total


def _lambda_min(A: np.ndarray) -> float:
    h = 0.5 * (A[0, 0] + A[1, 1])
    d = math.hypot(0.5 * (A[0, 0] - A[1, 1]), A[0, 1])
    return h - d


def unconstrained_minimum(p: QpProblem) -> Tuple[Point2, bool]:
    """Minimizer of the blocked-link objective, ignoring all guards.

    Returns (theta_g, rank_deficient). When every blocked normal is
    parallel the normal matrix is singular; the minimum-norm point on the
    ridge of minimizers is returned and the flag is set.
    """
    A, b = p.A, p.b
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[0, 1]
    if det < RANK_TOL:
        rows = np.array([link.n for link in p.blocked])
        rhs = np.array([link.beta for link in p.blocked])
        sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        return Point2(float(sol[0]), float(sol[1])), True
    x = (A[1, 1] * b[0] - A[0, 1] * b[1]) / det
    y = (A[0, 0] * b[1] - A[0, 1] * b[0]) / det
    return Point2(float(x), float(y)), False


def active_constraints(theta_g: Point2, p: QpProblem) -> List[Tuple[int, int]]:
    """Guards violated at theta_g, tagged with the side theta_g occupies.

    Side is the sign of n . theta_g - beta (+1 on a tie), selecting which
    of the two slab boundaries is the near one.
    """
    out: List[Tuple[int, int]] = []
    for j, link in enumerate(p.nonblocked):
        off = line_offset(link, theta_g)
        if abs(off) < p.d_min:
            out.append((j, 1 if off >= 0 else -1))
    return out


def _pin_to_line(
    A: np.ndarray, b: np.ndarray, n: Tuple[float, float], c: float, side: int, tg: np.ndarray
) -> Tuple[np.ndarray, float]:
    """Solve the bordered system pinning theta to the line n . theta = c.

    Stationarity with one binding guard reads A theta - 0.5 side m n = b;
    the line equation closes the 3x3 system. Falls back to the Euclidean
    projection of the unconstrained minimum when the system is singular
    (parallel blocked normals).
    """
    nx, ny = n
    m3 = np.array(
        [
            [A[0, 0], A[0, 1], -0.5 * side * nx],
            [A[1, 0], A[1, 1], -0.5 * side * ny],
            [nx, ny, 0.0],
        ]
    )
    rhs = np.array([b[0], b[1], c])
    try:
        sol = np.linalg.solve(m3, rhs)
        return sol[:2], float(sol[2])
    except np.linalg.LinAlgError:
        off = nx * tg[0] + ny * tg[1] - c
        theta = np.array([tg[0] - off * nx, tg[1] - off * ny])
        r = 2.0 * (A @ theta - b)
        return theta, float(side * (nx * r[0] + ny * r[1]))


def solve_on_constraint(p: QpProblem, j: int, side: int) -> Tuple[Point2, float]:
    """Candidate on one shifted guard line, with its multiplier.

    The guard j is shifted to n . theta = beta_j + side * D_min. If the
    unconstrained minimum already satisfies guard j the constraint is
    slack: the multiplier is zero and theta_g is returned unchanged.
    """
    theta_g, _ = unconstrained_minimum(p)
    link = p.nonblocked[j]
    if abs(line_offset(link, theta_g)) >= p.d_min:
        return theta_g, 0.0
    c = link.beta + side * p.d_min
    tg = theta_g.as_array()
    theta, m = _pin_to_line(p.A, p.b, link.n, c, side, tg)
    return Point2(float(theta[0]), float(theta[1])), m


def _cross_point(
    n1: Tuple[float, float], c1: float, n2: Tuple[float, float], c2: float
) -> Optional[Tuple[float, float]]:
    cross = n1[0] * n2[1] - n1[1] * n2[0]
    if abs(cross) < PARALLEL_TOL:
        return None
    x = (c1 * n2[1] - c2 * n1[1]) / cross
    y = (n1[0] * c2 - n2[0] * c1) / cross
    return x, y


def feasible_intersections(p: QpProblem, active: Sequence[Tuple[int, int]]) -> List[Point2]:
    """Crossings of shifted guard lines that respect every other guard.

    Both boundaries (beta +/- D_min) of every active guard are considered;
    a crossing survives only if it sits at least D_min (minus tolerance)
    from all non-blocked lines of the problem.
    """
    nb_n = np.array([link.n for link in p.nonblocked]).reshape(len(p.nonblocked), 2)
    nb_beta = np.array([link.beta for link in p.nonblocked])
    indices = sorted({j for j, _ in active})
    out: List[Point2] = []
    for ii, j1 in enumerate(indices):
        for j2 in indices[ii + 1 :]:
            n1, b1 = p.nonblocked[j1].n, p.nonblocked[j1].beta
            n2, b2 = p.nonblocked[j2].n, p.nonblocked[j2].beta
            for s1 in (1, -1):
                for s2 in (1, -1):
                    pt = _cross_point(n1, b1 + s1 * p.d_min, n2, b2 + s2 * p.d_min)
                    if pt is None:
                        continue
                    offs = nb_n @ np.array(pt) - nb_beta
                    if np.all(np.abs(offs) >= p.d_min - FEASIBILITY_TOL):
                        out.append(Point2(pt[0], pt[1]))
    return out


def _obj_arr(bn: np.ndarray, bbeta: np.ndarray, theta: np.ndarray) -> float:
    r = bn @ theta - bbeta
    return float(r @ r)


def _enumerate_candidates(
    A: np.ndarray,
    b: np.ndarray,
    tg: np.ndarray,
    nb_n: np.ndarray,
    nb_beta: np.ndarray,
    working: Sequence[int],
    d_min: float,
) -> List[Tuple[np.ndarray, Tuple[Tuple[int, int], ...]]]:
    """All pins and pairwise crossings over the working set of guards."""
    cands: List[Tuple[np.ndarray, Tuple[Tuple[int, int], ...]]] = []
    for j in working:
        n = (nb_n[j, 0], nb_n[j, 1])
        for s in (1, -1):
            theta, _ = _pin_to_line(A, b, n, nb_beta[j] + s * d_min, s, tg)
            cands.append((theta, ((j, s),)))
    for ii, j1 in enumerate(working):
        n1 = (nb_n[j1, 0], nb_n[j1, 1])
        for j2 in working[ii + 1 :]:
            n2 = (nb_n[j2, 0], nb_n[j2, 1])
            for s1 in (1, -1):
                for s2 in (1, -1):
                    pt = _cross_point(n1, nb_beta[j1] + s1 * d_min, n2, nb_beta[j2] + s2 * d_min)
                    if pt is not None:
                        cands.append((np.array(pt), ((j1, s1), (j2, s2))))
    return cands


def _multipliers_at(
    A: np.ndarray,
    b: np.ndarray,
    nb_n: np.ndarray,
    theta: np.ndarray,
    defs: Tuple[Tuple[int, int], ...],
) -> Tuple[float, ...]:
    """Multipliers of the binding guards from the stationarity residual."""
    if not defs:
        return ()
    r = 2.0 * (A @ theta - b)
    if len(defs) == 1:
        j, s = defs[0]
        vals = [s * float(nb_n[j] @ r)]
    else:
        (j1, s1), (j2, s2) = defs
        cols = np.column_stack([s1 * nb_n[j1], s2 * nb_n[j2]])
        vals = [float(v) for v in np.linalg.solve(cols, r)]
    return tuple(0.0 if -1e-12 < v < 0.0 else v for v in vals)


def _in_domain(theta: np.ndarray, domain, pad: float) -> bool:
    if domain is None:
        return True
    xmin, ymin, xmax, ymax = domain
    return (
        xmin - pad <= theta[0] <= xmax + pad and ymin - pad <= theta[1] <= ymax + pad
    )


def _any_local_candidate_feasible(
    A: np.ndarray,
    b: np.ndarray,
    tg: np.ndarray,
    nb_n: np.ndarray,
    nb_beta: np.ndarray,
    aoffs: np.ndarray,
    d_min: float,
    domain,
    trigger_cap: int = 24,
) -> bool:
    """Whether the active-constraint candidate set has any feasible point.

    This is the relaxation trigger: only guards violated at theta_g
    contribute pins and crossings here. When everything in this local set
    is covered by other guard slabs (within the search domain), the region
    counts as null and the caller lowers alpha, which keeps the estimate
    anchored near the data instead of escaping to a distant feasible
    pocket outside the room. Very large active sets are capped to the
    nearest guards; that only makes the trigger more eager in dense webs,
    where relaxing is the right outcome anyway.
    """
    active = np.nonzero(aoffs < d_min)[0]
    if active.size > trigger_cap:
        order = np.argsort(aoffs[active], kind="stable")
        active = active[order[:trigger_cap]]
    cands = _enumerate_candidates(A, b, tg, nb_n, nb_beta, sorted(active.tolist()), d_min)
    pad = 2.0 * d_min
    for theta, _ in cands:
        if not _in_domain(theta, domain, pad):
            continue
        if np.all(np.abs(nb_n @ theta - nb_beta) >= d_min - FEASIBILITY_TOL):
            return True
    return False


def _solve_fixed_guard(
    A: np.ndarray,
    b: np.ndarray,
    tg: np.ndarray,
    obj_g: float,
    rank_def: bool,
    lam_min: float,
    bn: np.ndarray,
    bbeta: np.ndarray,
    nb_n: np.ndarray,
    nb_beta: np.ndarray,
    aoffs: np.ndarray,
    d_min: float,
    max_working: int,
    domain,
) -> Optional[Tuple[np.ndarray, Tuple[Tuple[int, int], ...], float]]:
    """Best feasible candidate at one guard distance, or None (null region).

    The null test follows the local active-set candidate rule; once it
    passes, the working set grows until a movement bound shows that no
    excluded guard can carry the optimum, so the returned point is the
    exact constrained minimum at this guard distance.
    """
    m_total = len(nb_beta)
    if m_total == 0 or not np.any(aoffs < d_min):
        return tg, (), obj_g
    if not _any_local_candidate_feasible(A, b, tg, nb_n, nb_beta, aoffs, d_min, domain):
        return None

    pad = 2.0 * d_min
    nearest = np.argsort(aoffs, kind="stable")
    working = set(np.nonzero(aoffs < d_min)[0].tolist())
    grew_to_cap = False
    while True:
        cands = _enumerate_candidates(A, b, tg, nb_n, nb_beta, sorted(working), d_min)
        feasible = [
            (theta, defs)
            for theta, defs in cands
            if _in_domain(theta, domain, pad)
            and np.all(np.abs(nb_n @ theta - nb_beta) >= d_min - FEASIBILITY_TOL)
        ]
        if feasible:
            theta, defs = min(
                feasible,
                key=lambda c: (_obj_arr(bn, bbeta, c[0]), c[0][0], c[0][1]),
            )
            obj_v = _obj_arr(bn, bbeta, theta)
            if rank_def or lam_min <= RANK_TOL or len(working) >= max_working:
                return theta, defs, obj_v
            # Any guard a feasible improvement could bind sits within the
            # movement bound sqrt((obj - obj_g) / lambda_min) of theta_g.
            radius = math.sqrt(max(obj_v - obj_g, 0.0) / lam_min) + 1e-9
            needed = set(np.nonzero(aoffs < d_min + radius)[0].tolist())
            if needed <= working:
                return theta, defs, obj_v
            working |= needed
            if len(working) > max_working:
                working = set(nearest[:max_working].tolist()) | set(
                    np.nonzero(aoffs < d_min)[0].tolist()
                )
                if len(working) > 4 * max_working:
                    return theta, defs, obj_v
            continue
        if grew_to_cap or len(working) >= min(m_total, max_working):
            return None
        working = set(nearest[: min(m_total, max_working)].tolist()) | working
        grew_to_cap = True


def mmse_estimate(
    obs: ObservationSet,
    prior: RadiusPrior,
    *,
    alpha0: float = 3.0,
    alpha_step: float = 0.5,
    nb_segment_filter: bool = True,
    max_working: int = 64,
) -> KktSolution:
    """Guard-constrained least-squares estimate of the object center.

    Non-blocked links whose segments pass nowhere near the unconstrained
    minimum (projection parameter outside the tolerance window) are
    excluded from the constraint set unless nb_segment_filter is off;
    their infinite lines would otherwise forbid regions the physical link
    never sees. When no feasible candidate exists, alpha is reduced by
    alpha_step (down to 0) and the solve is repeated; if the region is
    still null at the floor, the unconstrained minimum is returned with
    the infeasible_relaxed flag raised.
    """
    if not obs.blocked:
        raise Outage("constrained estimation needs at least one blocked link")
    problem = build_problem(obs, prior, alpha0)
    theta_g, rank_def = unconstrained_minimum(problem)
    tg = theta_g.as_array()

    if nb_segment_filter:
        lo, hi = SEGMENT_PARAM_WINDOW
        keep = [
            j
            for j, link in enumerate(obs.nonblocked)
            if lo <= projection_param(link, theta_g) <= hi
        ]
    else:
        keep = list(range(len(obs.nonblocked)))

    bn = np.array([link.n for link in problem.blocked])
    bbeta = np.array([link.beta for link in problem.blocked])
    nb_n = np.array([obs.nonblocked[j].n for j in keep]).reshape(len(keep), 2)
    nb_beta = np.array([obs.nonblocked[j].beta for j in keep])
    aoffs = np.abs(nb_n @ tg - nb_beta) if keep else np.zeros(0)

    obj_g = _obj_arr(bn, bbeta, tg)
    lam_min = _lambda_min(problem.A)

    alpha = float(alpha0)
    while True:
        d_min = prior.mu_r + alpha * prior.sigma_r
        found = _solve_fixed_guard(
            problem.A, problem.b, tg, obj_g, rank_def, lam_min,
            bn, bbeta, nb_n, nb_beta, aoffs, d_min, max_working,
        )
        if found is not None:
            theta, defs, obj_v = found
            mults = _multipliers_at(problem.A, problem.b, nb_n, theta, defs)
            return KktSolution(
                theta_star=Point2(float(theta[0]), float(theta[1])),
                active_set=tuple((keep[j], s) for j, s in defs),
                multipliers=mults,
                alpha_final=alpha,
                objective=obj_v,
                d_min=d_min,
                rank_deficient=rank_def,
                infeasible_relaxed=False,
                nb_indices=tuple(keep),
            )
        if alpha <= 0.0:
            return KktSolution(
                theta_star=theta_g,
                active_set=(),
                multipliers=(),
                alpha_final=0.0,
                objective=obj_g,
                d_min=prior.mu_r,
                rank_deficient=rank_def,
                infeasible_relaxed=True,
                nb_indices=tuple(keep),
            )
        alpha = max(0.0, alpha - alpha_step)


def _std_truncated_mean(lo: float, hi: float) -> float:
    """Mean of a standard normal truncated to [lo, hi], tail-safe."""
    if lo == -math.inf and hi == math.inf:
        return 0.0
    if hi == math.inf:
        return _SQRT_2_OVER_PI / erfcx(lo / _SQRT2)
    if lo == -math.inf:
        return -_SQRT_2_OVER_PI / erfcx(-hi / _SQRT2)
    if hi <= 0.0:
        return -_std_truncated_mean(-hi, -lo)
    if lo >= 0.0:
        # Factor exp(-lo^2/2) out of both tail masses so far intervals
        # stay finite: w = exp((lo^2 - hi^2)/2) <= 1.
        x, y = lo / _SQRT2, hi / _SQRT2
        w = math.exp(x * x - y * y)
        return _SQRT_2_OVER_PI * (1.0 - w) / (erfcx(x) - w * erfcx(y))
    # Interval straddles zero: no underflow risk in direct evaluation.
    phi_lo = math.exp(-0.5 * lo * lo) / math.sqrt(2.0 * math.pi)
    phi_hi = math.exp(-0.5 * hi * hi) / math.sqrt(2.0 * math.pi)
    mass = 0.5 * (math.erfc(lo / _SQRT2) - math.erfc(hi / _SQRT2))
    return (phi_lo - phi_hi) / mass


def truncated_normal_mean(mu: float, sigma: float, lo: float, hi: float) -> float:
    """Mean of N(mu, sigma^2) truncated to [lo, hi]."""
    if not hi > lo:
        raise ValueError(f"need hi > lo, got [{lo}, {hi}]")
    a = (lo - mu) / sigma if lo != -math.inf else -math.inf
    b = (hi - mu) / sigma if hi != math.inf else math.inf
    return mu + sigma * _std_truncated_mean(a, b)


def estimate_radius(theta_hat: Point2, obs: ObservationSet, prior: RadiusPrior) -> float:
    """Posterior-mean radius given the center estimate.

    The blockage pattern at theta_hat brackets the radius: every blocked
    link forces r >= its line distance, every non-blocked link forces
    r <= its line distance. The estimate is the prior mean conditioned on
    that interval. A zero lower bound carries no information, so the
    untruncated prior mean is returned exactly; an inverted interval
    (contradictory observations) falls back to max(d_lo, mu_r).
    """
    if not obs.blocked:
        raise Outage("radius estimation needs at least one blocked link")
    d_lo = max(abs(line_offset(link, theta_hat)) for link in obs.blocked)
    if obs.nonblocked:
        d_hi = min(abs(line_offset(link, theta_hat)) for link in obs.nonblocked)
    else:
        d_hi = math.inf
    if d_hi <= d_lo:
        return max(d_lo, prior.mu_r)
    lo = d_lo if d_lo > 0.0 else -math.inf
    return truncated_normal_mean(prior.mu_r, prior.sigma_r, lo, d_hi)
