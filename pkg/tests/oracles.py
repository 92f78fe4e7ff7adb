"""Independent brute-force oracles used to pin expected values in tests.

Everything here avoids the library's solver paths on purpose: objectives
are evaluated by direct summation over grids, likelihoods via math.erfc,
and truncated means via high-precision quadrature.
"""

from __future__ import annotations

import math
from typing import List, Optional, Tuple

import numpy as np

from shadowcast.geometry import LinkKind, LinkLine, Point2
from shadowcast.scene import ObservationSet

FEAS_TOL = 1e-9


def make_line(n, beta, kind=LinkKind.NONBLOCKED, span=6.0, center_t=0.0) -> LinkLine:
    """LinkLine on n . p = beta with segment endpoints straddling the foot point."""
    nx, ny = n
    tx, ty = -ny, nx
    cx, cy = beta * nx + center_t * tx, beta * ny + center_t * ty
    a = Point2(cx - span * tx, cy - span * ty)
    b = Point2(cx + span * tx, cy + span * ty)
    return LinkLine(n=(float(nx), float(ny)), beta=float(beta), a=a, b=b, kind=kind)


def random_instance(
    rng: np.random.Generator,
    n_blocked: Optional[int] = None,
    n_nonblocked: Optional[int] = None,
    lam_min_floor: float = 0.0,
    beta_max: float = 3.0,
) -> ObservationSet:
    """Random lines with the package's sign convention (beta >= 0)."""
    while True:
        nb = int(rng.integers(2, 9)) if n_blocked is None else n_blocked
        nn = int(rng.integers(0, 7)) if n_nonblocked is None else n_nonblocked
        blocked: List[LinkLine] = []
        a00 = a01 = a11 = 0.0
        for _ in range(nb):
            phi = rng.uniform(0.0, 2.0 * math.pi)
            nx, ny = math.cos(phi), math.sin(phi)
            beta = rng.uniform(0.0, beta_max)
            blocked.append(make_line((nx, ny), beta, LinkKind.BLOCKED))
            a00 += nx * nx
            a01 += nx * ny
            a11 += ny * ny
        h = 0.5 * (a00 + a11)
        lam_min = h - math.hypot(0.5 * (a00 - a11), a01)
        if lam_min < lam_min_floor:
            continue
        nonblocked = [
            make_line(
                (math.cos(phi), math.sin(phi)), rng.uniform(0.0, beta_max), LinkKind.NONBLOCKED
            )
            for phi in rng.uniform(0.0, 2.0 * math.pi, size=nn)
        ]
        return ObservationSet(blocked=blocked, nonblocked=nonblocked)


def _arrays(obs: ObservationSet):
    bn = np.array([l.n for l in obs.blocked]).reshape(len(obs.blocked), 2)
    bb = np.array([l.beta for l in obs.blocked])
    mn = np.array([l.n for l in obs.nonblocked]).reshape(len(obs.nonblocked), 2)
    mb = np.array([l.beta for l in obs.nonblocked])
    return bn, bb, mn, mb


def grid_objective(bn, bb, pts: np.ndarray) -> np.ndarray:
    obj = np.zeros(pts.shape[0])
    for i in range(bn.shape[0]):
        r = pts @ bn[i] - bb[i]
        obj += r * r
    return obj


def grid_feasible(mn, mb, pts: np.ndarray, d_min: float) -> np.ndarray:
    mask = np.ones(pts.shape[0], dtype=bool)
    for j in range(mn.shape[0]):
        mask &= np.abs(pts @ mn[j] - mb[j]) >= d_min - FEAS_TOL
    return mask


def _box_grid(cx: float, cy: float, half: float, step: float) -> np.ndarray:
    xs = np.arange(cx - half, cx + half + step / 2, step)
    ys = np.arange(cy - half, cy + half + step / 2, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def brute_force_mmse(
    obs: ObservationSet, d_min: float, resolution: float = 1e-3, refine: bool = True
) -> Optional[Tuple[float, np.ndarray, float]]:
    """Feasibility-filtered grid minimization of the blocked-link objective.

    Returns (objective_at_resolution, argmin_point, refined_objective), or
    None when no feasible point was found in the probed region. The
    refined value re-grids twice around the argmin, 50x finer each time,
    still by brute force.
    """
    bn, bb, mn, mb = _arrays(obs)
    tg, *_ = np.linalg.lstsq(bn, bb, rcond=None)
    obj_g = float(grid_objective(bn, bb, tg[None, :])[0])
    lam_min = float(np.linalg.eigvalsh(bn.T @ bn)[0])

    probe = None
    for half in (1.5, 4.0):
        pts = _box_grid(tg[0], tg[1], half, 0.01)
        mask = grid_feasible(mn, mb, pts, d_min)
        if np.any(mask):
            obj = grid_objective(bn, bb, pts[mask])
            probe = float(np.min(obj))
            break
    if probe is None:
        return None
    if lam_min > 1e-9:
        half = math.sqrt(max(probe - obj_g, 0.0) / lam_min) + 0.05
    else:
        half = 4.0

    step = resolution
    pts = _box_grid(tg[0], tg[1], half, step)
    mask = grid_feasible(mn, mb, pts, d_min)
    pts = pts[mask]
    obj = grid_objective(bn, bb, pts)
    k = int(np.argmin(obj))
    best_obj, best_pt = float(obj[k]), pts[k]
    coarse_obj = best_obj

    if refine:
        # Shrinking ladder of finer grids. A stage re-centers and repeats
        # at the same resolution while it keeps improving, so the argmin
        # can slide arbitrarily far along a flat guard-boundary valley
        # before the grid tightens.
        fine = step / 5.0
        for _ in range(5):
            for _ in range(50):
                pts = _box_grid(best_pt[0], best_pt[1], 100.0 * fine, fine)
                mask = grid_feasible(mn, mb, pts, d_min)
                if not np.any(mask):
                    break
                pts = pts[mask]
                obj = grid_objective(bn, bb, pts)
                k = int(np.argmin(obj))
                if float(obj[k]) < best_obj:
                    best_obj, best_pt = float(obj[k]), pts[k]
                else:
                    break
            fine /= 10.0
    return coarse_obj, best_pt, best_obj


def scalar_loglik(theta_xy, obs: ObservationSet, mu: float, sigma: float) -> float:
    """Pure-python likelihood evaluation (math.erfc), link by link."""
    tx, ty = theta_xy
    total = 0.0
    for link in obs.blocked + obs.nonblocked:
        nx, ny = link.n
        d = abs(nx * tx + ny * ty - link.beta)
        q = 0.5 * math.erfc((d - mu) / (sigma * math.sqrt(2.0)))
        p = q if link.kind is LinkKind.BLOCKED else 1.0 - q
        total += max(math.log(p), -745.0) if p > 0.0 else -745.0
    return total


def exhaustive_argmax(obs: ObservationSet, mu, sigma, xs, ys) -> Tuple[float, float, float]:
    """Scan every grid point with the scalar evaluator; first strict max wins."""
    best = (-math.inf, math.nan, math.nan)
    for x in xs:
        for y in ys:
            ll = scalar_loglik((x, y), obs, mu, sigma)
            if ll > best[0]:
                best = (ll, x, y)
    return best[1], best[2], best[0]


def quad_truncated_mean(mu: float, sigma: float, lo: float, hi: float, dps: int = 60) -> float:
    """Truncated normal mean by high-precision quadrature (mpmath)."""
    import mpmath as mp

    with mp.workdps(dps):
        mmu, msig = mp.mpf(mu), mp.mpf(sigma)
        a = mp.mpf(lo) if lo != -math.inf else mp.ninf
        b = mp.mpf(hi) if hi != math.inf else mp.inf

        def pdf(t):
            return mp.exp(-((t - mmu) ** 2) / (2 * msig**2))

        mass = mp.quad(pdf, [a, b])
        first = mp.quad(lambda t: t * pdf(t), [a, b])
        return float(first / mass)
