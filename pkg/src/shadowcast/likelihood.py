"""Per-link blockage likelihoods and grid-search center estimation.

A blocked link says the object center lies within one radius of the link,
so its factor is Q((d - mu_r) / sigma_r) with d the center-to-line
distance and Q the standard normal tail. A non-blocked link contributes
the complement. The total log likelihood is the sum of per-link factors
under the usual independence assumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import erfc

from .errors import Outage
from .geometry import LinkLine, Point2, PointLike, line_offset, segment_distance
from .scene import ObservationSet, RadiusPrior, Room

_SQRT2 = math.sqrt(2.0)

# log of the smallest positive double; factors that underflow clamp here.
LOG_FLOOR = -745.0


def q_function(x):
    """Standard normal tail probability Q(x) = P(Z > x) = erfc(x / sqrt(2)) / 2.

    Accepts scalars or arrays.
    """
    return 0.5 * erfc(x / _SQRT2)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular search grid for the center estimate."""

    bounds: Tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    resolution: float = 0.01

    def __post_init__(self) -> None:
        xmin, ymin, xmax, ymax = self.bounds
        if self.resolution <= 0:
            raise ValueError("grid resolution must be positive")
        if xmax < xmin or ymax < ymin:
            raise ValueError(f"invalid grid bounds {self.bounds}")

    @classmethod
    def from_room(cls, room: Room, resolution: float = 0.01) -> "GridSpec":
        return cls(bounds=(0.0, 0.0, room.width, room.depth), resolution=resolution)

    def xs(self) -> np.ndarray:
        xmin, _, xmax, _ = self.bounds
        n = int(math.floor((xmax - xmin) / self.resolution + 1e-9)) + 1
        return xmin + self.resolution * np.arange(n)

    def ys(self) -> np.ndarray:
        _, ymin, _, ymax = self.bounds
        n = int(math.floor((ymax - ymin) / self.resolution + 1e-9)) + 1
        return ymin + self.resolution * np.arange(n)


def _link_distance(link: LinkLine, theta: PointLike, distance_mode: str) -> float:
    if distance_mode == "segment":
        return segment_distance(link, theta)[0]
    return abs(line_offset(link, theta))


def link_log_likelihood(
    theta: PointLike, link: LinkLine, prior: RadiusPrior, distance_mode: str = "line"
) -> float:
    """Log of the single-link posterior factor at a candidate center."""
    d = _link_distance(link, theta, distance_mode)
    q = q_function((d - prior.mu_r) / prior.sigma_r)
    p = q if link.blocked else 1.0 - q
    if p <= 0.0:
        return LOG_FLOOR
    return max(math.log(p), LOG_FLOOR)


def total_log_likelihood(
    theta: PointLike,
    obs: ObservationSet,
    prior: RadiusPrior,
    distance_mode: str = "line",
) -> float:
    """Sum of per-link log factors over the whole observation set."""
    total = 0.0
    for link in obs.blocked:
        total += link_log_likelihood(theta, link, prior, distance_mode)
    for link in obs.nonblocked:
        total += link_log_likelihood(theta, link, prior, distance_mode)
    return total


def _grid_scores(
    pts: np.ndarray,
    links: List[LinkLine],
    prior: RadiusPrior,
    distance_mode: str,
) -> np.ndarray:
    """Accumulated log factors for a stack of candidate points, link by link."""
    score = np.zeros(pts.shape[0])
    for link in links:
        if distance_mode == "segment":
            ax, ay = link.a.x, link.a.y
            vx, vy = link.b.x - ax, link.b.y - ay
            t = ((pts[:, 0] - ax) * vx + (pts[:, 1] - ay) * vy) / (vx * vx + vy * vy)
            np.clip(t, 0.0, 1.0, out=t)
            d = np.hypot(pts[:, 0] - (ax + t * vx), pts[:, 1] - (ay + t * vy))
        else:
            nx, ny = link.n
            d = np.abs(pts[:, 0] * nx + pts[:, 1] * ny - link.beta)
        q = 0.5 * erfc((d - prior.mu_r) / (prior.sigma_r * _SQRT2))
        p = q if link.blocked else 1.0 - q
        with np.errstate(divide="ignore"):
            lp = np.log(p)
        score += np.maximum(lp, LOG_FLOOR)
    return score


def ml_grid_search(
    obs: ObservationSet,
    prior: RadiusPrior,
    grid: GridSpec,
    distance_mode: str = "line",
) -> Tuple[Point2, float]:
    """Exhaustive maximum-likelihood search for the center over the grid.

    Returns the best grid point and its total log likelihood; exact ties go
    to the smallest (x, y) in lexicographic order. Raises Outage when there
    are no blocked links, since the likelihood then has no informative peak.
    """
    if not obs.blocked:
        raise Outage("maximum likelihood search needs at least one blocked link")
    xs = grid.xs()
    ys = grid.ys()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    score = _grid_scores(pts, obs.blocked, prior, distance_mode)
    score += _grid_scores(pts, obs.nonblocked, prior, distance_mode)
    idx = int(np.argmax(score))  # first occurrence = lexicographic smallest
    theta = Point2(float(xs[idx // len(ys)]), float(ys[idx % len(ys)]))
    return theta, float(score[idx])
