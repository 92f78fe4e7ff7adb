"""2-D primitives for ceiling links projected onto the floor plane.

Each link is carried in two views: the infinite line in normal form
(n . p = beta with |n| = 1) that the estimators work with, and the
physical segment between the transmitter and receiver floor projections
that decides whether an object actually shadows the link.

Sign convention: normals are chosen so that beta >= 0; when beta == 0
the normal is made lexicographically positive. This keeps line
representations unique and test output deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateLink

UNIT_NORM_TOL = 1e-12
ON_LINE_TOL = 1e-9
PARALLEL_TOL = 1e-10


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y}, {self.z})")

    def floor(self) -> Point2:
        """Projection onto the floor plane (drop z)."""
        return Point2(self.x, self.y)


class LinkKind(Enum):
    BLOCKED = "blocked"
    NONBLOCKED = "nonblocked"


PointLike = Union[Point2, Sequence[float], np.ndarray]
NormalForm = Union["LinkLine", Tuple[Tuple[float, float], float]]


def _xy(p: PointLike) -> Tuple[float, float]:
    if isinstance(p, Point2):
        return p.x, p.y
    x, y = p
    return float(x), float(y)


@dataclass(frozen=True)
class LinkLine:
    """A link's floor-plane line in normal form plus its segment endpoints.

    n . p = beta holds for every point p on the infinite line; a and b are
    the transmitter and receiver floor projections.
    """

    n: Tuple[float, float]
    beta: float
    a: Point2
    b: Point2
    kind: LinkKind = LinkKind.NONBLOCKED

    def __post_init__(self) -> None:
        nx, ny = self.n
        if abs(math.hypot(nx, ny) - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"normal must be unit length, |n| = {math.hypot(nx, ny)!r}")
        for name, p in (("a", self.a), ("b", self.b)):
            off = nx * p.x + ny * p.y - self.beta
            if abs(off) > ON_LINE_TOL:
                raise ValueError(f"endpoint {name} not on the line (offset {off:g})")

    @property
    def blocked(self) -> bool:
        return self.kind is LinkKind.BLOCKED


def _normal_form(line: NormalForm) -> Tuple[float, float, float]:
    if isinstance(line, LinkLine):
        return line.n[0], line.n[1], line.beta
    (nx, ny), beta = line
    return float(nx), float(ny), float(beta)


def line_offset(line: NormalForm, theta: PointLike) -> float:
    """Signed offset n . theta - beta of a point from the infinite line."""
    nx, ny, beta = _normal_form(line)
    tx, ty = _xy(theta)
    return nx * tx + ny * ty - beta


def project_link(ue: Point3, pd: Point3, kind: LinkKind = LinkKind.NONBLOCKED) -> LinkLine:
    """Floor-plane normal form of the line through the UE and PD projections.

    Raises DegenerateLink when the UE sits exactly under the PD, since the
    floor projection then has no direction.
    """
    ax, ay = ue.x, ue.y
    bx, by = pd.x, pd.y
    dx, dy = bx - ax, by - ay
    length = math.hypot(dx, dy)
    if length < 1e-12:
        raise DegenerateLink(f"UE and PD share the floor projection ({ax}, {ay})")
    tx, ty = dx / length, dy / length
    nx, ny = -ty + 0.0, tx + 0.0  # +0.0 normalizes -0.0
    beta = nx * ax + ny * ay
    if beta < 0 or (beta == 0 and (nx < 0 or (nx == 0 and ny < 0))):
        nx, ny, beta = -nx + 0.0, -ny + 0.0, -beta
    if beta == 0:
        beta = 0.0  # normalize -0.0
    return LinkLine(n=(nx, ny), beta=beta, a=Point2(ax, ay), b=Point2(bx, by), kind=kind)


def distance_vector(line: NormalForm, theta: PointLike) -> np.ndarray:
    """Vector from the infinite line to theta: (n . theta - beta) n."""
    nx, ny, _ = _normal_form(line)
    s = line_offset(line, theta)
    return np.array([s * nx, s * ny])


def projection_param(line: LinkLine, theta: PointLike) -> float:
    """Unclamped parameter t of theta projected onto the segment a-b.

    t = 0 at a, t = 1 at b; values outside [0, 1] mean the foot of the
    perpendicular falls beyond an endpoint.
    """
    tx, ty = _xy(theta)
    ax, ay = line.a.x, line.a.y
    vx, vy = line.b.x - ax, line.b.y - ay
    return ((tx - ax) * vx + (ty - ay) * vy) / (vx * vx + vy * vy)


def segment_distance(line: LinkLine, theta: PointLike) -> Tuple[float, float]:
    """Euclidean distance from theta to the segment a-b.

    Returns (distance, t) where t is the projection parameter clamped
    to [0, 1].
    """
    tx, ty = _xy(theta)
    ax, ay = line.a.x, line.a.y
    vx, vy = line.b.x - ax, line.b.y - ay
    t = ((tx - ax) * vx + (ty - ay) * vy) / (vx * vx + vy * vy)
    t = min(1.0, max(0.0, t))
    cx, cy = ax + t * vx, ay + t * vy
    return math.hypot(tx - cx, ty - cy), t


def intersect_lines(line1: NormalForm, line2: NormalForm) -> Optional[Point2]:
    """Intersection of two normal-form lines, or None when near parallel.

    Accepts LinkLine objects or raw ((nx, ny), beta) pairs, so shifted
    guard-band boundaries can be intersected directly.
    """
    n1x, n1y, b1 = _normal_form(line1)
    n2x, n2y, b2 = _normal_form(line2)
    cross = n1x * n2y - n1y * n2x
    if abs(cross) < PARALLEL_TOL:
        return None
    x = (b1 * n2y - b2 * n1y) / cross
    y = (n1x * b2 - n2x * b1) / cross
    return Point2(x, y)
