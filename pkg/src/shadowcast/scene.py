"""Room layout, photodetector grid, user placement, and the blockage oracle.

The obstacle is modeled as a full-height cylinder, so a link is blocked
exactly when its floor-projected segment passes within the cylinder radius
of the center. Blockage is decided on the physical segment, not the
infinite line; the estimators are free to use either view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from .errors import InvalidGrid, SamplingExhausted
from .geometry import LinkKind, LinkLine, Point2, Point3, project_link, segment_distance

# Paper-style 2x2 layouts put the four detectors this far from the walls.
TWO_BY_TWO_MARGIN = 1.5

# Dart throwing gives up after this many rejections per requested point.
DART_BUDGET_PER_POINT = 10_000


@dataclass(frozen=True)
class Room:
    width: float = 5.0
    depth: float = 5.0
    height: float = 3.0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.depth <= 0 or self.height <= 0:
            raise ValueError("room dimensions must be positive")

    @property
    def footprint_area(self) -> float:
        return self.width * self.depth

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.depth)

    def contains_floor(self, p: Point2) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.depth


@dataclass(frozen=True)
class Cylinder:
    center: Point2
    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"cylinder radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class RadiusPrior:
    """Gaussian model of the obstacle radius."""

    mu_r: float = 0.13
    sigma_r: float = 0.03

    def __post_init__(self) -> None:
        if self.mu_r <= 0 or self.sigma_r <= 0:
            raise ValueError("radius prior parameters must be positive")


def pd_grid_positions(L: int, room: Room) -> List[Point3]:
    """Ceiling positions of an L x L photodetector grid.

    L = 2 uses the conventional placement 1.5 m from each wall; other L are
    cell-centered with margin width/(2L) (per axis), which reduces to the
    room center for L = 1 and a 0.5 m margin for L = 5 in the default room.
    """
    if L < 1:
        raise InvalidGrid(f"grid side must be >= 1, got {L}")
    if L == 2:
        m = TWO_BY_TWO_MARGIN
        if 2 * m > room.width or 2 * m > room.depth:
            raise InvalidGrid(f"2x2 grid with {m} m wall margin does not fit the room")
        xs = [m, room.width - m]
        ys = [m, room.depth - m]
    else:
        xs = [(i + 0.5) * room.width / L for i in range(L)]
        ys = [(j + 0.5) * room.depth / L for j in range(L)]
    return [Point3(x, y, room.height) for x in xs for y in ys]


@dataclass(frozen=True)
class PdGrid:
    L: int
    positions: tuple

    @classmethod
    def from_room(cls, L: int, room: Room) -> "PdGrid":
        return cls(L=L, positions=tuple(pd_grid_positions(L, room)))

    def __post_init__(self) -> None:
        if len(self.positions) != self.L * self.L:
            raise InvalidGrid(f"expected {self.L * self.L} detectors, got {len(self.positions)}")


def poisson_disk_sample(
    room: Room, d_min: float, count: int, rng: np.random.Generator
) -> List[Point2]:
    """Place `count` points in the room footprint, pairwise at least d_min apart.

    Plain dart throwing: uniform proposals, rejected when closer than d_min
    to an accepted point. Deterministic for a fixed generator state. Raises
    SamplingExhausted when the packing bound rules the request out or the
    attempt budget (10,000 per point) runs dry.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if d_min < 0:
        raise ValueError("d_min must be non-negative")
    if count == 0:
        return []
    if count * math.pi * (d_min / 2.0) ** 2 >= room.footprint_area:
        raise SamplingExhausted(
            f"{count} points with spacing {d_min} cannot pack into "
            f"{room.width} x {room.depth} m footprint"
        )
    d2 = d_min * d_min
    accepted: List[tuple] = []
    budget = DART_BUDGET_PER_POINT * count
    for _ in range(budget):
        x = rng.uniform(0.0, room.width)
        y = rng.uniform(0.0, room.depth)
        if all((x - px) ** 2 + (y - py) ** 2 >= d2 for px, py in accepted):
            accepted.append((x, y))
            if len(accepted) == count:
                return [Point2(px, py) for px, py in accepted]
    raise SamplingExhausted(
        f"placed {len(accepted)}/{count} points with spacing {d_min} "
        f"after {budget} attempts"
    )


def blocks(obj: Cylinder, ue: Point3, pd: Point3) -> bool:
    """Whether the cylinder shadows the UE->PD link.

    True iff the floor segment passes within the radius of the center;
    exact tangency counts as blocked.
    """
    line = project_link(ue, pd)
    dist, _ = segment_distance(line, obj.center)
    return dist <= obj.radius


@dataclass
class ObservationSet:
    """Blockage indicators for every UE-PD pair, split by status."""

    blocked: List[LinkLine] = field(default_factory=list)
    nonblocked: List[LinkLine] = field(default_factory=list)

    @property
    def n_blocked(self) -> int:
        return len(self.blocked)

    @property
    def n_nonblocked(self) -> int:
        return len(self.nonblocked)

    @property
    def n_links(self) -> int:
        return len(self.blocked) + len(self.nonblocked)


def simulate_observations(
    room: Room, grid: PdGrid, ue_positions: List[Point3], obj: Cylinder
) -> ObservationSet:
    """Classify every UE-PD link as blocked or not (error-free indicators)."""
    obs = ObservationSet()
    for ue in ue_positions:
        for pd in grid.positions:
            line = project_link(ue, pd)
            dist, _ = segment_distance(line, obj.center)
            if dist <= obj.radius:
                obs.blocked.append(replace(line, kind=LinkKind.BLOCKED))
            else:
                obs.nonblocked.append(line)
    return obs
