"""Monte Carlo experiment runner: trials, sweeps, and metric aggregation.

Every trial gets its own RNG seeded by a counter-derived value, so results
are independent of execution order and worker count; aggregation walks
trials in index order, which makes sweep outputs bit-reproducible.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Point2, Point3
from .likelihood import GridSpec, ml_grid_search
from .qp import estimate_radius, mmse_estimate
from .scene import (
    Cylinder,
    ObservationSet,
    PdGrid,
    RadiusPrior,
    Room,
    poisson_disk_sample,
    simulate_observations,
)

SWEEP_VARIABLES = ("num_ue", "radius", "grid_L")

WORKERS_ENV = "SHADOWCAST_THREADS"


@dataclass(frozen=True)
class ScenarioConfig:
    room: Room = Room()
    grid_l: int = 5
    num_ue: int = 10
    ue_dmin: float = 0.5
    ue_height: float = 0.85
    prior: RadiusPrior = RadiusPrior()
    true_object: Optional[Cylinder] = None  # None: sample per trial
    true_radius: Optional[float] = None  # random center, fixed radius
    estimator: str = "mmse"
    trials: int = 1000
    seed: int = 0
    distance_mode: str = "line"
    alpha0: float = 3.0
    ml_resolution: float = 0.01
    nb_segment_filter: bool = True
    object_margin: float = 0.5
    min_radius: float = 0.01


@dataclass(frozen=True)
class TrialResult:
    seed: int
    theta_true: Point2
    r_true: float
    theta_hat: Optional[Point2]
    r_hat: Optional[float]
    outage: bool
    n_blocked: int
    n_nonblocked: int
    alpha_final: Optional[float]


@dataclass(frozen=True)
class MetricsRow:
    sweep_var: str
    sweep_value: float
    grid_l: int
    estimator: str
    trials: int
    trials_used: int
    rmse_theta: float
    rmse_theta_stderr: float
    rmse_r: float
    rmse_r_stderr: float
    outage_prob: float
    outage_stderr: float


@dataclass(frozen=True)
class SweepPoint:
    sweep_var: str
    sweep_value: float
    config: ScenarioConfig
    metrics: MetricsRow
    trials: Tuple[TrialResult, ...]


def derive_trial_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    """Counter-based per-trial seed, stable across orderings and workers."""
    ss = np.random.SeedSequence(entropy=(master_seed, point_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _sample_object(cfg: ScenarioConfig, rng: np.random.Generator) -> Cylinder:
    if cfg.true_object is not None:
        return cfg.true_object
    m = cfg.object_margin
    cx = rng.uniform(m, cfg.room.width - m)
    cy = rng.uniform(m, cfg.room.depth - m)
    if cfg.true_radius is not None:
        r = cfg.true_radius
    else:
        while True:
            r = rng.normal(cfg.prior.mu_r, cfg.prior.sigma_r)
            if r > cfg.min_radius:
                break
    return Cylinder(Point2(cx, cy), r)


def run_trial_detailed(cfg: ScenarioConfig, trial_seed: int):
    """One full draw: object, users, observations, and estimate.

    Returns (result, observations, kkt_solution); the solution is None for
    the ML estimator and on outage.
    """
    rng = np.random.default_rng(trial_seed)
    obj = _sample_object(cfg, rng)
    floor_pts = poisson_disk_sample(cfg.room, cfg.ue_dmin, cfg.num_ue, rng)
    ues = [Point3(p.x, p.y, cfg.ue_height) for p in floor_pts]
    grid = PdGrid.from_room(cfg.grid_l, cfg.room)
    obs = simulate_observations(cfg.room, grid, ues, obj)
    if obs.n_blocked == 0:
        result = TrialResult(
            seed=trial_seed,
            theta_true=obj.center,
            r_true=obj.radius,
            theta_hat=None,
            r_hat=None,
            outage=True,
            n_blocked=0,
            n_nonblocked=obs.n_nonblocked,
            alpha_final=None,
        )
        return result, obs, None
    sol = None
    if cfg.estimator == "mmse":
        sol = mmse_estimate(
            obs,
            cfg.prior,
            alpha0=cfg.alpha0,
            nb_segment_filter=cfg.nb_segment_filter,
        )
        theta_hat = sol.theta_star
        alpha_final: Optional[float] = sol.alpha_final
    elif cfg.estimator == "ml":
        grid_spec = GridSpec.from_room(cfg.room, cfg.ml_resolution)
        theta_hat, _ = ml_grid_search(obs, cfg.prior, grid_spec, cfg.distance_mode)
        alpha_final = None
    else:
        raise ValueError(f"unknown estimator {cfg.estimator!r}")
    r_hat = estimate_radius(theta_hat, obs, cfg.prior)
    result = TrialResult(
        seed=trial_seed,
        theta_true=obj.center,
        r_true=obj.radius,
        theta_hat=theta_hat,
        r_hat=r_hat,
        outage=False,
        n_blocked=obs.n_blocked,
        n_nonblocked=obs.n_nonblocked,
        alpha_final=alpha_final,
    )
    return result, obs, sol


def run_trial(cfg: ScenarioConfig, trial_seed: int) -> TrialResult:
    """One full draw: object, users, observations, and estimate."""
    return run_trial_detailed(cfg, trial_seed)[0]


def aggregate_metrics(
    trials: Sequence[TrialResult],
    sweep_var: str,
    sweep_value: float,
    cfg: ScenarioConfig,
) -> MetricsRow:
    """RMSE over non-outage trials plus outage rate, with standard errors."""
    n = len(trials)
    used = [t for t in trials if not t.outage]
    k_out = n - len(used)
    outage_prob = k_out / n
    outage_stderr = math.sqrt(outage_prob * (1.0 - outage_prob) / n)

    def _rmse(samples: List[float]) -> Tuple[float, float]:
        m = len(samples)
        if m == 0:
            return math.nan, math.nan
        mean_sq = math.fsum(samples) / m
        rmse = math.sqrt(mean_sq)
        if m < 2 or rmse == 0.0:
            return rmse, 0.0
        var = math.fsum((s - mean_sq) ** 2 for s in samples) / (m - 1)
        return rmse, math.sqrt(var / m) / (2.0 * rmse)

    sq_theta = [
        (t.theta_hat.x - t.theta_true.x) ** 2 + (t.theta_hat.y - t.theta_true.y) ** 2
        for t in used
    ]
    sq_r = [(t.r_hat - t.r_true) ** 2 for t in used]
    rmse_theta, se_theta = _rmse(sq_theta)
    rmse_r, se_r = _rmse(sq_r)
    return MetricsRow(
        sweep_var=sweep_var,
        sweep_value=float(sweep_value),
        grid_l=cfg.grid_l,
        estimator=cfg.estimator,
        trials=n,
        trials_used=len(used),
        rmse_theta=rmse_theta,
        rmse_theta_stderr=se_theta,
        rmse_r=rmse_r,
        rmse_r_stderr=se_r,
        outage_prob=outage_prob,
        outage_stderr=outage_stderr,
    )


def apply_sweep_value(cfg: ScenarioConfig, sweep_var: str, value) -> ScenarioConfig:
    if sweep_var == "num_ue":
        return replace(cfg, num_ue=int(value))
    if sweep_var == "radius":
        return replace(cfg, true_object=None, true_radius=float(value))
    if sweep_var == "grid_L":
        return replace(cfg, grid_l=int(value))
    raise ValueError(f"unknown sweep variable {sweep_var!r}; expected one of {SWEEP_VARIABLES}")


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def _trial_batch(args) -> List[TrialResult]:
    cfg, point_index, start, stop = args
    return [
        run_trial(cfg, derive_trial_seed(cfg.seed, point_index, t))
        for t in range(start, stop)
    ]


def run_sweep(
    cfg: ScenarioConfig,
    sweep_var: str,
    values: Sequence,
    workers: Optional[int] = None,
) -> List[SweepPoint]:
    """Run the full sweep, returning per-point metrics and trial records.

    Results are identical for any worker count: trial seeds depend only on
    (master seed, point index, trial index) and trials are reassembled in
    index order before aggregation.
    """
    if sweep_var not in SWEEP_VARIABLES:
        raise ValueError(
            f"unknown sweep variable {sweep_var!r}; expected one of {SWEEP_VARIABLES}"
        )
    nworkers = resolve_workers(workers)
    points: List[SweepPoint] = []
    point_cfgs = [apply_sweep_value(cfg, sweep_var, v) for v in values]

    if nworkers == 1:
        batches = {
            (i, 0): _trial_batch((pcfg, i, 0, pcfg.trials))
            for i, pcfg in enumerate(point_cfgs)
        }
    else:
        tasks = []
        for i, pcfg in enumerate(point_cfgs):
            chunk = max(1, -(-pcfg.trials // nworkers))
            for c, start in enumerate(range(0, pcfg.trials, chunk)):
                stop = min(start + chunk, pcfg.trials)
                tasks.append(((i, c), (pcfg, i, start, stop)))
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = pool.map(_trial_batch, [t[1] for t in tasks])
            batches = {key: batch for (key, _), batch in zip(tasks, results)}

    for i, (value, pcfg) in enumerate(zip(values, point_cfgs)):
        trials: List[TrialResult] = []
        for key in sorted(k for k in batches if k[0] == i):
            trials.extend(batches[key])
        metrics = aggregate_metrics(trials, sweep_var, float(value), pcfg)
        points.append(
            SweepPoint(
                sweep_var=sweep_var,
                sweep_value=float(value),
                config=pcfg,
                metrics=metrics,
                trials=tuple(trials),
            )
        )
    return points


def run_monte_carlo(
    cfg: ScenarioConfig,
    sweep_var: str,
    values: Sequence,
    workers: Optional[int] = None,
) -> List[MetricsRow]:
    """Metrics-only view of run_sweep."""
    return [point.metrics for point in run_sweep(cfg, sweep_var, values, workers)]
