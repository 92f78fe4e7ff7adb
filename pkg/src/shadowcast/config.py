"""Scenario configuration: TOML/JSON loading and validation."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .geometry import Point2
from .harness import SWEEP_VARIABLES, ScenarioConfig
from .scene import Cylinder, RadiusPrior, Room

# Transmitter/receiver hardware rows carried for provenance; the
# indicators are assumed error-free, so these never enter the math.
DEFAULT_CHANNEL = {
    "lambertian_mode": 1,
    "led_power_mw": 10.0,
    "pd_area_mm2": 1.0,
    "fov_half_angle_deg": 70.0,
}


def _fail(field: str, message: str):
    raise ConfigError(f"{field}: {message}")


def _get(section: Dict[str, Any], field: str, kind, default, path: str):
    value = section.get(field, default)
    if value is None:
        return None
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(f"{path}.{field}", f"expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            _fail(f"{path}.{field}", f"expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            _fail(f"{path}.{field}", f"expected a string, got {value!r}")
        return value
    if not isinstance(value, kind):
        _fail(f"{path}.{field}", f"expected {kind.__name__}, got {value!r}")
    return value


def load_raw(path) -> Dict[str, Any]:
    """Parse a .toml or .json scenario file into a plain dict."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        if p.suffix == ".json":
            with p.open("rb") as fh:
                data = json.load(fh)
        else:
            with p.open("rb") as fh:
                data = tomllib.load(fh)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a table/object")
    return data


def build_config(raw: Dict[str, Any]) -> ScenarioConfig:
    """Validate a raw config dict and build the scenario.

    Raises ConfigError naming the offending field on any out-of-range or
    ill-typed value.
    """
    room_sec = raw.get("room", {})
    width = _get(room_sec, "width", float, 5.0, "room")
    depth = _get(room_sec, "depth", float, 5.0, "room")
    height = _get(room_sec, "height", float, 3.0, "room")
    for name, v in (("width", width), ("depth", depth), ("height", height)):
        if not (isinstance(v, float) and v > 0):
            _fail(f"room.{name}", f"must be a positive number, got {v!r}")
    room = Room(width, depth, height)

    grid_sec = raw.get("pd_grid", {})
    grid_l = _get(grid_sec, "L", int, 5, "pd_grid")
    if grid_l < 1:
        _fail("pd_grid.L", f"must be >= 1, got {grid_l}")

    ue_sec = raw.get("ue", {})
    num_ue = _get(ue_sec, "count", int, 10, "ue")
    if num_ue < 1:
        _fail("ue.count", f"must be >= 1, got {num_ue}")
    ue_dmin = _get(ue_sec, "d_min", float, 0.5, "ue")
    if not (isinstance(ue_dmin, float) and 0 <= ue_dmin):
        _fail("ue.d_min", f"must be >= 0, got {ue_dmin!r}")
    if ue_dmin >= room.diagonal:
        _fail("ue.d_min", f"must be below the room diagonal {room.diagonal:.3f}, got {ue_dmin}")
    ue_height = _get(ue_sec, "height", float, 0.85, "ue")
    if not (isinstance(ue_height, float) and 0 < ue_height < room.height):
        _fail("ue.height", f"must lie strictly between 0 and the room height, got {ue_height!r}")

    prior_sec = raw.get("prior", {})
    mu_r = _get(prior_sec, "mu_r", float, 0.13, "prior")
    sigma_r = _get(prior_sec, "sigma_r", float, 0.03, "prior")
    if not (isinstance(mu_r, float) and mu_r > 0):
        _fail("prior.mu_r", f"must be > 0, got {mu_r!r}")
    if not (isinstance(sigma_r, float) and sigma_r > 0):
        _fail("prior.sigma_r", f"must be > 0, got {sigma_r!r}")
    prior = RadiusPrior(mu_r, sigma_r)

    obj_sec = raw.get("object", {})
    mode = _get(obj_sec, "mode", str, "random", "object")
    true_object: Optional[Cylinder] = None
    if mode == "fixed":
        ox = _get(obj_sec, "x", float, None, "object")
        oy = _get(obj_sec, "y", float, None, "object")
        orad = _get(obj_sec, "radius", float, None, "object")
        if ox is None or oy is None or orad is None:
            _fail("object", "fixed mode needs x, y, and radius")
        if not orad > 0:
            _fail("object.radius", f"must be > 0, got {orad}")
        center = Point2(ox, oy)
        if not room.contains_floor(center):
            _fail("object", f"center ({ox}, {oy}) lies outside the room footprint")
        true_object = Cylinder(center, orad)
    elif mode != "random":
        _fail("object.mode", f"must be 'fixed' or 'random', got {mode!r}")

    estimator = _get(raw, "estimator", str, "mmse", "")
    if estimator not in ("ml", "mmse"):
        _fail("estimator", f"must be 'ml' or 'mmse', got {estimator!r}")
    distance_mode = _get(raw, "distance_mode", str, "line", "")
    if distance_mode not in ("line", "segment"):
        _fail("distance_mode", f"must be 'line' or 'segment', got {distance_mode!r}")

    trials = _get(raw, "trials", int, 1000, "")
    if trials < 1:
        _fail("trials", f"must be >= 1, got {trials}")
    seed = _get(raw, "seed", int, 0, "")
    if seed < 0:
        _fail("seed", f"must be >= 0, got {seed}")
    alpha0 = _get(raw, "alpha0", float, 3.0, "")
    if not (isinstance(alpha0, float) and alpha0 >= 0):
        _fail("alpha0", f"must be >= 0, got {alpha0!r}")

    ml_sec = raw.get("ml", {})
    ml_resolution = _get(ml_sec, "resolution", float, 0.01, "ml")
    if not (isinstance(ml_resolution, float) and ml_resolution > 0):
        _fail("ml.resolution", f"must be > 0, got {ml_resolution!r}")

    mmse_sec = raw.get("mmse", {})
    nb_filter = _get(mmse_sec, "nb_segment_filter", bool, True, "mmse")

    return ScenarioConfig(
        room=room,
        grid_l=grid_l,
        num_ue=num_ue,
        ue_dmin=ue_dmin,
        ue_height=ue_height,
        prior=prior,
        true_object=true_object,
        estimator=estimator,
        trials=trials,
        seed=seed,
        distance_mode=distance_mode,
        alpha0=alpha0,
        ml_resolution=ml_resolution,
        nb_segment_filter=nb_filter,
    )


def sweep_spec(raw: Dict[str, Any]) -> Optional[Tuple[str, list]]:
    """Extract the sweep section (variable, values) if present."""
    section = raw.get("sweep")
    if section is None:
        return None
    var = _get(section, "variable", str, None, "sweep")
    values = section.get("values")
    if var is None or values is None:
        _fail("sweep", "needs both 'variable' and 'values'")
    if var not in SWEEP_VARIABLES:
        _fail("sweep.variable", f"must be one of {list(SWEEP_VARIABLES)}, got {var!r}")
    if not isinstance(values, list) or not values:
        _fail("sweep.values", f"must be a non-empty list, got {values!r}")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            _fail("sweep.values", f"entries must be finite numbers, got {v!r}")
        if v <= 0:
            _fail("sweep.values", f"entries must be positive, got {v!r}")
    return var, list(values)


def config_snapshot(cfg: ScenarioConfig, raw: Dict[str, Any]) -> Dict[str, Any]:
    """Fully resolved config as a plain dict (JSON- and rerun-friendly)."""
    snap: Dict[str, Any] = {
        "seed": cfg.seed,
        "trials": cfg.trials,
        "estimator": cfg.estimator,
        "distance_mode": cfg.distance_mode,
        "alpha0": cfg.alpha0,
        "room": {"width": cfg.room.width, "depth": cfg.room.depth, "height": cfg.room.height},
        "pd_grid": {"L": cfg.grid_l},
        "ue": {"count": cfg.num_ue, "d_min": cfg.ue_dmin, "height": cfg.ue_height},
        "prior": {"mu_r": cfg.prior.mu_r, "sigma_r": cfg.prior.sigma_r},
        "ml": {"resolution": cfg.ml_resolution},
        "mmse": {"nb_segment_filter": cfg.nb_segment_filter},
        "channel": {**DEFAULT_CHANNEL, **raw.get("channel", {})},
    }
    if cfg.true_object is not None:
        snap["object"] = {
            "mode": "fixed",
            "x": cfg.true_object.center.x,
            "y": cfg.true_object.center.y,
            "radius": cfg.true_object.radius,
        }
    else:
        snap["object"] = {"mode": "random"}
    spec = sweep_spec(raw)
    if spec is not None:
        snap["sweep"] = {"variable": spec[0], "values": spec[1]}
    return snap
