"""Monte-Carlo AP/UE link drops in indoor floor plans.

A drop places UEs in a rectangular plan, resolves each AP-UE link's LOS state
(from wall blockage or from a LOS probability curve), evaluates path loss with
the registry parameters for that state, and adds shadow fading and the
penetration loss of every wall the direct path crosses.

Randomness is drawn from one independent stream per UE, derived from
``(seed, ue_index)``, so results do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import jsonschema
import numpy as np

from . import kernels
from .errors import ConfigurationError, DomainError
from .los import LosModel, p_los
from .pathloss import Environment, LinkState, ModelParams, Scenario, path_loss
from .penetration import Material, MaterialLossTable, default_materials
from .registry import FAMILIES, SLOPES, Registry, default_registry

_GHZ = 1e9
LINK_COLUMNS = ("ap_id", "ue_id", "d2_m", "d3_m", "state", "pl_db", "sf_db", "pen_db", "total_db")
CDF_COLUMNS = ("x_db", "p")


# ---------------------------------------------------------------------------
# Floor plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Wall:
    start: tuple[float, float]
    end: tuple[float, float]
    material: Material = Material.WALL
    thickness_cm: float = 15.0

    def __post_init__(self):
        object.__setattr__(self, "material", Material(self.material))
        if not self.thickness_cm > 0:
            raise DomainError(f"wall thickness must be positive, got {self.thickness_cm!r} cm")


@dataclass(frozen=True)
class FloorPlan:
    bounds: tuple[float, float, float, float]
    walls: tuple[Wall, ...] = ()

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise DomainError(f"degenerate plan bounds {self.bounds}")
        object.__setattr__(self, "walls", tuple(self.walls))
        for i, w in enumerate(self.walls):
            if not (self.contains(w.start) and self.contains(w.end)):
                raise DomainError(f"wall {i} lies outside the plan bounds")

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def depth(self) -> float:
        return self.bounds[3] - self.bounds[1]

    def contains(self, pt) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= pt[0] <= xmax and ymin <= pt[1] <= ymax

    def wall_array(self) -> np.ndarray:
        if not self.walls:
            return np.zeros((0, 4))
        return np.array([[*w.start, *w.end] for w in self.walls], dtype=np.float64)

    def wall_losses(self, f_hz: float, table: MaterialLossTable) -> np.ndarray:
        return np.array(
            [table.penetration_loss(w.material, w.thickness_cm, f_hz) for w in self.walls], dtype=np.float64
        )

    def to_dict(self) -> dict:
        return {
            "bounds": list(self.bounds),
            "walls": [
                {
                    "start": list(w.start),
                    "end": list(w.end),
                    "material": w.material.value,
                    "thickness_cm": w.thickness_cm,
                }
                for w in self.walls
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FloorPlan":
        _validate(doc, PLAN_SCHEMA, "floor plan")
        if "template" in doc:
            kwargs = {k: v for k, v in doc.items() if k != "template"}
            try:
                return TEMPLATES[doc["template"]](**kwargs)
            except TypeError as exc:
                raise ConfigurationError(f"floor plan: $.template: {exc}") from exc
        walls = [
            Wall(tuple(w["start"]), tuple(w["end"]), w.get("material", "wall"), w.get("thickness_cm", 15.0))
            for w in doc.get("walls", [])
        ]
        return cls(tuple(doc["bounds"]), tuple(walls))


def empty_plan(width: float = 120.0, depth: float = 50.0) -> FloorPlan:
    return FloorPlan((0.0, 0.0, width, depth))


def office_plan(
    width: float = 120.0,
    depth: float = 50.0,
    wall_rows: int = 2,
    door_spacing: float = 20.0,
    door_width: float = 2.0,
    material: str = "wall",
    thickness_cm: float = 15.0,
) -> FloorPlan:
    """Open-plan office hull split by ``wall_rows`` partition walls along the long axis.

    Each partition has a door gap of ``door_width`` every ``door_spacing`` meters.
    """
    walls = []
    for k in range(wall_rows):
        y = depth * (k + 1) / (wall_rows + 1)
        x = 0.0
        while x < width:
            seg_end = min(x + door_spacing - door_width, width)
            if seg_end > x:
                walls.append(Wall((x, y), (seg_end, y), material, thickness_cm))
            x += door_spacing
    return FloorPlan((0.0, 0.0, width, depth), tuple(walls))


def mall_plan(
    width: float = 120.0,
    depth: float = 50.0,
    corridor_width: float = 10.0,
    material: str = "clear_glass",
    thickness_cm: float = 1.0,
) -> FloorPlan:
    """Two crossing corridors lined with glass shop fronts; shops fill the four corners."""
    cx, cy, h = width / 2, depth / 2, corridor_width / 2
    segs = [
        ((0.0, cy - h), (cx - h, cy - h)),
        ((cx + h, cy - h), (width, cy - h)),
        ((0.0, cy + h), (cx - h, cy + h)),
        ((cx + h, cy + h), (width, cy + h)),
        ((cx - h, 0.0), (cx - h, cy - h)),
        ((cx + h, 0.0), (cx + h, cy - h)),
        ((cx - h, cy + h), (cx - h, depth)),
        ((cx + h, cy + h), (cx + h, depth)),
    ]
    return FloorPlan((0.0, 0.0, width, depth), tuple(Wall(a, b, material, thickness_cm) for a, b in segs))


TEMPLATES = {"empty": empty_plan, "office": office_plan, "mall": mall_plan}


def los_by_map(plan: FloorPlan, ap, ue) -> tuple[LinkState, list[int]]:
    """LOS iff the plan-view segment ``ap -> ue`` touches no wall.

    Returns the state and the indices of the crossed walls ordered from the AP
    towards the UE.
    """
    for name, pt in (("AP", ap), ("UE", ue)):
        if not plan.contains(pt):
            raise DomainError(f"{name} position {tuple(pt)} is outside the plan bounds")
    if not plan.walls:
        return LinkState.LOS, []
    hit, t = kernels.crossing_matrix(
        np.array([ap[:2]], dtype=float), np.array([ue[:2]], dtype=float), plan.wall_array()
    )
    idx = np.nonzero(hit[0])[0]
    order = idx[np.argsort(t[0, idx], kind="stable")]
    return (LinkState.NLOS if order.size else LinkState.LOS), [int(i) for i in order]


# ---------------------------------------------------------------------------
# Drop configuration
# ---------------------------------------------------------------------------

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["environment", "ue_count"],
    "properties": {
        "environment": {"enum": [e.value for e in Environment]},
        "ue_count": {"type": "integer", "minimum": 1},
        "ap_count": {"type": "integer", "minimum": 1},
        "ap_positions": {"type": ["array", "null"], "items": _POINT, "minItems": 1},
        "ue_positions": {"type": ["array", "null"], "items": _POINT, "minItems": 1},
        "ap_height_m": {"type": "number", "exclusiveMinimum": 0},
        "ue_height_m": {"type": "number", "exclusiveMinimum": 0},
        "frequency_ghz": {"type": "number", "exclusiveMinimum": 0},
        "pl_family": {"enum": list(FAMILIES)},
        "slope": {"enum": list(SLOPES)},
        "los_mode": {"enum": ["map", "stochastic"]},
        "los_model": {"enum": [m.value for m in LosModel]},
        "seed": {"type": "integer", "minimum": 0},
        "sigma_sf_db": {"type": ["number", "null"], "minimum": 0},
        "los_fallback_family": {"enum": [None, *FAMILIES]},
    },
}

PLAN_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "required": ["bounds"],
            "additionalProperties": False,
            "properties": {
                "bounds": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                "walls": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["start", "end"],
                        "additionalProperties": False,
                        "properties": {
                            "start": {**_POINT, "maxItems": 2},
                            "end": {**_POINT, "maxItems": 2},
                            "material": {"enum": [m.value for m in Material]},
                            "thickness_cm": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
            },
        },
        {
            "required": ["template"],
            "properties": {"template": {"enum": list(TEMPLATES)}},
        },
    ],
}


def _validate(doc, schema, what):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigurationError(f"{what}: {err.json_path}: {err.message}")


@dataclass(frozen=True)
class DropConfig:
    environment: Environment
    ue_count: int
    ap_count: int = 1
    ap_positions: tuple[tuple[float, ...], ...] | None = None
    ue_positions: tuple[tuple[float, ...], ...] | None = None
    ap_height_m: float = 3.0
    ue_height_m: float = 1.5
    frequency_ghz: float = 28.0
    pl_family: str = "ci"
    slope: str = "single"
    los_mode: str = "map"
    los_model: LosModel = LosModel.NEW_INH
    seed: int = 0
    sigma_sf_db: float | None = None
    los_fallback_family: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "environment", Environment(self.environment))
        object.__setattr__(self, "los_model", LosModel(self.los_model))
        if self.ap_positions is not None:
            object.__setattr__(self, "ap_positions", tuple(tuple(map(float, p)) for p in self.ap_positions))
            object.__setattr__(self, "ap_count", len(self.ap_positions))
        if self.ue_positions is not None:
            object.__setattr__(self, "ue_positions", tuple(tuple(map(float, p)) for p in self.ue_positions))
            if len(self.ue_positions) != self.ue_count:
                raise ConfigurationError("ue_positions must list exactly ue_count points")
        if self.ue_count < 1 or self.ap_count < 1:
            raise ConfigurationError("ue_count and ap_count must be >= 1")
        if self.los_mode not in ("map", "stochastic"):
            raise ConfigurationError(f"los_mode must be 'map' or 'stochastic', got {self.los_mode!r}")
        if self.sigma_sf_db is not None and not self.sigma_sf_db >= 0:
            raise ConfigurationError("sigma_sf_db must be >= 0")

    @property
    def frequency_hz(self) -> float:
        return self.frequency_ghz * _GHZ

    def to_dict(self) -> dict:
        return {
            "environment": self.environment.value,
            "ue_count": self.ue_count,
            "ap_count": self.ap_count,
            "ap_positions": None if self.ap_positions is None else [list(p) for p in self.ap_positions],
            "ue_positions": None if self.ue_positions is None else [list(p) for p in self.ue_positions],
            "ap_height_m": self.ap_height_m,
            "ue_height_m": self.ue_height_m,
            "frequency_ghz": self.frequency_ghz,
            "pl_family": self.pl_family,
            "slope": self.slope,
            "los_mode": self.los_mode,
            "los_model": self.los_model.value,
            "seed": self.seed,
            "sigma_sf_db": self.sigma_sf_db,
            "los_fallback_family": self.los_fallback_family,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DropConfig":
        _validate(doc, CONFIG_SCHEMA, "drop config")
        return cls(**{k: v for k, v in doc.items() if v is not None or k == "sigma_sf_db"})


def load_json(path: str | os.PathLike):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkResult:
    ap_id: int
    ue_id: int
    ap_xyz: tuple[float, float, float]
    ue_xyz: tuple[float, float, float]
    d2_m: float
    d3_m: float
    state: LinkState
    pl_db: float
    sf_db: float
    pen_db: float
    total_db: float
    clamped: bool = False


@dataclass
class DropResult:
    """Column-oriented link results, ordered by UE index then AP index.

    Iterating or indexing yields :class:`LinkResult` records.
    """

    ap_xyz: np.ndarray
    ue_xyz: np.ndarray
    ap_id: np.ndarray
    ue_id: np.ndarray
    d2_m: np.ndarray
    d3_m: np.ndarray
    los: np.ndarray
    pl_db: np.ndarray
    sf_db: np.ndarray
    pen_db: np.ndarray
    total_db: np.ndarray
    clamped: np.ndarray
    config: DropConfig | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.ap_id.size

    def __getitem__(self, i: int) -> LinkResult:
        a, u = int(self.ap_id[i]), int(self.ue_id[i])
        return LinkResult(
            a,
            u,
            tuple(map(float, self.ap_xyz[a])),
            tuple(map(float, self.ue_xyz[u])),
            float(self.d2_m[i]),
            float(self.d3_m[i]),
            LinkState.LOS if self.los[i] else LinkState.NLOS,
            float(self.pl_db[i]),
            float(self.sf_db[i]),
            float(self.pen_db[i]),
            float(self.total_db[i]),
            bool(self.clamped[i]),
        )

    def __iter__(self) -> Iterator[LinkResult]:
        return (self[i] for i in range(len(self)))

    @property
    def los_fraction(self) -> float:
        return float(np.mean(self.los))

    def summary(self) -> dict:
        return {
            "links": len(self),
            "los_fraction": self.los_fraction,
            "median_total_db": float(np.median(self.total_db)),
            "p95_total_db": float(np.percentile(self.total_db, 95)),
        }


def _grid_positions(plan: FloorPlan, count: int) -> np.ndarray:
    cols = max(1, math.ceil(math.sqrt(count * plan.width / plan.depth)))
    rows = math.ceil(count / cols)
    xs = plan.bounds[0] + (np.arange(cols) + 0.5) * plan.width / cols
    ys = plan.bounds[1] + (np.arange(rows) + 0.5) * plan.depth / rows
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])[:count]


def _points(rows, default_z) -> np.ndarray:
    out = np.empty((len(rows), 3))
    for i, r in enumerate(rows):
        out[i] = (r[0], r[1], r[2] if len(r) > 2 else default_z)
    return out


def _state_params(config: DropConfig, registry: Registry) -> dict[LinkState, ModelParams]:
    out = {}
    for state in LinkState:
        sc = Scenario(config.environment, state)
        p = registry.lookup(sc, config.pl_family, config.slope)
        if p is None and config.los_fallback_family:
            p = registry.lookup(sc, config.los_fallback_family, "single")
        if p is None:
            raise ConfigurationError(
                f"no {config.slope}-slope {config.pl_family.upper()} parameters for "
                f"{config.environment.value} {state.value.upper()} (N/A in the parameter table); "
                "set los_fallback_family to use another family for these links"
            )
        out[state] = p
    return out


def run_drop(
    config: DropConfig,
    plan: FloorPlan | None = None,
    registry: Registry | None = None,
    materials: MaterialLossTable | None = None,
) -> DropResult:
    """Generate every AP-UE link of one drop."""
    plan = plan or empty_plan()
    registry = registry or default_registry()
    materials = materials or default_materials()
    params = _state_params(config, registry)
    f_hz = config.frequency_hz

    if config.ap_positions is not None:
        ap = _points(config.ap_positions, config.ap_height_m)
    else:
        ap = np.column_stack([_grid_positions(plan, config.ap_count), np.full(config.ap_count, config.ap_height_m)])
    n_ap, n_ue = ap.shape[0], config.ue_count
    for a in range(n_ap):
        if not plan.contains(ap[a]):
            raise DomainError(f"AP {a} at {tuple(ap[a, :2])} is outside the plan bounds")

    ue = np.empty((n_ue, 3))
    u_los = np.empty((n_ue, n_ap))
    z_sf = np.empty((n_ue, n_ap))
    xmin, ymin, xmax, ymax = plan.bounds
    for u in range(n_ue):
        rng = np.random.default_rng([config.seed, u])
        if config.ue_positions is not None:
            r = config.ue_positions[u]
            ue[u] = (r[0], r[1], r[2] if len(r) > 2 else config.ue_height_m)
        else:
            x, y = rng.random(2)
            ue[u] = (xmin + x * (xmax - xmin), ymin + y * (ymax - ymin), config.ue_height_m)
        u_los[u] = rng.random(n_ap)
        z_sf[u] = rng.standard_normal(n_ap)
        if not plan.contains(ue[u]):
            raise DomainError(f"UE {u} at {tuple(ue[u, :2])} is outside the plan bounds")

    ue_id = np.repeat(np.arange(n_ue), n_ap)
    ap_id = np.tile(np.arange(n_ap), n_ue)
    delta = ue[ue_id] - ap[ap_id]
    d2 = np.hypot(delta[:, 0], delta[:, 1])
    d3 = np.sqrt(d2 * d2 + delta[:, 2] ** 2)
    clamped = d3 < 1.0
    d_eval = np.maximum(d3, 1.0)

    if config.los_mode == "map" and plan.walls:
        hit, _ = kernels.crossing_matrix(ap[ap_id, :2], ue[ue_id, :2], plan.wall_array())
        los = ~hit.any(axis=1)
        pen = hit.astype(np.float64) @ plan.wall_losses(f_hz, materials)
    elif config.los_mode == "map":
        los = np.ones(d2.size, dtype=bool)
        pen = np.zeros(d2.size)
    else:
        los = u_los.ravel() < p_los(config.los_model, d2)
        pen = np.zeros(d2.size)

    pl = np.empty(d2.size)
    sigma = np.empty(d2.size)
    for state, mask in ((LinkState.LOS, los), (LinkState.NLOS, ~los)):
        if mask.any():
            p = params[state]
            pl[mask] = path_loss(p, np.full(int(mask.sum()), f_hz), d_eval[mask])
            sigma[mask] = p.sigma_sf if config.sigma_sf_db is None else config.sigma_sf_db
    sf = z_sf.ravel() * sigma
    total = pl + sf + pen
    return DropResult(ap, ue, ap_id, ue_id, d2, d3, los, pl, sf, pen, total, clamped, config)


# ---------------------------------------------------------------------------
# CDF and output
# ---------------------------------------------------------------------------


def _field_values(results, field_name: str) -> np.ndarray:
    if field_name not in ("total_db", "pl_db", "sf_db", "pen_db"):
        raise ValueError(f"unsupported CDF field {field_name!r}")
    if isinstance(results, DropResult):
        return np.asarray(getattr(results, field_name), dtype=np.float64)
    return np.array([getattr(r, field_name) for r in results], dtype=np.float64)


def cdf(results, field_name: str = "total_db", grid: Sequence[float] | None = None):
    """Right-continuous empirical CDF of a link field evaluated on ``grid``.

    Without a grid, a 0.5 dB grid spanning the data is used. Returns
    ``(grid, probabilities)``.
    """
    values = _field_values(results, field_name)
    if values.size == 0:
        raise DomainError("CDF of an empty result set")
    if grid is None:
        lo, hi = math.floor(values.min()), math.ceil(values.max())
        grid = np.arange(lo, hi + 0.5, 0.5)
    grid = np.asarray(grid, dtype=np.float64)
    p = np.searchsorted(np.sort(values), grid, side="right") / values.size
    return grid, p


def write_links_csv(result: DropResult, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LINK_COLUMNS)
        state = np.where(result.los, "LOS", "NLOS")
        for row in zip(
            result.ap_id.tolist(),
            result.ue_id.tolist(),
            result.d2_m.tolist(),
            result.d3_m.tolist(),
            state.tolist(),
            result.pl_db.tolist(),
            result.sf_db.tolist(),
            result.pen_db.tolist(),
            result.total_db.tolist(),
        ):
            a, u, d2, d3, s, pl, sf, pen, tot = row
            w.writerow([a, u, f"{d2:.4f}", f"{d3:.4f}", s, f"{pl:.4f}", f"{sf:.4f}", f"{pen:.4f}", f"{tot:.4f}"])


def write_cdf_csv(grid, p, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CDF_COLUMNS)
        for x, q in zip(np.asarray(grid).tolist(), np.asarray(p).tolist()):
            w.writerow([f"{x:.2f}", f"{q:.6f}"])


def write_samples_csv(result: DropResult, path: str | os.PathLike) -> None:
    """Links as fitting input (``f_ghz,d_m,pl_db,env,state``), path loss incl. SF and penetration."""
    cfg = result.config
    if cfg is None:
        raise ValueError("drop result carries no configuration")
    env = cfg.environment.value
    f = f"{cfg.frequency_ghz:g}"
    d_eval = np.maximum(result.d3_m, 1.0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_ghz", "d_m", "pl_db", "env", "state"])
        for d, tot, los in zip(d_eval.tolist(), result.total_db.tolist(), result.los.tolist()):
            w.writerow([f, f"{d:.4f}", f"{tot:.4f}", env, "los" if los else "nlos"])
