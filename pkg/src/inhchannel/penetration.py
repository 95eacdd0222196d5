"""Material penetration loss per centimeter of thickness.

Loss rates are tabulated at a few measured frequencies and interpolated
linearly in log-frequency between them; outside the measured span the nearest
entry is used.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .pathloss import Frequency

_GHZ = 1e9


class Material(str, Enum):
    CLEAR_GLASS = "clear_glass"
    MESH_GLASS = "mesh_glass"
    TINTED_GLASS = "tinted_glass"
    WHITEBOARD = "whiteboard"
    WALL = "wall"


@dataclass(frozen=True)
class MaterialLossTable:
    """``material -> ((f_hz, db_per_cm), ...)`` sorted by frequency."""

    entries: Mapping[Material, tuple[tuple[float, float], ...]]
    interpolation: str = "log"
    notes: Mapping[str, str] | None = None

    def __post_init__(self):
        if self.interpolation not in ("log", "linear"):
            raise ConfigurationError(f"interpolation must be 'log' or 'linear', got {self.interpolation!r}")
        for material, rows in self.entries.items():
            freqs = [f for f, _ in rows]
            if freqs != sorted(freqs) or len(set(freqs)) != len(freqs):
                raise ConfigurationError(f"{material.value}: entries must be sorted by strictly increasing frequency")
            if any(not f > 0 for f in freqs):
                raise ConfigurationError(f"{material.value}: frequencies must be positive")
            if any(not rate >= 0 for _, rate in rows):
                raise ConfigurationError(f"{material.value}: loss rates must be non-negative")

    def loss_rate(self, material: Material | str, f) -> float:
        """Loss rate in dB/cm at frequency ``f`` (hertz or :class:`Frequency`)."""
        material = Material(material)
        rows = self.entries.get(material, ())
        if not rows:
            raise ConfigurationError(
                f"no loss data for {material.value}; supply it in a material table"
            )
        hz = f.hz if isinstance(f, Frequency) else float(f)
        if not hz > 0:
            raise DomainError(f"frequency must be positive, got {hz!r} Hz")
        xs = np.array([r[0] for r in rows])
        ys = np.array([r[1] for r in rows])
        if self.interpolation == "log":
            return float(np.interp(np.log(hz), np.log(xs), ys))
        return float(np.interp(hz, xs, ys))

    def penetration_loss(self, material: Material | str, thickness_cm: float, f) -> float:
        """Loss through ``thickness_cm`` of ``material``, dB."""
        if not thickness_cm >= 0:
            raise DomainError(f"thickness must be non-negative, got {thickness_cm!r} cm")
        return self.loss_rate(material, f) * thickness_cm

    def to_dict(self) -> dict:
        doc = {
            "interpolation": self.interpolation,
            "materials": {
                m.value: [[f / _GHZ, rate] for f, rate in self.entries.get(m, ())] for m in Material
            },
        }
        if self.notes:
            doc["notes"] = dict(self.notes)
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MaterialLossTable":
        if "materials" not in doc or not isinstance(doc["materials"], Mapping):
            raise ConfigurationError("material table needs a 'materials' object")
        entries = {}
        for name, rows in doc["materials"].items():
            try:
                material = Material(name)
            except ValueError:
                raise ConfigurationError(f"unknown material {name!r}") from None
            entries[material] = tuple(_parse_row(name, i, r) for i, r in enumerate(rows))
        return cls(entries, doc.get("interpolation", "log"), doc.get("notes"))

    @classmethod
    def loads(cls, text: str) -> "MaterialLossTable":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"material table is not valid JSON: {exc}") from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "MaterialLossTable":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _parse_row(name: str, i: int, row: Sequence) -> tuple[float, float]:
    if len(row) != 2:
        raise ConfigurationError(f"{name}[{i}]: expected [f_ghz, db_per_cm]")
    return float(row[0]) * _GHZ, float(row[1])


def default_material_text() -> str:
    return resources.files("inhchannel").joinpath("data", "materials.json").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def default_materials() -> MaterialLossTable:
    return MaterialLossTable.loads(default_material_text())


def loss_rate(material: Material | str, f, table: MaterialLossTable | None = None) -> float:
    return (table or default_materials()).loss_rate(material, f)


def penetration_loss(material: Material | str, thickness_cm: float, f, table: MaterialLossTable | None = None) -> float:
    return (table or default_materials()).penetration_loss(material, thickness_cm, f)
