"""Built-in parameter table for the office and shopping-mall path loss models.

The table lives in ``data/pathloss_params.json``. Each environment holds a
``los`` and an ``nlos`` row; a row maps a model key to a parameter object, or
to ``null`` where no model is given (ABG has no LOS entry).

Model keys:

``ci``
    single-slope CI (LOS rows)
``cif``
    single-slope CIF (NLOS rows)
``abg``
    single-slope ABG
``dual_cif`` / ``dual_abg``
    two-segment variants
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ConfigurationError, DomainError
from .pathloss import (
    AbgParams,
    CifParams,
    CiParams,
    DualAbgParams,
    DualCifParams,
    Environment,
    LinkState,
    ModelParams,
    Scenario,
)

REGISTRY_ENV_VAR = "INHCHANNEL_REGISTRY"
DEFAULT_RESOURCE = "pathloss_params.json"

FAMILIES = ("ci", "cif", "abg")
SLOPES = ("single", "dual")

_GHZ = 1e9

# JSON field order per parameter class; also fixes the serialized layout.
_FIELDS = {
    "ci": (CiParams, ("n", "sigma_sf_db")),
    "cif": (CifParams, ("n", "b", "f0_ghz", "sigma_sf_db")),
    "abg": (AbgParams, ("alpha", "beta", "gamma", "sigma_sf_db")),
    "dual_cif": (DualCifParams, ("n1", "b1", "f0_ghz", "n2", "b2", "d_bp_m", "sigma_sf_db")),
    "dual_abg": (DualAbgParams, ("alpha1", "beta1", "gamma", "d_bp_m", "alpha2", "sigma_sf_db")),
}
_KEY_OF = {cls: key for key, (cls, _) in _FIELDS.items()}
_ATTR = {"f0_ghz": "f0_hz", "d_bp_m": "d_bp", "sigma_sf_db": "sigma_sf"}


def params_to_dict(p: ModelParams) -> dict:
    _, fields = _FIELDS[_KEY_OF[type(p)]]
    out = {}
    for name in fields:
        value = getattr(p, _ATTR.get(name, name))
        out[name] = value / _GHZ if name == "f0_ghz" else value
    return out


def params_from_dict(key: str, doc: Mapping) -> ModelParams:
    try:
        cls, fields = _FIELDS[key]
    except KeyError:
        raise ConfigurationError(f"unknown model key {key!r}") from None
    missing = [f for f in fields if f not in doc]
    if missing:
        raise ConfigurationError(f"{key}: missing field(s) {', '.join(missing)}")
    extra = sorted(set(doc) - set(fields))
    if extra:
        raise ConfigurationError(f"{key}: unknown field(s) {', '.join(extra)}")
    kwargs = {}
    for name in fields:
        value = float(doc[name])
        kwargs[_ATTR.get(name, name)] = value * _GHZ if name == "f0_ghz" else value
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise ConfigurationError(f"{key}: {exc}") from exc


def model_key(state: LinkState, family: str, slope: str) -> str:
    """Table key for a (state, family, slope) request.

    ``ci`` and ``cif`` both address the CI/CIF column: LOS rows carry a CI
    entry, NLOS rows a CIF entry.
    """
    family, slope = family.lower(), slope.lower()
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    if slope not in SLOPES:
        raise ConfigurationError(f"unknown slope {slope!r}; expected one of {SLOPES}")
    if family == "abg":
        return "abg" if slope == "single" else "dual_abg"
    if slope == "dual":
        return "dual_cif"
    return "ci" if LinkState(state) is LinkState.LOS else "cif"


@dataclass(frozen=True)
class Registry:
    """Immutable mapping ``(environment, state, model key) -> params or None``."""

    table: Mapping[Environment, Mapping[LinkState, Mapping[str, ModelParams | None]]]

    def lookup(self, scenario: Scenario, family: str, slope: str = "single") -> ModelParams | None:
        """Parameters for the scenario, or ``None`` where the table has no entry."""
        key = model_key(scenario.state, family, slope)
        row = self.table.get(scenario.environment, {}).get(scenario.state, {})
        return row.get(key)

    def require(self, scenario: Scenario, family: str, slope: str = "single") -> ModelParams:
        p = self.lookup(scenario, family, slope)
        if p is None:
            raise ConfigurationError(
                f"no {slope}-slope {family.upper()} parameters for "
                f"{scenario.environment.value} {scenario.state.value.upper()} "
                "(listed as N/A in the parameter table)"
            )
        return p

    def to_dict(self) -> dict:
        return {
            env.value: {
                state.value: {
                    key: None if p is None else params_to_dict(p) for key, p in row.items()
                }
                for state, row in states.items()
            }
            for env, states in self.table.items()
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Registry":
        table = {}
        for env_name, states in doc.items():
            try:
                env = Environment(env_name)
            except ValueError:
                raise ConfigurationError(f"unknown environment {env_name!r}") from None
            table[env] = {}
            for state_name, row in states.items():
                try:
                    state = LinkState(state_name)
                except ValueError:
                    raise ConfigurationError(f"unknown link state {state_name!r}") from None
                table[env][state] = {
                    key: None if p is None else params_from_dict(key, p) for key, p in row.items()
                }
        return cls(table)

    @classmethod
    def loads(cls, text: str) -> "Registry":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"registry is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigurationError("registry document must be a JSON object")
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Registry":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def default_registry_text() -> str:
    return resources.files("inhchannel").joinpath("data", DEFAULT_RESOURCE).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def default_registry() -> Registry:
    """The built-in table."""
    return Registry.loads(default_registry_text())


def resolve_registry(path: str | os.PathLike | None = None) -> Registry:
    """Registry from ``path``, else from ``$INHCHANNEL_REGISTRY``, else built-in."""
    path = path or os.environ.get(REGISTRY_ENV_VAR)
    if path:
        try:
            return Registry.load(path)
        except OSError as exc:
            raise ConfigurationError(f"cannot read registry {path}: {exc}") from exc
    return default_registry()
