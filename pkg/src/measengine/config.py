"""Scenario files: JSON definitions of a thermal system and a measurement.

Matrices are row-major nested lists whose entries are ``[re, im]`` pairs.
Basis vectors are listed one per row in the same format.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import DomainError
from .linalg import HermitianOperator, random_unitary
from .measurement import ProjectiveBasis
from .states import DensityMatrix, HeatBath, gibbs_state


class ConfigError(ValueError):
    """The scenario file cannot be parsed into a configuration."""


class ValidationError(ValueError):
    """The configuration parses but describes an invalid scenario."""


MODES = ("nonselective", "selective")
GAUGES = ("match_energy", "raw", "ground_zero")
BASIS_KINDS = ("z", "x", "angle", "random", "vectors")
ROTATIONS = ("none", "random")


@dataclass
class HamiltonianSpec:
    energies: Optional[list[float]] = None
    rotation: str = "none"
    matrix: Optional[list] = None


@dataclass
class BasisSpec:
    kind: str = "z"
    theta: Optional[float] = None
    vectors: Optional[list] = None


@dataclass
class ScenarioConfig:
    name: str
    dim: int
    temperature: float
    hamiltonian: HamiltonianSpec
    basis: BasisSpec = field(default_factory=BasisSpec)
    mode: str = "nonselective"
    gauge: str = "match_energy"
    oracle_steps: Optional[int] = None
    permutation: bool = False
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hamiltonian"] = {k: v for k, v in d["hamiltonian"].items() if v is not None}
        d["basis"] = {k: v for k, v in d["basis"].items() if v is not None}
        if d["oracle_steps"] is None:
            del d["oracle_steps"]
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


_TOP_FIELDS = {
    "name": str, "dim": int, "temperature": (int, float), "hamiltonian": dict,
    "basis": dict, "mode": str, "gauge": str, "oracle_steps": (int, type(None)),
    "permutation": bool, "seed": int,
}
_REQUIRED = ("name", "dim", "temperature", "hamiltonian")


def _typed(obj: dict, key: str, types, where: str):
    val = obj[key]
    # bool is an int subclass; don't accept it for numeric fields
    if isinstance(val, bool) and types is not bool:
        raise ConfigError(f"{where}{key}: expected {types}, got bool")
    if not isinstance(val, types):
        raise ConfigError(f"{where}{key}: expected {types}, got {type(val).__name__}")
    return val


def from_dict(raw: Any) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    unknown = set(raw) - set(_TOP_FIELDS)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required field: {key}")
    vals = {k: _typed(raw, k, t, "") for k, t in _TOP_FIELDS.items() if k in raw}

    ham = vals.pop("hamiltonian")
    bad = set(ham) - {"energies", "rotation", "matrix"}
    if bad:
        raise ConfigError(f"hamiltonian: unknown field(s): {', '.join(sorted(bad))}")
    if "energies" in ham:
        _typed(ham, "energies", list, "hamiltonian.")
    if "rotation" in ham:
        _typed(ham, "rotation", str, "hamiltonian.")
    if "matrix" in ham:
        _typed(ham, "matrix", list, "hamiltonian.")
    basis = vals.pop("basis", {})
    bad = set(basis) - {"kind", "theta", "vectors"}
    if bad:
        raise ConfigError(f"basis: unknown field(s): {', '.join(sorted(bad))}")
    if "kind" in basis:
        _typed(basis, "kind", str, "basis.")
    if "theta" in basis:
        _typed(basis, "theta", (int, float), "basis.")
    if "vectors" in basis:
        _typed(basis, "vectors", list, "basis.")
    if "temperature" in vals:
        vals["temperature"] = float(vals["temperature"])
    return ScenarioConfig(hamiltonian=HamiltonianSpec(**ham), basis=BasisSpec(**basis), **vals)


def loads(text: str) -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return from_dict(raw)


def bundled_names() -> list[str]:
    root = resources.files("measengine") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_text(name: str) -> str:
    return (resources.files("measengine") / "scenarios" / f"{name}.json").read_text()


def load(path_or_name: str) -> ScenarioConfig:
    """Load a scenario file, or a bundled scenario by name."""
    p = Path(path_or_name)
    if p.is_file():
        text = p.read_text()
    elif path_or_name in bundled_names():
        text = bundled_text(path_or_name)
    else:
        raise ConfigError(f"no such scenario file or bundled scenario: {path_or_name}")
    return loads(text)


def _complex_matrix(rows, what: str) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: entries must be [re, im] number pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError(f"{what}: expected rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def complex_to_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    h: HermitianOperator
    bath: HeatBath
    basis: ProjectiveBasis
    rho: DensityMatrix


def build(cfg: ScenarioConfig, temperature: Optional[float] = None,
          theta: Optional[float] = None) -> Scenario:
    """Turn a configuration into operators; all randomness comes from ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    d = cfg.dim
    if d < 1:
        raise ValidationError(f"dim must be positive, got {d}")
    if cfg.mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.gauge not in GAUGES:
        raise ValidationError(f"gauge must be one of {GAUGES}, got {cfg.gauge!r}")
    if cfg.oracle_steps is not None and cfg.oracle_steps < 1:
        raise ValidationError(f"oracle_steps must be positive, got {cfg.oracle_steps}")

    t = cfg.temperature if temperature is None else temperature
    try:
        bath = HeatBath(t)
    except DomainError as exc:
        raise ValidationError(f"temperature: {exc}") from exc

    hs = cfg.hamiltonian
    if (hs.energies is None) == (hs.matrix is None):
        raise ValidationError("hamiltonian needs exactly one of 'energies' or 'matrix'")
    if hs.rotation not in ROTATIONS:
        raise ValidationError(f"hamiltonian.rotation must be one of {ROTATIONS}")
    if hs.energies is not None:
        if len(hs.energies) != d:
            raise ValidationError(f"hamiltonian.energies has {len(hs.energies)} entries, dim is {d}")
        m = np.diag(np.asarray(hs.energies, dtype=float)).astype(complex)
    else:
        m = _complex_matrix(hs.matrix, "hamiltonian.matrix")
        if m.shape != (d, d):
            raise ValidationError(f"hamiltonian.matrix is {m.shape}, dim is {d}")
    if hs.rotation == "random":
        u = random_unitary(d, rng)
        m = u @ m @ u.conj().T
    try:
        h = HermitianOperator(m)
    except DomainError as exc:
        raise ValidationError(f"hamiltonian: {exc}") from exc

    basis = _build_basis(cfg.basis, d, rng, theta)
    return Scenario(cfg, h, bath, basis, gibbs_state(h, bath))


def _build_basis(bs: BasisSpec, d: int, rng, theta: Optional[float]) -> ProjectiveBasis:
    kind = "angle" if theta is not None else bs.kind
    if kind not in BASIS_KINDS:
        raise ValidationError(f"basis.kind must be one of {BASIS_KINDS}, got {kind!r}")
    try:
        if kind == "z":
            return ProjectiveBasis.z(d)
        if kind == "x":
            return ProjectiveBasis.x(d)
        if kind == "random":
            return ProjectiveBasis.random(d, rng)
        if kind == "angle":
            if d != 2:
                raise ValidationError("angle bases are defined for qubits only")
            th = bs.theta if theta is None else theta
            if th is None or not math.isfinite(th):
                raise ValidationError("basis.theta is required for kind 'angle'")
            return ProjectiveBasis.angle(th)
        if bs.vectors is None:
            raise ValidationError("basis.vectors is required for kind 'vectors'")
        vecs = _complex_matrix(bs.vectors, "basis.vectors")
        if vecs.shape != (d, d):
            raise ValidationError(f"basis.vectors is {vecs.shape}, expected {d} vectors of length {d}")
        return ProjectiveBasis(vecs)
    except DomainError as exc:
        raise ValidationError(f"basis: {exc}") from exc
