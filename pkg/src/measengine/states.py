"""Density matrices, heat baths and equilibrium thermodynamics (k_B = 1, nats)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import (
    STRUCT_TOL,
    HermitianOperator,
    SpectralDecomposition,
    _frozen,
    _same_dim,
    projector,
    random_unitary,
    trace_distance,
)

NEGATIVE_EIG_TOL = 1e-10
RANK_FLOOR = 1e-12


class DensityMatrix:
    """Unit-trace positive semidefinite operator.

    Eigenvalues in ``[-1e-10, 0)`` are treated as rounding noise and clamped
    to zero (then the trace is restored); anything more negative is rejected.
    """

    __slots__ = ("op",)

    def __init__(self, matrix):
        if isinstance(matrix, DensityMatrix):
            self.op = matrix.op
            return
        op = HermitianOperator(matrix)
        tr = float(np.trace(op.matrix).real)
        if abs(tr - 1.0) > STRUCT_TOL:
            raise DomainError(f"density matrix trace is {tr!r}, expected 1")
        spec = op.spectrum
        pmin = float(spec.eigenvalues[0])
        if pmin < -NEGATIVE_EIG_TOL:
            raise DomainError(f"density matrix has negative eigenvalue {pmin:.3e}")
        if pmin < 0:
            p = np.clip(spec.eigenvalues, 0.0, None)
            p = p / p.sum()
            op = _op_from_spectrum(p, spec.eigenvectors)
        self.op = op

    @classmethod
    def _from_spectrum(cls, p: np.ndarray, v: np.ndarray) -> "DensityMatrix":
        # Trusted constructor: p ascending, nonnegative, summing to one.
        obj = cls.__new__(cls)
        obj.op = _op_from_spectrum(p, v)
        return obj

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def populations(self) -> np.ndarray:
        """Eigenvalues, ascending."""
        return self.op.spectrum.eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.op.spectrum.eigenvectors

    def is_pure(self, tol: float = STRUCT_TOL) -> bool:
        return abs(float(np.trace(self.matrix @ self.matrix).real) - 1.0) <= tol

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def _op_from_spectrum(p, v) -> HermitianOperator:
    if np.any(np.diff(p) < 0):
        raise AssertionError("cached spectrum must be ascending")
    op = HermitianOperator((v * p) @ v.conj().T, check=False)
    op._spec = SpectralDecomposition(_frozen(np.array(p, dtype=float)), _frozen(np.array(v)))
    return op


def as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def as_hermitian(h) -> HermitianOperator:
    return h if isinstance(h, HermitianOperator) else HermitianOperator(h)


@dataclass(frozen=True)
class HeatBath:
    temperature: float

    def __post_init__(self):
        t = self.temperature
        if not (isinstance(t, (int, float, np.floating)) and math.isfinite(t) and t > 0):
            raise DomainError(f"bath temperature must be positive and finite, got {t!r}")
        object.__setattr__(self, "temperature", float(t))

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature

    @classmethod
    def from_beta(cls, beta: float) -> "HeatBath":
        if not (math.isfinite(beta) and beta > 0):
            raise DomainError(f"inverse temperature must be positive and finite, got {beta!r}")
        return cls(1.0 / beta)


GaugeMode = Literal["raw", "match_energy", "ground_zero"]


@dataclass(frozen=True)
class GibbsGauge:
    """Choice of the free additive constant of a Gibbs-dual Hamiltonian.

    ``raw``          no shift.
    ``match_energy`` shift so that the dual and ``reference`` have the same
                     mean energy in ``state`` (the dualized state if omitted).
    ``ground_zero``  shift so the lowest dual level sits at zero.
    """

    mode: GaugeMode = "raw"
    reference: Optional[HermitianOperator] = None
    state: Optional[DensityMatrix] = None

    def __post_init__(self):
        if self.mode not in ("raw", "match_energy", "ground_zero"):
            raise DomainError(f"unknown gauge mode {self.mode!r}")
        if self.mode == "match_energy" and self.reference is None:
            raise DomainError("match_energy gauge needs a reference Hamiltonian")

    @classmethod
    def match_energy(cls, reference, state=None) -> "GibbsGauge":
        return cls(
            "match_energy",
            as_hermitian(reference),
            None if state is None else as_density(state),
        )


def gibbs_state(h, bath: HeatBath) -> DensityMatrix:
    """Thermal state exp(-beta H)/Z, computed with the spectrum shifted to start at 0."""
    spec = as_hermitian(h).spectrum
    lam = spec.eigenvalues
    w = np.exp(-bath.beta * (lam - lam[0]))
    # ascending energies give descending populations
    return DensityMatrix._from_spectrum((w / w.sum())[::-1], spec.eigenvectors[:, ::-1])


def gibbs_dual_hamiltonian(rho, bath: HeatBath, gauge: GibbsGauge = GibbsGauge()) -> HermitianOperator:
    """Hamiltonian for which ``rho`` is the Gibbs state at the bath temperature.

    Levels are ``T ln(1/p_i)`` on the eigenvectors of ``rho`` plus a constant
    fixed by ``gauge``.  Rank-deficient states are refused; see
    :func:`regularize_state`.
    """
    rho = as_density(rho)
    p = rho.populations
    if p[0] <= RANK_FLOOR:
        raise DomainError(
            f"state is rank deficient (smallest population {p[0]:.3e} <= {RANK_FLOOR:g}); "
            "regularize it first"
        )
    levels = -bath.temperature * np.log(p)
    if gauge.mode == "raw":
        shift = 0.0
    elif gauge.mode == "ground_zero":
        shift = -float(levels.min())
    else:
        ref = gauge.reference
        _same_dim(ref, rho)
        target = rho if gauge.state is None else gauge.state
        v = rho.eigenvectors
        raw = (v * levels) @ v.conj().T
        shift = mean_energy(target, ref) - mean_energy(target, raw)
    # descending p <-> ascending levels, so reverse to keep the cached spectrum sorted
    return _op_from_spectrum((levels + shift)[::-1], rho.eigenvectors[:, ::-1])


def regularize_state(rho, floor: float = 1e-8) -> DensityMatrix:
    """Clamp populations to at least ``floor`` and renormalize."""
    rho = as_density(rho)
    if not (0.0 < floor < 1.0 / rho.dim):
        raise DomainError(f"floor must lie in (0, 1/{rho.dim}), got {floor!r}")
    p = rho.populations
    if p[0] > floor:
        return rho
    q = np.maximum(p, floor)
    q = q / q.sum()
    order = np.argsort(q, kind="stable")
    return DensityMatrix._from_spectrum(q[order], rho.eigenvectors[:, order])


def von_neumann_entropy(rho) -> float:
    p = np.clip(as_density(rho).populations, 0.0, 1.0)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def mean_energy(rho, h) -> float:
    r, m = np.asarray(rho), np.asarray(h)
    _same_dim(r, m)
    val = np.einsum("ij,ji->", r, m)
    if abs(val.imag) > 1e-10 * (1.0 + abs(val.real)):
        raise DomainError(f"Tr(rho H) has imaginary part {val.imag:.3e}")
    return float(val.real)


def free_energy(rho, h, bath: HeatBath) -> float:
    return mean_energy(rho, h) - bath.temperature * von_neumann_entropy(rho)


def shannon_entropy(p) -> float:
    p = _probability_vector(p)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _probability_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise DomainError("probability vector must be non-empty and finite")
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > STRUCT_TOL:
        raise DomainError(f"not a probability distribution: {p!r}")
    return np.clip(p, 0.0, None)


def is_thermal(rho, h, bath: HeatBath, tol: float = 1e-8) -> bool:
    return trace_distance(rho, gibbs_state(h, bath)) <= tol


def pure_state(vec) -> DensityMatrix:
    vec = np.asarray(vec, dtype=complex)
    return DensityMatrix(projector(vec / np.linalg.norm(vec)))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix._from_spectrum(np.full(d, 1.0 / d), np.eye(d, dtype=complex))


def random_density_matrix(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Random state from a Ginibre matrix (Hilbert-Schmidt measure for full rank)."""
    k = d if rank is None else rank
    z = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = z @ z.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_full_rank_state(d: int, rng: np.random.Generator, min_population: float = 1e-3) -> DensityMatrix:
    """Random state whose populations are bounded away from zero."""
    p = rng.dirichlet(np.ones(d))
    p = (1 - d * min_population) * p + min_population
    p = np.sort(p)
    return DensityMatrix._from_spectrum(p / p.sum(), random_unitary(d, rng))


def check_dims(*ops) -> int:
    dims = {np.shape(o)[0] for o in ops}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch among operands: {sorted(dims)}")
    return dims.pop()
