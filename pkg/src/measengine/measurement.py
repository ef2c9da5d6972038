"""Projective measurements, CNOT premeasurement and register bookkeeping.

Qubit convention: ``|0>`` is the +1 eigenvector of sigma_z, so
``P_+ = |0><0|``.  In joint states the measured system is the left (slow)
tensor factor and the register the right one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import (
    STRUCT_TOL,
    UnitaryOperator,
    partial_trace,
    projector,
    random_unitary,
    tensor,
)
from .states import (
    DensityMatrix,
    HeatBath,
    as_density,
    as_hermitian,
    shannon_entropy,
)


class ProjectiveBasis:
    """Complete orthonormal basis defining a rank-1 projective measurement.

    Stored as a unitary whose columns are the basis vectors ``|j>``.
    """

    __slots__ = ("_u", "label")

    def __init__(self, vectors, label: str = "explicit"):
        u = np.array(vectors, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DimensionError(f"need d vectors of length d, got shape {u.shape}")
        # rows of the input are the vectors
        u = u.T
        gram = u.conj().T @ u
        dev = float(np.max(np.abs(gram - np.eye(u.shape[0]))))
        if dev > STRUCT_TOL:
            raise DomainError(f"basis vectors are not orthonormal (deviation {dev:.3e})")
        u.setflags(write=False)
        self._u = u
        self.label = label

    @classmethod
    def z(cls, d: int = 2) -> "ProjectiveBasis":
        return cls(np.eye(d), "z")

    @classmethod
    def x(cls, d: int = 2) -> "ProjectiveBasis":
        """Eigenbasis of sigma_x for a qubit, the Fourier basis for d > 2."""
        if d == 2:
            s = 1 / math.sqrt(2)
            return cls([[s, s], [s, -s]], "x")
        k = np.arange(d)
        return cls(np.exp(2j * np.pi * np.outer(k, k) / d) / math.sqrt(d), "x")

    @classmethod
    def angle(cls, theta: float) -> "ProjectiveBasis":
        """Qubit basis tilted by ``theta`` from z towards x on the Bloch sphere."""
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        return cls([[c, s], [-s, c]], f"angle({theta:.12g})")

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "ProjectiveBasis":
        return cls(random_unitary(d, rng).T, "random")

    @classmethod
    def eigenbasis(cls, op) -> "ProjectiveBasis":
        return cls(as_hermitian(op).spectrum.eigenvectors.T, "eigenbasis")

    @property
    def dim(self) -> int:
        return self._u.shape[0]

    @property
    def unitary(self) -> np.ndarray:
        """Matrix whose columns are the basis vectors."""
        return self._u

    @property
    def vectors(self) -> list[np.ndarray]:
        return [self._u[:, j] for j in range(self.dim)]

    @property
    def projectors(self) -> list[np.ndarray]:
        return [projector(v) for v in self.vectors]

    def probabilities(self, rho) -> np.ndarray:
        m = np.asarray(rho)
        _check_dim(m, self.dim)
        u = self._u
        p = np.einsum("ij,ik,kj->j", u.conj(), m, u).real
        return np.clip(p, 0.0, None)

    def __repr__(self) -> str:
        return f"ProjectiveBasis({self.label}, dim={self.dim})"


def _check_dim(m, d: int) -> None:
    if np.shape(m)[0] != d:
        raise DimensionError(f"state has dim {np.shape(m)[0]}, basis has dim {d}")


def nonselective_measure(rho, basis: ProjectiveBasis) -> DensityMatrix:
    """Dephasing channel rho -> sum_j P_j rho P_j (outcome discarded)."""
    rho = as_density(rho)
    p = basis.probabilities(rho)
    p = p / p.sum()
    order = np.argsort(p, kind="stable")
    return DensityMatrix._from_spectrum(p[order], basis.unitary[:, order])


@dataclass(frozen=True)
class SelectiveOutcome:
    index: int
    probability: float
    post_state: DensityMatrix


def selective_measure(rho, basis: ProjectiveBasis) -> list[SelectiveOutcome]:
    rho = as_density(rho)
    p = basis.probabilities(rho)
    p = p / p.sum()
    last = np.zeros(basis.dim)
    last[-1] = 1.0
    return [
        SelectiveOutcome(
            j, float(p[j]),
            DensityMatrix._from_spectrum(last, basis.unitary[:, _pure_order(basis.dim, j)]),
        )
        for j in range(basis.dim)
    ]


def _pure_order(d: int, j: int) -> list[int]:
    # put the occupied vector last so cached populations stay ascending
    return [k for k in range(d) if k != j] + [j]


@dataclass(frozen=True)
class RegisterState:
    """Memory qubit used for premeasurement; dephased in the z basis by default."""

    state: DensityMatrix
    basis: str = "z"

    def __post_init__(self):
        object.__setattr__(self, "state", as_density(self.state))
        if self.state.dim != 2:
            raise DimensionError(f"register must be a qubit, got dim {self.state.dim}")

    @property
    def coherence(self) -> float:
        """Magnitude of the off-diagonal element in the z basis."""
        return float(abs(self.state.matrix[0, 1]))

    def is_z_diagonal(self, tol: float = STRUCT_TOL) -> bool:
        return self.coherence <= tol

    @classmethod
    def diagonal(cls, p0: float) -> "RegisterState":
        return cls(DensityMatrix(np.diag([p0, 1.0 - p0])))


_P_PLUS = np.diag([1.0, 0.0]).astype(complex)
_P_MINUS = np.diag([0.0, 1.0]).astype(complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def cnot_unitary() -> UnitaryOperator:
    """Controlled flip of the register, conditioned on the system being in |0>."""
    return UnitaryOperator(np.kron(_P_PLUS, _X) + np.kron(_P_MINUS, _I2))


_CNOT = cnot_unitary()


class Premeasurement(NamedTuple):
    joint: DensityMatrix
    system: DensityMatrix
    register: RegisterState


def premeasure(rho_sys, reg: RegisterState) -> Premeasurement:
    """Correlate a system qubit with the register through the CNOT."""
    rho_sys = as_density(rho_sys)
    if rho_sys.dim != 2:
        raise DimensionError(f"premeasurement needs a qubit system, got dim {rho_sys.dim}")
    joint = _CNOT.conjugate(tensor(rho_sys.matrix, reg.state.matrix))
    joint = DensityMatrix(joint)
    sys = DensityMatrix(partial_trace(joint.matrix, (2, 2), keep="A"))
    out_reg = RegisterState(DensityMatrix(partial_trace(joint.matrix, (2, 2), keep="B")), reg.basis)
    return Premeasurement(joint, sys, out_reg)


def register_readout(joint) -> DensityMatrix:
    """Non-selective z readout of the register factor of a system-register state."""
    m = np.asarray(joint)
    d = m.shape[0]
    if d % 2:
        raise DimensionError(f"joint dim {d} has no qubit register factor")
    ds = d // 2
    out = np.zeros_like(m)
    for p in (_P_PLUS, _P_MINUS):
        k = np.kron(np.eye(ds), p)
        out = out + k @ m @ k
    return DensityMatrix(out)


def iter_bad_apple(states: Sequence, reg: RegisterState) -> Iterator[Premeasurement]:
    """Premeasure each qubit in turn, handing the evolving register along."""
    if not reg.is_z_diagonal():
        raise DomainError(
            f"register must commute with sigma_z (off-diagonal {reg.coherence:.3e})"
        )
    for rho in states:
        step = premeasure(rho, reg)
        reg = step.register
        yield step


class BadAppleRun(NamedTuple):
    dephased: list[DensityMatrix]
    final_register: RegisterState


def bad_apple_sequence(states: Sequence, reg: RegisterState) -> BadAppleRun:
    steps = list(iter_bad_apple(states, reg))
    final = steps[-1].register if steps else reg
    return BadAppleRun([s.system for s in steps], final)


def landauer_reset_cost(p, bath: HeatBath) -> float:
    """Minimal work to erase a memory holding outcome distribution ``p``."""
    return bath.temperature * shannon_entropy(p)
