"""Dense complex linear algebra for small Hilbert spaces.

Everything here works on plain ``numpy`` arrays underneath.  The wrapper
classes only enforce the structural invariants (Hermiticity, unitarity)
at construction time and are immutable afterwards.

Tolerance ladder used throughout the package:

* ``STRUCT_TOL``:  structural invariants (Hermiticity, orthonormality)
* ``DERIVED_TOL``: equalities that go through an eigendecomposition
* ``EXACT_TOL``:   exact identities (traces, first law)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import DimensionError, DomainError, NumericalError

STRUCT_TOL = 1e-9
DERIVED_TOL = 1e-8
EXACT_TOL = 1e-12

JACOBI_MAX_SWEEPS = 60


def _as_square(m) -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def _max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


class HermitianOperator:
    """A Hermitian matrix, stored in explicitly symmetrized form."""

    __slots__ = ("_m", "_spec")

    def __init__(self, matrix, *, check: bool = True):
        if isinstance(matrix, HermitianOperator):
            self._m = matrix._m
            self._spec = matrix._spec
            return
        m = _as_square(matrix)
        if check:
            dev = _max_abs(m - m.conj().T)
            if dev > STRUCT_TOL * (1.0 + _max_abs(m)):
                raise DomainError(f"matrix is not Hermitian (max |A - A^H| = {dev:.3e})")
        self._m = _frozen((m + m.conj().T) / 2)
        self._spec = None

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def spectrum(self) -> "SpectralDecomposition":
        if self._spec is None:
            self._spec = _jacobi_eigh(self._m)
        return self._spec

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"

    def __add__(self, other):
        if isinstance(other, HermitianOperator):
            _same_dim(self, other)
            return HermitianOperator(self._m + other._m, check=False)
        if np.isscalar(other) and np.isreal(other):
            return HermitianOperator(self._m + float(other) * np.eye(self.dim), check=False)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, HermitianOperator) or np.isscalar(other):
            return self + (-1.0) * other
        return NotImplemented

    def __mul__(self, c):
        if np.isscalar(c) and np.isreal(c):
            return HermitianOperator(float(c) * self._m, check=False)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self


class UnitaryOperator:
    __slots__ = ("_m",)

    def __init__(self, matrix):
        m = _as_square(matrix)
        dev = _max_abs(m.conj().T @ m - np.eye(m.shape[0]))
        if dev > STRUCT_TOL:
            raise DomainError(f"matrix is not unitary (max |U^H U - I| = {dev:.3e})")
        self._m = _frozen(m)

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def dagger(self) -> "UnitaryOperator":
        return UnitaryOperator(self._m.conj().T)

    def conjugate(self, m) -> np.ndarray:
        """Return ``U m U^H`` as a plain array."""
        m = np.asarray(m)
        if m.shape != self._m.shape:
            raise DimensionError(f"cannot conjugate {m.shape} by {self._m.shape} unitary")
        return self._m @ m @ self._m.conj().T

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __repr__(self) -> str:
        return f"UnitaryOperator(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _same_dim(a, b) -> None:
    da, db = np.shape(a)[0], np.shape(b)[0]
    if da != db:
        raise DimensionError(f"dimension mismatch: {da} vs {db}")


def _jacobi_eigh(a: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS) -> SpectralDecomposition:
    # Cyclic complex Jacobi, row-by-row pivot order.
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    fro = float(np.linalg.norm(a))
    threshold = max(n, 4) * np.finfo(float).eps * fro
    for _ in range(max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= threshold or n == 1:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                conj_phase = (apq / r).conjugate()
                theta = 0.5 * math.atan2(2.0 * r, a[q, q].real - a[p, p].real)
                c, s = math.cos(theta), math.sin(theta)
                g = np.array([[c, s], [-s * conj_phase, c * conj_phase]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        raise NumericalError(
            f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
            f"(off-diagonal norm {off:.3e}, dim {n})"
        )
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(_frozen(w[order].copy()), _frozen(v[:, order].copy()))


def eigh(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator by cyclic Jacobi rotations.

    Eigenvalues come back ascending.  Inside a degenerate block the
    eigenvectors are some orthonormal choice; only basis-independent
    quantities should be compared downstream.  Raises ``NumericalError``
    if the sweep cap is hit.
    """
    return HermitianOperator(a).spectrum


def tensor(a, b) -> np.ndarray:
    """Kronecker product; ``a`` is the slow (leftmost) index."""
    return np.kron(_as_square(a), _as_square(b))


def partial_trace(m, dims: tuple[int, int], keep: Literal["A", "B"] = "A") -> np.ndarray:
    m = _as_square(m)
    da, db = dims
    if da < 1 or db < 1 or m.shape[0] != da * db:
        raise DimensionError(f"matrix of dim {m.shape[0]} does not factor as {da}x{db}")
    t = m.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def operator_function(a, f: Callable) -> HermitianOperator:
    """Apply a real scalar function to a Hermitian operator via its spectrum."""
    h = HermitianOperator(a)
    spec = h.spectrum
    lam = spec.eigenvalues
    with np.errstate(all="ignore"):
        try:
            vals = np.asarray(f(lam), dtype=float)
            if vals.shape != lam.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([f(x) for x in lam], dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise DomainError(
            f"function undefined at eigenvalue {lam[np.argmax(bad)]!r}"
        )
    v = spec.eigenvectors
    return HermitianOperator((v * vals) @ v.conj().T, check=False)


def trace_distance(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    _same_dim(a, b)
    lam = eigh(a - b).eigenvalues
    return 0.5 * float(np.sum(np.abs(lam)))


def identity(d: int) -> HermitianOperator:
    return HermitianOperator(np.eye(d), check=False)


def diag(*values) -> HermitianOperator:
    return HermitianOperator(np.diag(np.asarray(values, dtype=float)), check=False)


def basis_vector(d: int, j: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[j] = 1.0
    return e


def projector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Ginibre matrix)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianOperator(scale * (z + z.conj().T) / 2, check=False)


SIGMA_X = HermitianOperator([[0, 1], [1, 0]])
SIGMA_Y = HermitianOperator([[0, -1j], [1j, 0]])
SIGMA_Z = HermitianOperator([[1, 0], [0, -1]])
