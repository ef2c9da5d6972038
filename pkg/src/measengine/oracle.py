"""Brute-force isothermal ramp: N quench-then-rethermalize steps.

This is an independent check on the analytic reversible strokes.  The
Hamiltonian is interpolated linearly, each step does work on the frozen
state and then the bath resets the system to the instantaneous Gibbs
state.  Thermal states along the path are computed with LAPACK
(``numpy.linalg.eigh``) rather than the package's Jacobi solver, so the
two routes share no eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cycle import GaugeSpec, _resolve_gauge, anticrossing_permutation, max_extractable_work, second_law_check
from .errors import DomainError
from .linalg import trace_distance
from .measurement import ProjectiveBasis, nonselective_measure
from .states import (
    DensityMatrix,
    HeatBath,
    as_density,
    as_hermitian,
    check_dims,
    gibbs_dual_hamiltonian,
    mean_energy,
    regularize_state,
)

_CHUNK = 1 << 15


@dataclass(frozen=True)
class IsothermalSchedule:
    steps: int
    interpolation: str = "linear"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"schedule needs a positive integer step count, got {self.steps!r}")
        if self.interpolation != "linear":
            raise DomainError(f"unsupported interpolation {self.interpolation!r}")


@dataclass(frozen=True)
class OracleResult:
    W_by_system: float
    Q_from_bath: float
    dE: float
    dS: float
    final_state: DensityMatrix = field(repr=False)
    steps: int

    @property
    def first_law_residual(self) -> float:
        return self.dE - (self.Q_from_bath - self.W_by_system)


def _gibbs_batch(hs: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thermal states for a stack of Hamiltonians; also returns populations."""
    lam, vec = np.linalg.eigh(hs)
    w = np.exp(-beta * (lam - lam[:, :1]))
    p = w / w.sum(axis=1, keepdims=True)
    rhos = np.einsum("kij,kj,klj->kil", vec, p, vec.conj())
    return rhos, p, lam


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _tr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("kij,kji->k", a, b).real


def simulate_isothermal(h_start, h_end, bath: HeatBath, schedule: IsothermalSchedule) -> OracleResult:
    """Discretized ramp from Gibbs(h_start) along H_k = h_start + (k/N)(h_end - h_start).

    Step k books work w_k = Tr[rho_{k-1}(H_k - H_{k-1})] done on the system
    and heat q_k = Tr[rho_k H_k] - Tr[rho_{k-1} H_k] from the bath.
    """
    a = as_hermitian(h_start).matrix
    b = as_hermitian(h_end).matrix
    check_dims(a, b)
    n = schedule.steps
    beta = bath.beta
    delta = b - a

    # energies a_k = Tr[rho_k H_k], b_k = Tr[rho_{k-1} H_k]; w_k = b_k - a_{k-1}, q_k = a_k - b_k
    work_terms: list[float] = []
    heat_terms: list[float] = []
    rho_prev, p_prev, _ = _gibbs_batch(a[None], beta)
    p_first = p_prev[0]
    e_prev = float(_tr(rho_prev, a[None])[0])
    e_start = e_prev
    for lo in range(1, n + 1, _CHUNK):
        ks = np.arange(lo, min(lo + _CHUNK, n + 1))
        hs = a[None] + (ks / n)[:, None, None] * delta[None]
        rhos, ps, _ = _gibbs_batch(hs, beta)
        prev = np.concatenate([rho_prev, rhos[:-1]])
        a_k = _tr(rhos, hs)
        b_k = _tr(prev, hs)
        a_km1 = np.concatenate([[e_prev], a_k[:-1]])
        work_terms.append(math.fsum(b_k - a_km1))
        heat_terms.append(math.fsum(a_k - b_k))
        rho_prev, p_prev, e_prev = rhos[-1:], ps[-1:], float(a_k[-1])

    w_on = math.fsum(work_terms)
    q = math.fsum(heat_terms)
    final = DensityMatrix(rho_prev[0])
    return OracleResult(
        W_by_system=-w_on,
        Q_from_bath=q,
        dE=e_prev - e_start,
        dS=_entropy(p_prev[0]) - _entropy(p_first),
        final_state=final,
        steps=n,
    )


def reversible_work(h_start, h_end, bath: HeatBath) -> float:
    """Work delivered by the quasi-static ramp: F_eq(h_start) - F_eq(h_end)."""
    return _equilibrium_free_energy(h_start, bath) - _equilibrium_free_energy(h_end, bath)


def _equilibrium_free_energy(h, bath: HeatBath) -> float:
    # -T ln Z, with the spectrum shifted for stability
    lam = np.linalg.eigvalsh(as_hermitian(h).matrix)
    x = -bath.beta * (lam - lam[0])
    return float(lam[0] - bath.temperature * math.log(np.sum(np.exp(x))))


@dataclass(frozen=True)
class ConvergenceRow:
    steps: int
    W_sim: float
    W_analytic: float
    error: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]

    @property
    def slope(self) -> Optional[float]:
        """Least-squares slope of log(error) against log(N); None if errors vanish."""
        errs = np.array([r.error for r in self.rows])
        if len(errs) < 2 or np.any(errs <= 0):
            return None
        ns = np.array([r.steps for r in self.rows], dtype=float)
        return float(np.polyfit(np.log(ns), np.log(errs), 1)[0])

    @property
    def monotone(self) -> bool:
        errs = [r.error for r in self.rows]
        return all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))


def convergence_study(h_start, h_end, bath: HeatBath, n_list: Sequence[int]) -> ConvergenceTable:
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise DomainError("step counts must be ascending")
    target = reversible_work(h_start, h_end, bath)
    rows = []
    for n in n_list:
        res = simulate_isothermal(h_start, h_end, bath, IsothermalSchedule(n))
        rows.append(ConvergenceRow(n, res.W_by_system, target, abs(res.W_by_system - target)))
    return ConvergenceTable(tuple(rows))


@dataclass(frozen=True)
class FullCycleResult:
    """Simulated cycle next to its analytic counterpart."""

    isothermal: OracleResult
    W_permutation: float
    W_sudden: float
    W_total: float
    W_analytic: float
    error: float
    second_law_slack: float
    final_distance: float


def simulate_return(rho, rho_prime, h, bath: HeatBath, schedule: IsothermalSchedule,
                    gauge: GaugeSpec = "match_energy", permutation: bool = False) -> FullCycleResult:
    """Simulate the strokes bringing ``rho_prime`` back to the thermal ``rho``."""
    rho, rho_prime, h = as_density(rho), as_density(rho_prime), as_hermitian(h)
    check_dims(rho, rho_prime, h)
    state, w_perm = rho_prime, 0.0
    if permutation:
        _, state = anticrossing_permutation(rho_prime, h)
        w_perm = mean_energy(rho_prime, h) - mean_energy(state, h)
    h_prime = gibbs_dual_hamiltonian(state, bath, _resolve_gauge(gauge, h))
    w_sudden = mean_energy(state, h) - mean_energy(state, h_prime)
    iso = simulate_isothermal(h_prime, h, bath, schedule)
    w_total = w_perm + w_sudden + iso.W_by_system
    w_analytic = max_extractable_work(rho, rho_prime, h, bath)
    verdict = second_law_check(rho_prime, rho, h, bath, w_total)
    return FullCycleResult(
        isothermal=iso,
        W_permutation=w_perm,
        W_sudden=w_sudden,
        W_total=w_total,
        W_analytic=w_analytic,
        error=abs(w_total - w_analytic),
        second_law_slack=verdict.slack,
        final_distance=trace_distance(iso.final_state, rho),
    )


def simulate_full_cycle(rho, basis: ProjectiveBasis, h, bath: HeatBath, schedule: IsothermalSchedule,
                        gauge: GaugeSpec = "match_energy", permutation: bool = False) -> FullCycleResult:
    """Non-selective measurement, quench, then the simulated isothermal return."""
    rho_prime = nonselective_measure(rho, basis)
    return simulate_return(rho, rho_prime, h, bath, schedule, gauge=gauge, permutation=permutation)


@dataclass(frozen=True)
class BranchResult:
    """Oracle run for one selective outcome, started from a regularized pure state."""

    index: int
    W_sim: float
    W_analytic: float
    error: float
    regularization_bound: float
    steps: int


def regularization_bound(d: int, h, bath: HeatBath, floor: float) -> float:
    """Upper bound on |F(regularized) - F(pure)| for a floor-clamped pure state.

    The energy part is at most 2 d floor ||H||; the entropy of the clamped
    state adds at most T (d-1) floor (1 + ln(1/floor)).
    """
    norm = float(np.max(np.abs(np.linalg.eigvalsh(as_hermitian(h).matrix))))
    return 2 * d * floor * norm + bath.temperature * (d - 1) * floor * (1.0 + math.log(1.0 / floor))


def simulate_selective_branch(rho, basis: ProjectiveBasis, j: int, h, bath: HeatBath,
                              schedule: IsothermalSchedule, floor: float = 1e-8) -> BranchResult:
    """Extract work from the post-measurement state |j><j| back down to equilibrium.

    A pure state has no Gibbs dual, so the branch state is clamped with
    :func:`regularize_state` first; the analytic branch work is then only
    matched up to ``regularization_bound`` plus the O(1/N) ramp error.
    """
    from .cycle import selective_work_analysis

    rho, h = as_density(rho), as_hermitian(h)
    rep = selective_work_analysis(rho, basis, h, bath)
    if not 0 <= j < basis.dim:
        raise DomainError(f"outcome index {j} out of range for dim {basis.dim}")
    vec = basis.vectors[j]
    post = regularize_state(DensityMatrix(np.outer(vec, vec.conj())), floor)
    h_dual = gibbs_dual_hamiltonian(post, bath)
    w_sudden = mean_energy(post, h) - mean_energy(post, h_dual)
    iso = simulate_isothermal(h_dual, h, bath, schedule)
    w_sim = w_sudden + iso.W_by_system
    w_an = rep.outcomes[j].W
    return BranchResult(j, w_sim, w_an, abs(w_sim - w_an),
                        regularization_bound(h.dim, h, bath, floor), schedule.steps)
