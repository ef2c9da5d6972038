"""Single-bath measurement engine: stroke ledger and work accounting.

Sign convention: ``W_by_system > 0`` is work delivered to the work source,
``Q_from_bath > 0`` is heat absorbed from the bath, and every stroke obeys
``dE = Q_from_bath - W_by_system``.  The measurement stroke is booked as
work done *on* the system with no heat.

The cycle starting from a thermal state ``rho`` of ``H``:

1. measurement          rho -> rho'
2. permutation (opt.)   rho' -> V rho' V^H, Hamiltonian H fixed
3. sudden quench        H -> H', the Gibbs dual of the current state
4. isothermal return    H' -> H quasi-statically, ending in rho again
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, InvariantViolation
from .linalg import EXACT_TOL, HermitianOperator, UnitaryOperator
from .measurement import ProjectiveBasis, landauer_reset_cost, nonselective_measure
from .states import (
    DensityMatrix,
    GibbsGauge,
    HeatBath,
    as_density,
    as_hermitian,
    check_dims,
    free_energy,
    gibbs_dual_hamiltonian,
    gibbs_state,
    mean_energy,
    shannon_entropy,
    trace_distance,
    von_neumann_entropy,
)

THERMAL_TOL = 1e-8
LEDGER_TOL = 1e-10
CLOSURE_TOL = 1e-8

StrokeLabel = Literal["measurement", "permutation", "sudden_quench", "isothermal"]


@dataclass(frozen=True)
class StrokeRecord:
    label: StrokeLabel
    dE: float
    dS: float
    W_by_system: float
    Q_from_bath: float

    @property
    def first_law_residual(self) -> float:
        return self.dE - (self.Q_from_bath - self.W_by_system)


def measurement_deltas(rho, rho_prime, h) -> tuple[float, float]:
    """Energy cost and entropy increase of the measurement stroke."""
    check_dims(rho, rho_prime, h)
    d_e = mean_energy(rho_prime, h) - mean_energy(rho, h)
    d_s = von_neumann_entropy(rho_prime) - von_neumann_entropy(rho)
    return d_e, d_s


def _require_dual(rho_prime, h_prime, bath: HeatBath) -> None:
    dist = trace_distance(gibbs_state(h_prime, bath), rho_prime)
    if dist > THERMAL_TOL:
        raise DomainError(
            f"H' is not a Gibbs dual of the post-measurement state at T={bath.temperature:g} "
            f"(trace distance {dist:.3e})"
        )


def _require_thermal(rho, h, bath: HeatBath, hint: str = "") -> None:
    dist = trace_distance(rho, gibbs_state(h, bath))
    if dist > THERMAL_TOL:
        raise DomainError(f"initial state is not thermal (trace distance {dist:.3e}){hint}")


def sudden_quench_work(rho_prime, h, h_prime, bath: HeatBath) -> float:
    """Work done by the system when H jumps to H' with the state frozen."""
    check_dims(rho_prime, h, h_prime)
    _require_dual(rho_prime, h_prime, bath)
    return mean_energy(rho_prime, h) - mean_energy(rho_prime, h_prime)


def isothermal_stroke_analytic(rho_prime, h, h_prime, bath: HeatBath) -> StrokeRecord:
    """Reversible ramp H' -> H in bath contact, from Gibbs(H') to Gibbs(H).

    The work delivered equals the free-energy drop; heat is T times the
    entropy change.
    """
    check_dims(rho_prime, h, h_prime)
    _require_dual(rho_prime, h_prime, bath)
    rho_end = gibbs_state(h, bath)
    d_e = mean_energy(rho_end, h) - mean_energy(rho_prime, h_prime)
    d_s = von_neumann_entropy(rho_end) - von_neumann_entropy(rho_prime)
    work = -(d_e - bath.temperature * d_s)
    return StrokeRecord("isothermal", d_e, d_s, work, d_e + work)


def max_extractable_work(rho, rho_prime, h, bath: HeatBath) -> float:
    _require_thermal(rho, h, bath, "; use second_law_check for general initial states")
    d_e, d_s = measurement_deltas(rho, rho_prime, h)
    return d_e - bath.temperature * d_s


@dataclass(frozen=True)
class SecondLawVerdict:
    delta_F: float
    W_claimed: float
    slack: float
    satisfied: bool


def second_law_check(rho_initial, rho_final, h, bath: HeatBath, W_claimed: float,
                     tol: float = THERMAL_TOL) -> SecondLawVerdict:
    """Compare claimed extracted work with the free-energy drop at fixed H.

    ``slack = -dF - W_claimed``; a negative slack beyond ``tol`` is a violation.
    """
    d_f = free_energy(rho_final, h, bath) - free_energy(rho_initial, h, bath)
    slack = -d_f - W_claimed
    return SecondLawVerdict(d_f, float(W_claimed), slack, slack >= -tol)


def work_deficit(dS_meas: float, bath: HeatBath) -> float:
    if dS_meas < -EXACT_TOL:
        raise DomainError(f"measurement entropy change must be non-negative, got {dS_meas:.3e}")
    return bath.temperature * max(dS_meas, 0.0)


@dataclass(frozen=True)
class OutcomeWork:
    index: int
    probability: float
    dE: float
    dS: float
    W: float


@dataclass(frozen=True)
class SelectiveReport:
    outcomes: tuple[OutcomeWork, ...]
    W_mean: float
    W_nonselective: float
    shannon_bonus: float
    reset_cost: float
    net_deficit: float
    dW_lost_nonselective: float

    def violations(self, tol: float = LEDGER_TOL) -> list[str]:
        out = []
        resid = self.W_mean - math.fsum(o.probability * o.W for o in self.outcomes)
        if abs(resid) > EXACT_TOL:
            out.append(f"mean selective work != sum p_j W_j (residual {resid:.3e})")
        resid = self.W_mean - self.W_nonselective - self.shannon_bonus
        if abs(resid) > tol:
            out.append(f"selective work != non-selective work + T*H(p) (residual {resid:.3e})")
        resid = self.net_deficit - self.dW_lost_nonselective
        if abs(resid) > tol:
            out.append(f"selective net deficit != non-selective deficit (residual {resid:.3e})")
        return out


def selective_work_analysis(rho, basis: ProjectiveBasis, h, bath: HeatBath) -> SelectiveReport:
    """Per-outcome and mean work for a measurement whose result is kept."""
    rho, h = as_density(rho), as_hermitian(h)
    check_dims(rho, h)
    _require_thermal(rho, h, bath)
    temp = bath.temperature
    e0 = mean_energy(rho, h)
    s0 = von_neumann_entropy(rho)
    p = basis.probabilities(rho)
    p = p / p.sum()
    outcomes = []
    for j, vec in enumerate(basis.vectors):
        e_j = float(np.real(vec.conj() @ h.matrix @ vec))
        d_e, d_s = e_j - e0, -s0
        outcomes.append(OutcomeWork(j, float(p[j]), d_e, d_s, d_e - temp * d_s))
    w_mean = math.fsum(o.probability * o.W for o in outcomes)

    rho_prime = nonselective_measure(rho, basis)
    d_e_meas, d_s_meas = measurement_deltas(rho, rho_prime, h)
    w_nonsel = max_extractable_work(rho, rho_prime, h, bath)
    reset = landauer_reset_cost(p, bath)
    # energy paid in by the measurement that the engine does not return, net of the reset
    net_deficit = d_e_meas - (w_mean - reset)
    return SelectiveReport(
        outcomes=tuple(outcomes),
        W_mean=w_mean,
        W_nonselective=w_nonsel,
        shannon_bonus=temp * shannon_entropy(p),
        reset_cost=reset,
        net_deficit=net_deficit,
        dW_lost_nonselective=work_deficit(d_s_meas, bath),
    )


@dataclass(frozen=True)
class Crossing:
    s: float
    branches: tuple[int, int]


@dataclass(frozen=True)
class CrossingReport:
    s: np.ndarray
    eigenvalues: np.ndarray  # (samples, d), columns follow continuous branches
    crossings: tuple[Crossing, ...]
    min_gap: float
    min_gap_s: float

    @property
    def has_crossing(self) -> bool:
        return bool(self.crossings)


def level_crossing_scan(h_start, h_end, samples: int = 1001) -> CrossingReport:
    """Follow the spectrum of (1-s) h_start + s h_end and report level crossings.

    Eigenvalues are tracked along continuous branches by eigenvector overlap,
    so a crossing shows up as two branches exchanging order.  Avoided
    crossings only show up in ``min_gap``.
    """
    if samples < 2:
        raise DomainError(f"need at least 2 samples, got {samples}")
    a, b = as_hermitian(h_start), as_hermitian(h_end)
    check_dims(a, b)
    d = a.dim
    s_grid = np.linspace(0.0, 1.0, samples)
    scale = 1.0 + max(np.max(np.abs(a.matrix)), np.max(np.abs(b.matrix)))
    deg_tol = 1e-9 * scale

    track = np.empty((samples, d))
    ref_vecs = None
    min_gap, min_gap_s = math.inf, 0.0
    for k, s in enumerate(s_grid):
        spec = HermitianOperator((1 - s) * a.matrix + s * b.matrix, check=False).spectrum
        lam, vecs = spec.eigenvalues, spec.eigenvectors
        gap = float(np.min(np.diff(lam))) if d > 1 else math.inf
        if gap < min_gap:
            min_gap, min_gap_s = gap, float(s)
        if ref_vecs is None:
            assign = np.arange(d)
        else:
            overlap = np.abs(ref_vecs.conj().T @ vecs) ** 2
            _, assign = linear_sum_assignment(-overlap)
        track[k] = lam[assign]
        if gap > deg_tol:
            ref_vecs = vecs[:, assign]
        elif ref_vecs is None:
            ref_vecs = vecs

    crossings = []
    for i in range(d):
        for j in range(i + 1, d):
            diff = track[:, i] - track[:, j]
            last = None
            for k in range(samples):
                if abs(diff[k]) <= deg_tol:
                    continue
                if last is not None and np.sign(diff[k]) != np.sign(diff[last]):
                    s_cross = s_grid[last] + (s_grid[k] - s_grid[last]) * diff[last] / (diff[last] - diff[k])
                    crossings.append(Crossing(float(s_cross), (i, j)))
                last = k
    crossings.sort(key=lambda c: c.s)
    return CrossingReport(s_grid, track, tuple(crossings), max(min_gap, 0.0), min_gap_s)


def anticrossing_permutation(rho_prime, h) -> tuple[UnitaryOperator, DensityMatrix]:
    """Unitary sending the most populated eigenvector of rho' to the ground state of h,
    the next one to the first excited state, and so on.

    Ties in populations or energies keep eigensolver index order.
    """
    rho_prime, h = as_density(rho_prime), as_hermitian(h)
    check_dims(rho_prime, h)
    p = rho_prime.populations
    desc = np.argsort(-p, kind="stable")
    f = rho_prime.eigenvectors[:, desc]
    e = h.spectrum.eigenvectors
    v = UnitaryOperator(e @ f.conj().T)
    p_desc = p[desc]
    # ascending populations <-> descending energy index
    fixed = DensityMatrix._from_spectrum(p_desc[::-1], e[:, ::-1])
    return v, fixed


GaugeSpec = Union[str, GibbsGauge]


def _resolve_gauge(gauge: GaugeSpec, h: HermitianOperator) -> GibbsGauge:
    if isinstance(gauge, GibbsGauge):
        return gauge
    if gauge == "match_energy":
        return GibbsGauge.match_energy(h)
    return GibbsGauge(gauge)


@dataclass(frozen=True)
class CycleLedger:
    strokes: tuple[StrokeRecord, ...]
    W_extracted: float
    W_closed_form: float
    dE_meas: float
    dS_meas: float
    dW_lost: float
    dF_measurement: float
    second_law_slack: float
    bath: HeatBath
    closure_dE: float
    closure_dS: float
    rho: DensityMatrix = field(repr=False)
    rho_prime: DensityMatrix = field(repr=False)
    h: HermitianOperator = field(repr=False)
    h_prime: HermitianOperator = field(repr=False)
    permutation: Optional[UnitaryOperator] = field(default=None, repr=False)
    selective: Optional[SelectiveReport] = None

    def stroke(self, label: str) -> StrokeRecord:
        for s in self.strokes:
            if s.label == label:
                return s
        raise KeyError(label)

    def violations(self) -> list[str]:
        out = []
        for s in self.strokes:
            if abs(s.first_law_residual) > LEDGER_TOL:
                out.append(f"first law broken in {s.label} stroke ({s.first_law_residual:.3e})")
        if abs(self.closure_dE) > CLOSURE_TOL:
            out.append(f"cycle does not close in energy ({self.closure_dE:.3e})")
        if abs(self.closure_dS) > CLOSURE_TOL:
            out.append(f"cycle does not close in entropy ({self.closure_dS:.3e})")
        post = math.fsum(s.W_by_system for s in self.strokes if s.label != "measurement")
        if abs(post - self.W_extracted) > LEDGER_TOL:
            out.append("W_extracted differs from the sum of post-measurement strokes")
        if abs(self.W_extracted - self.W_closed_form) > LEDGER_TOL:
            out.append(
                f"stroke sum {self.W_extracted!r} != dE_meas - T dS_meas {self.W_closed_form!r}"
            )
        if abs(self.second_law_slack) > THERMAL_TOL:
            out.append(f"reversible return does not saturate the second law ({self.second_law_slack:.3e})")
        if self.selective is not None:
            out.extend(self.selective.violations())
        return out

    def check(self) -> "CycleLedger":
        bad = self.violations()
        if bad:
            raise InvariantViolation("; ".join(bad))
        return self


def close_cycle(rho, rho_prime, h, bath: HeatBath, gauge: GaugeSpec = "match_energy",
                permutation: bool = False) -> CycleLedger:
    """Book the strokes returning a post-measurement state ``rho_prime`` to ``rho``.

    ``rho`` must be thermal for ``h``; ``rho_prime`` is any full-rank state
    reached from it by the measurement stroke.
    """
    rho, rho_prime, h = as_density(rho), as_density(rho_prime), as_hermitian(h)
    check_dims(rho, rho_prime, h)
    _require_thermal(rho, h, bath)
    temp = bath.temperature

    d_e_meas, d_s_meas = measurement_deltas(rho, rho_prime, h)
    strokes = [StrokeRecord("measurement", d_e_meas, d_s_meas, -d_e_meas, 0.0)]

    state, v = rho_prime, None
    if permutation:
        v, state = anticrossing_permutation(rho_prime, h)
        d_e = mean_energy(state, h) - mean_energy(rho_prime, h)
        d_s = von_neumann_entropy(state) - von_neumann_entropy(rho_prime)
        strokes.append(StrokeRecord("permutation", d_e, d_s, -d_e, 0.0))

    h_prime = gibbs_dual_hamiltonian(state, bath, _resolve_gauge(gauge, h))
    w_q = sudden_quench_work(state, h, h_prime, bath)
    strokes.append(StrokeRecord("sudden_quench", -w_q, 0.0, w_q, 0.0))
    strokes.append(isothermal_stroke_analytic(state, h, h_prime, bath))

    w_ext = math.fsum(s.W_by_system for s in strokes[1:])
    w_closed_form = d_e_meas - temp * d_s_meas
    verdict = second_law_check(rho_prime, rho, h, bath, w_ext)
    return CycleLedger(
        strokes=tuple(strokes),
        W_extracted=w_ext,
        W_closed_form=w_closed_form,
        dE_meas=d_e_meas,
        dS_meas=d_s_meas,
        dW_lost=temp * d_s_meas,
        dF_measurement=free_energy(rho_prime, h, bath) - free_energy(rho, h, bath),
        second_law_slack=verdict.slack,
        bath=bath,
        closure_dE=math.fsum(s.dE for s in strokes),
        closure_dS=math.fsum(s.dS for s in strokes),
        rho=rho,
        rho_prime=rho_prime,
        h=h,
        h_prime=h_prime,
        permutation=v,
    )


def run_cycle(rho, basis: ProjectiveBasis, h, bath: HeatBath, *, selective: bool = False,
              gauge: GaugeSpec = "match_energy", permutation: bool = False,
              check: bool = True) -> CycleLedger:
    """Measure a thermal state and close the cycle reversibly.

    With ``selective=True`` the ledger also carries the selective-engine
    analysis for the same measurement.
    """
    rho = as_density(rho)
    rho_prime = nonselective_measure(rho, basis)
    ledger = close_cycle(rho, rho_prime, h, bath, gauge=gauge, permutation=permutation)
    ledger = replace(ledger, dW_lost=work_deficit(ledger.dS_meas, bath))
    if selective:
        ledger = replace(ledger, selective=selective_work_analysis(rho, basis, h, bath))
    return ledger.check() if check else ledger
