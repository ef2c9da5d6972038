"""Randomized invariant suites behind ``measengine verify``.

Every trial draws from its own generator, seeded from
``(base_seed, crc32(suite name), trial index)``, so a reported failure can be
replayed with :func:`trial_rng`.
"""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import cycle
from .linalg import (
    HermitianOperator,
    diag,
    operator_function,
    partial_trace,
    random_hermitian,
    random_unitary,
    tensor,
    trace_distance,
)
from .measurement import (
    ProjectiveBasis,
    RegisterState,
    bad_apple_sequence,
    nonselective_measure,
    premeasure,
)
from .oracle import IsothermalSchedule, convergence_study, reversible_work, simulate_full_cycle, simulate_isothermal
from .states import (
    DensityMatrix,
    GibbsGauge,
    HeatBath,
    free_energy,
    gibbs_dual_hamiltonian,
    gibbs_state,
    mean_energy,
    random_density_matrix,
    random_full_rank_state,
    shannon_entropy,
    von_neumann_entropy,
)


def trial_rng(base_seed: int, suite: str, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence([base_seed, zlib.crc32(suite.encode()), trial])
    return np.random.default_rng(ss)


def random_scenario(rng: np.random.Generator, dims=(2, 3, 4)):
    """Thermal state of a random Hamiltonian plus a Haar-random measurement basis."""
    d = int(rng.choice(dims))
    h = random_hermitian(d, rng)
    bath = HeatBath(float(rng.uniform(0.5, 3.0)))
    return gibbs_state(h, bath), ProjectiveBasis.random(d, rng), h, bath


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise AssertionError(msg)


# -- operator core ------------------------------------------------------------

def _eigh_reconstruction(rng):
    d = int(rng.integers(2, 17))
    h = random_hermitian(d, rng)
    spec = h.spectrum
    resid = np.max(np.abs(spec.reconstruct() - h.matrix))
    _expect(resid <= 1e-8, f"reconstruction residual {resid:.3e} (d={d})")


def _tensor_partial_trace(rng):
    da, db = (int(x) for x in rng.integers(1, 5, size=2))
    a = rng.standard_normal((da, da)) + 1j * rng.standard_normal((da, da))
    b = rng.standard_normal((db, db)) + 1j * rng.standard_normal((db, db))
    resid = np.max(np.abs(partial_trace(tensor(a, b), (da, db), "A") - a * np.trace(b)))
    _expect(resid <= 1e-12 * (1 + np.max(np.abs(a)) * np.max(np.abs(b)) * db), f"residual {resid:.3e}")


def _exp_log_roundtrip(rng):
    rho = random_full_rank_state(int(rng.integers(2, 9)), rng, 1e-3)
    back = operator_function(operator_function(rho.op, np.log), np.exp)
    resid = np.max(np.abs(back.matrix - rho.matrix))
    _expect(resid <= 1e-8, f"exp(log(rho)) residual {resid:.3e}")


# -- thermodynamic states -----------------------------------------------------

def _gibbs_dual_roundtrip(rng):
    d = int(rng.choice([2, 3, 4, 8]))
    rho = random_full_rank_state(d, rng, 1e-4)
    bath = HeatBath(float(rng.uniform(0.2, 5.0)))
    ref = random_hermitian(d, rng)
    for gauge in (GibbsGauge("raw"), GibbsGauge("ground_zero"), GibbsGauge.match_energy(ref)):
        back = gibbs_state(gibbs_dual_hamiltonian(rho, bath, gauge), bath)
        dist = trace_distance(back, rho)
        _expect(dist <= 1e-8, f"{gauge.mode}: round-trip trace distance {dist:.3e} (d={d})")


def _gibbs_gauge_invariance(rng):
    rho, _, h, bath = random_scenario(rng)
    c = float(rng.uniform(-100, 100)) * bath.temperature
    dist = trace_distance(gibbs_state(h + c, bath), rho)
    _expect(dist <= 1e-12, f"shift by {c:.3g} moved the Gibbs state by {dist:.3e}")


def _traceless_energy_neutral(h: HermitianOperator, rng) -> np.ndarray:
    d = h.dim
    x = random_hermitian(d, rng).matrix
    x = x - np.trace(x) / d * np.eye(d)
    h0 = h.matrix - np.trace(h.matrix) / d * np.eye(d)
    norm = np.trace(h0 @ h0).real
    if norm > 0:
        x = x - np.trace(x @ h0).real / norm * h0
    return x


def _gibbs_max_entropy(rng):
    rho, _, h, bath = random_scenario(rng)
    delta = _traceless_energy_neutral(h, rng)
    lam_min = rho.populations[0]
    t = float(rng.uniform(0.1, 1.0)) * lam_min / max(np.linalg.norm(delta, 2), 1e-300)
    sigma = DensityMatrix(rho.matrix + t * delta)
    de = abs(mean_energy(sigma, h) - mean_energy(rho, h))
    _expect(de <= 1e-6, f"energy constraint off by {de:.3e}")
    s_sigma, s_rho = von_neumann_entropy(sigma), von_neumann_entropy(rho)
    _expect(s_sigma <= s_rho + 1e-8, f"S(sigma)={s_sigma!r} exceeds Gibbs entropy {s_rho!r}")
    f_rand = free_energy(random_density_matrix(h.dim, rng), h, bath)
    _expect(f_rand >= free_energy(rho, h, bath) - 1e-12, "random state beats Gibbs free energy")


def _entropy_unitary_invariance(rng):
    d = int(rng.integers(2, 9))
    rho = random_density_matrix(d, rng)
    u = random_unitary(d, rng)
    diff = abs(von_neumann_entropy(u @ rho.matrix @ u.conj().T) - von_neumann_entropy(rho))
    _expect(diff <= 1e-10, f"entropy changed by {diff:.3e} under a unitary")


# -- measurement ---------------------------------------------------------------

def _dephasing_entropy_monotone(rng):
    d = int(rng.choice([2, 3, 4]))
    rho = random_density_matrix(d, rng)
    basis = ProjectiveBasis.random(d, rng)
    out = nonselective_measure(rho, basis)
    ds = von_neumann_entropy(out) - von_neumann_entropy(rho)
    _expect(ds >= -1e-10, f"dephasing lowered entropy by {-ds:.3e}")
    if trace_distance(out, rho) > 1e-6:
        _expect(ds > 0, f"state changed but entropy did not increase (dS={ds:.3e})")


def _dephasing_idempotent(rng):
    d = int(rng.choice([2, 3, 4]))
    rho = random_density_matrix(d, rng)
    basis = ProjectiveBasis.random(d, rng)
    once = nonselective_measure(rho, basis)
    twice = nonselective_measure(once, basis)
    resid = np.max(np.abs(twice.matrix - once.matrix))
    _expect(resid <= 1e-12, f"second application moved the state by {resid:.3e}")


def _dephasing_energy_cost(rng):
    rho, basis, h, bath = random_scenario(rng)
    de = mean_energy(nonselective_measure(rho, basis), h) - mean_energy(rho, h)
    _expect(de > 0, f"dephasing a thermal state did not raise its energy (dE={de:.3e})")


def _random_qubit(rng) -> DensityMatrix:
    return random_density_matrix(2, rng)


def _register_independence(rng):
    rho = _random_qubit(rng)
    outs = [premeasure(rho, RegisterState.diagonal(float(rng.uniform()))).system for _ in range(3)]
    for o in outs[1:]:
        resid = np.max(np.abs(o.matrix - outs[0].matrix))
        _expect(resid <= 1e-10, f"reduced system depends on the register ({resid:.3e})")


def _bad_apple(rng):
    n = int(rng.integers(1, 11))
    states = [_random_qubit(rng) for _ in range(n)]
    reg = RegisterState.diagonal(float(rng.uniform()))
    run = bad_apple_sequence(states, reg)
    z = ProjectiveBasis.z()
    for i, (rho, out) in enumerate(zip(states, run.dephased)):
        resid = np.max(np.abs(out.matrix - nonselective_measure(rho, z).matrix))
        _expect(resid <= 1e-10, f"qubit {i}: residual {resid:.3e} vs direct dephasing")
    _expect(run.final_register.is_z_diagonal(1e-12), "register picked up coherence")


# -- engine cycle ---------------------------------------------------------------

GAUGES = ("raw", "match_energy", "ground_zero")


def _stroke_sum_assembly(rng):
    rho, basis, h, bath = random_scenario(rng)
    target = cycle.max_extractable_work(rho, nonselective_measure(rho, basis), h, bath)
    works = []
    for g in GAUGES:
        led = cycle.run_cycle(rho, basis, h, bath, gauge=g, check=False)
        w = led.stroke("sudden_quench").W_by_system + led.stroke("isothermal").W_by_system
        _expect(abs(w - target) <= 1e-10, f"gauge {g}: W_sudden + W_isotherm off by {w - target:.3e}")
        works.append(led.W_extracted)
    spread = max(works) - min(works)
    _expect(spread <= 1e-10, f"W_extracted depends on gauge (spread {spread:.3e})")


def _selective_bonus_identity(rng):
    rho, basis, h, bath = random_scenario(rng)
    rep = cycle.selective_work_analysis(rho, basis, h, bath)
    w_mean = math.fsum(o.probability * o.W for o in rep.outcomes)
    w_nonsel = cycle.max_extractable_work(rho, nonselective_measure(rho, basis), h, bath)
    bonus = bath.temperature * shannon_entropy([o.probability for o in rep.outcomes])
    resid = w_mean - w_nonsel - bonus
    _expect(abs(resid) <= 1e-10, f"selective - nonselective - T H(p) = {resid:.3e}")


def _selective_deficit(rng):
    rho, basis, h, bath = random_scenario(rng)
    rep = cycle.selective_work_analysis(rho, basis, h, bath)
    _, ds = cycle.measurement_deltas(rho, nonselective_measure(rho, basis), h)
    resid = rep.net_deficit - bath.temperature * ds
    _expect(abs(resid) <= 1e-10, f"selective net deficit - T dS_meas = {resid:.3e}")


def _deficit_nonnegative(rng):
    rho, basis, h, bath = random_scenario(rng)
    if rng.uniform() < 0.3:
        basis = ProjectiveBasis.eigenbasis(h)
    rho_p = nonselective_measure(rho, basis)
    led = cycle.run_cycle(rho, basis, h, bath, check=False)
    _expect(led.dW_lost >= 0, f"negative deficit {led.dW_lost:.3e}")
    commutes = trace_distance(rho, rho_p) <= 1e-8
    if commutes:
        _expect(led.dW_lost <= 1e-10, f"commuting measurement lost {led.dW_lost:.3e}")
    else:
        _expect(led.dW_lost > 0, "non-commuting measurement lost nothing")


def _permutation_invariance(rng):
    rho, basis, h, bath = random_scenario(rng)
    plain = cycle.run_cycle(rho, basis, h, bath, check=False)
    fixed = cycle.run_cycle(rho, basis, h, bath, permutation=True, check=False)
    diff = abs(plain.W_extracted - fixed.W_extracted)
    _expect(diff <= 1e-10, f"permutation changed W_extracted by {diff:.3e}")


def _cycle_closure(rng):
    rho, basis, h, bath = random_scenario(rng)
    led = cycle.run_cycle(rho, basis, h, bath, gauge=str(rng.choice(GAUGES)),
                          permutation=bool(rng.integers(2)), check=False)
    bad = led.violations()
    _expect(not bad, "; ".join(bad))


# -- oracle ---------------------------------------------------------------------

def _oracle_first_law(rng):
    _, _, a, bath = random_scenario(rng, dims=(3,))
    b = random_hermitian(3, rng)
    n = int(rng.integers(1, 500))
    res = simulate_isothermal(a, b, bath, IsothermalSchedule(n))
    _expect(abs(res.first_law_residual) <= 1e-12, f"first law off by {res.first_law_residual:.3e} at N={n}")
    ds = res.dS - (von_neumann_entropy(gibbs_state(b, bath)) - von_neumann_entropy(gibbs_state(a, bath)))
    _expect(abs(ds) <= 1e-10, f"entropy endpoint mismatch {ds:.3e}")


def _oracle_dissipation(rng):
    _, _, a, bath = random_scenario(rng)
    b = random_hermitian(a.dim, rng)
    n = int(rng.integers(1, 500))
    res = simulate_isothermal(a, b, bath, IsothermalSchedule(n))
    bound = reversible_work(a, b, bath)
    _expect(res.W_by_system <= bound + 1e-12, f"N={n} beats the reversible bound by {res.W_by_system - bound:.3e}")


def _oracle_convergence(rng):
    bath = HeatBath(1 / math.log(2))
    h = diag(0.0, 1.0)
    h_dual = diag(1.0, 1.0) * (bath.temperature * math.log(2))
    table = convergence_study(h_dual, h, bath, [100, 1000, 10000])
    slope = table.slope
    _expect(table.monotone, "oracle error does not decrease with N")
    _expect(slope is not None and -1.3 <= slope <= -0.7, f"log-log slope {slope}")
    res = simulate_full_cycle(gibbs_state(h, bath), ProjectiveBasis.x(), h, bath, IsothermalSchedule(10000))
    _expect(res.final_distance <= 1e-6, f"final state off by {res.final_distance:.3e}")


@dataclass(frozen=True)
class Suite:
    name: str
    check: Callable
    quick: int
    full: int


SUITES = (
    Suite("eigh_reconstruction", _eigh_reconstruction, 50, 1000),
    Suite("tensor_partial_trace_adjointness", _tensor_partial_trace, 50, 200),
    Suite("exp_log_roundtrip", _exp_log_roundtrip, 50, 200),
    Suite("gibbs_dual_roundtrip", _gibbs_dual_roundtrip, 40, 200),
    Suite("gibbs_gauge_invariance", _gibbs_gauge_invariance, 20, 100),
    Suite("gibbs_maximal_entropy", _gibbs_max_entropy, 20, 100),
    Suite("entropy_unitary_invariance", _entropy_unitary_invariance, 30, 200),
    Suite("dephasing_entropy_monotone", _dephasing_entropy_monotone, 100, 500),
    Suite("dephasing_idempotent", _dephasing_idempotent, 50, 200),
    Suite("dephasing_energy_cost", _dephasing_energy_cost, 20, 100),
    Suite("register_independence", _register_independence, 20, 100),
    Suite("bad_apple", _bad_apple, 5, 30),
    Suite("stroke_sum_and_gauge_cancellation", _stroke_sum_assembly, 30, 200),
    Suite("selective_shannon_bonus", _selective_bonus_identity, 30, 200),
    Suite("selective_net_deficit", _selective_deficit, 30, 200),
    Suite("deficit_nonnegative", _deficit_nonnegative, 30, 200),
    Suite("permutation_invariance", _permutation_invariance, 20, 200),
    Suite("cycle_closure", _cycle_closure, 30, 200),
    Suite("oracle_first_law", _oracle_first_law, 5, 30),
    Suite("oracle_dissipation_bound", _oracle_dissipation, 5, 30),
    Suite("oracle_convergence", _oracle_convergence, 1, 1),
)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    trials: int
    failures: tuple[str, ...]
    seconds: float

    @property
    def passed(self) -> bool:
        return not self.failures


def run_suites(depth: str = "quick", base_seed: int = 0, only: Optional[list[str]] = None,
               max_failures: int = 3) -> list[SuiteResult]:
    if depth not in ("quick", "full"):
        raise ValueError(f"depth must be 'quick' or 'full', not {depth!r}")
    results = []
    for suite in SUITES:
        if only and suite.name not in only:
            continue
        count = suite.quick if depth == "quick" else suite.full
        t0 = time.perf_counter()
        failures = []
        for i in range(count):
            try:
                suite.check(trial_rng(base_seed, suite.name, i))
            except Exception as exc:  # report every kind of breakage against its seed
                failures.append(f"seed={base_seed} trial={i}: {type(exc).__name__}: {exc}")
                if len(failures) >= max_failures:
                    break
        results.append(SuiteResult(suite.name, count, tuple(failures), time.perf_counter() - t0))
    return results


def format_results(results: list[SuiteResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name:<38s} {r.trials:>5d} trials  {r.seconds:6.2f}s")
        for f in r.failures:
            lines.append(f"      {r.name}: {f}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} invariant suites passed")
    return "\n".join(lines) + "\n"
