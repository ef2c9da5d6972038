import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from measengine.errors import DimensionError, DomainError
from measengine.linalg import SIGMA_X, basis_vector, tensor, trace_distance
from measengine.measurement import (
    ProjectiveBasis,
    RegisterState,
    bad_apple_sequence,
    cnot_unitary,
    landauer_reset_cost,
    nonselective_measure,
    premeasure,
    register_readout,
    selective_measure,
)
from measengine.states import (
    HeatBath,
    maximally_mixed,
    pure_state,
    random_density_matrix,
    random_full_rank_state,
    von_neumann_entropy,
)

LN2, LN3 = math.log(2), math.log(3)
PLUS = np.array([1, 1]) / math.sqrt(2)


def brute_dephase(rho, basis):
    # independent oracle: explicit sum of P rho P
    m = np.asarray(rho)
    return sum(np.outer(v, v.conj()) @ m @ np.outer(v, v.conj()) for v in basis.vectors)


def test_basis_invariants(rng):
    for b in (ProjectiveBasis.z(3), ProjectiveBasis.x(2), ProjectiveBasis.x(4),
              ProjectiveBasis.angle(0.4), ProjectiveBasis.random(5, rng)):
        ps = b.projectors
        np.testing.assert_allclose(sum(ps), np.eye(b.dim), atol=1e-12)
        for i, p in enumerate(ps):
            for j, q in enumerate(ps):
                np.testing.assert_allclose(p @ q, p if i == j else 0 * p, atol=1e-12)


def test_basis_rejects_non_orthonormal():
    with pytest.raises(DomainError):
        ProjectiveBasis([[1, 0], [1, 1]])


def test_angle_family_endpoints():
    np.testing.assert_allclose(ProjectiveBasis.angle(0).unitary, np.eye(2), atol=1e-15)
    x = ProjectiveBasis.x()
    a = ProjectiveBasis.angle(math.pi / 2)
    for u, v in zip(x.vectors, a.vectors):
        assert abs(abs(np.vdot(u, v)) - 1) < 1e-12


def test_nonselective_examples(rng):
    rho = random_full_rank_state(3, rng)
    out = nonselective_measure(rho, ProjectiveBasis(rho.eigenvectors.T))
    assert trace_distance(out, rho) < 1e-12
    out = nonselective_measure(np.diag([2 / 3, 1 / 3]), ProjectiveBasis.x())
    np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)
    out = nonselective_measure(pure_state(PLUS), ProjectiveBasis.z())
    np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)


def test_nonselective_matches_brute_force(rng):
    for d in (2, 3, 4):
        rho = random_density_matrix(d, rng)
        b = ProjectiveBasis.random(d, rng)
        np.testing.assert_allclose(nonselective_measure(rho, b).matrix, brute_dephase(rho, b), atol=1e-12)


def test_nonselective_dimension_mismatch():
    with pytest.raises(DimensionError):
        nonselective_measure(maximally_mixed(3), ProjectiveBasis.z(2))


def test_selective_examples():
    outs = selective_measure(pure_state([0, 1]), ProjectiveBasis.z())
    np.testing.assert_allclose([o.probability for o in outs], [0, 1], atol=1e-15)
    outs = selective_measure(np.diag([2 / 3, 1 / 3]), ProjectiveBasis.x())
    np.testing.assert_allclose([o.probability for o in outs], [0.5, 0.5], atol=1e-15)
    for o, v in zip(outs, ProjectiveBasis.x().vectors):
        assert o.post_state.is_pure()
        np.testing.assert_allclose(o.post_state.matrix, np.outer(v, v.conj()), atol=1e-12)


def test_cnot_action():
    u = cnot_unitary().matrix
    # index convention |system, register>, P+ = |0><0| flips the register
    np.testing.assert_allclose(u @ basis_vector(4, 0), basis_vector(4, 1))
    np.testing.assert_allclose(u @ basis_vector(4, 2), basis_vector(4, 2))
    np.testing.assert_allclose(u @ u, np.eye(4))


def test_premeasure_plus_with_ground_register_is_bell():
    out = premeasure(pure_state(PLUS), RegisterState(pure_state([1, 0])))
    psi = (basis_vector(4, 1) + basis_vector(4, 2)) / math.sqrt(2)
    np.testing.assert_allclose(out.joint.matrix, np.outer(psi, psi.conj()), atol=1e-12)
    np.testing.assert_allclose(out.system.matrix, np.eye(2) / 2, atol=1e-12)


def test_premeasure_plus_with_mixed_register():
    # state-vector expansion: CNOT (|+><+| x I/2) CNOT^H = (II + XX)/4, which carries X-X correlations
    out = premeasure(pure_state(PLUS), RegisterState(maximally_mixed(2)))
    expect = (np.eye(4) + tensor(SIGMA_X, SIGMA_X)) / 4
    np.testing.assert_allclose(out.joint.matrix, expect, atol=1e-12)
    np.testing.assert_allclose(out.system.matrix, np.eye(2) / 2, atol=1e-12)
    np.testing.assert_allclose(out.register.state.matrix, np.eye(2) / 2, atol=1e-12)
    # once the register is read out in z, the pair is in the product I/2 x I/2
    np.testing.assert_allclose(register_readout(out.joint).matrix, np.eye(4) / 4, atol=1e-12)


def test_premeasure_any_z_diagonal_register_dephases(rng):
    z = ProjectiveBasis.z()
    for _ in range(20):
        rho = random_density_matrix(2, rng)
        reg = RegisterState.diagonal(float(rng.uniform()))
        np.testing.assert_allclose(premeasure(rho, reg).system.matrix, brute_dephase(rho, z), atol=1e-10)


def test_premeasure_rejects_qutrit():
    with pytest.raises(DimensionError):
        premeasure(maximally_mixed(3), RegisterState(maximally_mixed(2)))
    with pytest.raises(DimensionError):
        RegisterState(maximally_mixed(3))


def test_bad_apple_examples(rng):
    rho = random_density_matrix(2, rng)
    reg = RegisterState.diagonal(0.3)
    run = bad_apple_sequence([rho], reg)
    step = premeasure(rho, reg)
    np.testing.assert_allclose(run.dephased[0].matrix, step.system.matrix, atol=1e-15)
    np.testing.assert_allclose(run.final_register.state.matrix, step.register.state.matrix, atol=1e-15)

    states = [random_density_matrix(2, rng) for _ in range(12)]
    run = bad_apple_sequence(states, RegisterState(maximally_mixed(2)))
    np.testing.assert_allclose(run.final_register.state.matrix, np.eye(2) / 2, atol=1e-12)

    states = states[:3]
    run = bad_apple_sequence(states, RegisterState.diagonal(0.9))
    for rho, out in zip(states, run.dephased):
        np.testing.assert_allclose(out.matrix, brute_dephase(rho, ProjectiveBasis.z()), atol=1e-10)
    assert run.final_register.is_z_diagonal(1e-12)


def test_bad_apple_rejects_coherent_register():
    with pytest.raises(DomainError):
        bad_apple_sequence([maximally_mixed(2)], RegisterState(pure_state(PLUS)))


def test_landauer_examples():
    assert landauer_reset_cost([1.0, 0.0], HeatBath(2.0)) == 0
    assert landauer_reset_cost([0.5, 0.5], HeatBath(2.0)) == pytest.approx(2 * LN2)
    assert landauer_reset_cost([2 / 3, 1 / 3], HeatBath(1.0)) == pytest.approx(LN3 - 2 / 3 * LN2)


@settings(max_examples=60, deadline=None)
@given(d=st.integers(2, 4), seed=st.integers(0, 2**32 - 1))
def test_dephasing_entropy_monotone_and_idempotent(d, seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(d, rng)
    b = ProjectiveBasis.random(d, rng)
    once = nonselective_measure(rho, b)
    twice = nonselective_measure(once, b)
    np.testing.assert_allclose(twice.matrix, once.matrix, atol=1e-12)
    ds = von_neumann_entropy(once) - von_neumann_entropy(rho)
    assert ds >= -1e-10
    if trace_distance(rho, once) > 1e-6:
        assert ds > 0
