import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from sqcontrol.qcore import I2, SIGMA_X, SIGMA_Y, basis, fidelity_pure, hermitian_propagator, kron
from sqcontrol.search import (
    COST_TYPE_I,
    COST_TYPE_II,
    AdiabaticSpec,
    Family,
    MSSpec,
    SearchConfig,
    adiabatic_hamiltonian,
    aqc_search_run,
    build_general_rotation,
    cost_sqc,
    cost_type_i,
    cost_type_ii,
    default_adiabatic_dt,
    energy_cost,
    equalize_cost,
    grover_operator,
    grover_reference,
    lamb_dicke_check,
    ms_displacement,
    ms_effective_propagator,
    ms_numeric_evolve,
    ms_test_states,
    multiqubit_sqc_search,
    round_kraus,
    sqc_coupling,
    sqc_search_run,
)

PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


def same_ray(a, b, tol):
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < tol


# -- configuration ------------------------------------------------------------


def test_config_timing():
    cfg = SearchConfig(g=1, N=8, P=0.9)
    assert cfg.theta0 == pytest.approx(math.pi / 4)
    assert cfg.g * cfg.dT * cfg.weak_value * cfg.N == pytest.approx(math.pi / 4)
    assert cfg.T == pytest.approx(cfg.N * cfg.dT)
    with pytest.raises(ValueError, match=r"P must be in \(0,1\]"):
        SearchConfig(P=0)
    with pytest.raises(ValueError):
        SearchConfig(N=0)
    with pytest.raises(ValueError):
        SearchConfig(g=0)
    with pytest.raises(ValueError):
        SearchConfig(N_G=4, target=4)


# -- digital reference --------------------------------------------------------


def test_grover_reference_examples():
    theta = math.pi / 2
    ref = grover_reference(0, theta, (basis(2, 0), basis(2, 1)))
    np.testing.assert_allclose(ref, PLUS, atol=1e-15)
    assert fidelity_pure(basis(2, 0), ref) == pytest.approx(0.5)


@pytest.mark.parametrize("N_G", [2, 4, 8])
@pytest.mark.parametrize("N", range(0, 7))
def test_grover_reference_vs_operator(N_G, N):
    psi = np.full(N_G, 1 / math.sqrt(N_G), dtype=complex)
    rot = build_general_rotation(0, psi.real)
    theta = 2 * math.asin(1 / math.sqrt(N_G))
    G = grover_operator(psi, 0)
    lhs = np.linalg.matrix_power(G, N) @ psi
    rhs = grover_reference(N, theta, (rot.target_state, rot.complement))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


# -- general rotation ---------------------------------------------------------


def test_two_entry_rotation_is_sigma_y():
    rot = build_general_rotation(0, [1, 1])
    np.testing.assert_allclose(rot.sigma_y, SIGMA_Y, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31), st.floats(-3, 3))
def test_rotation_contract(N_G, seed, phi):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=N_G)
    amps[0] = abs(amps[0]) + 0.1
    rot = build_general_rotation(0, amps)
    psi = amps / np.linalg.norm(amps)
    np.testing.assert_allclose(rot.parameterized(rot.theta_half), psi, atol=1e-12)
    out = rot.rotate(phi, psi)
    np.testing.assert_allclose(out, rot.parameterized(rot.theta_half + phi), atol=1e-10)
    assert abs(np.vdot(rot.target_state, rot.complement)) < 1e-12
    np.testing.assert_allclose(rot.J_y, rot.J_y.conj().T, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**31))
def test_rotation_spectrum(N_G, seed):
    rng = np.random.default_rng(seed)
    amps = rng.random(N_G) + 0.05
    rot = build_general_rotation(1, amps)
    w = np.sort(np.linalg.eigvalsh(rot.sigma_y))
    np.testing.assert_allclose(w, [-1] + [0] * (N_G - 2) + [1], atol=1e-12)
    # null space is the complement of span{t, t~}
    q, _ = np.linalg.qr(np.column_stack([rot.target_state, rot.complement, rng.normal(size=(N_G, N_G - 2))]))
    for k in range(2, N_G):
        assert np.linalg.norm(rot.J_y @ q[:, k]) < 1e-12


def test_rotation_identity_and_pole():
    rot = build_general_rotation(0, [0.5] * 4)
    psi = np.full(4, 0.5, dtype=complex)
    np.testing.assert_allclose(rot.rotate(0.0, psi), psi, atol=1e-15)
    out = rot.rotate(math.pi / 2 - rot.theta_half, psi)
    np.testing.assert_allclose(out, basis(4, 0), atol=1e-10)


def test_rotation_rejections():
    with pytest.raises(ValueError):
        build_general_rotation(0, [1, 0, 0])
    with pytest.raises(ValueError):
        build_general_rotation(0, [0, 1, 1])
    with pytest.raises(ValueError):
        build_general_rotation(0, [1j, 1])


# -- selection-driven search --------------------------------------------------


@pytest.mark.parametrize("P", [0.5, 0.9, 0.99])
@pytest.mark.parametrize("N", [1, 2, 5, 16, 64])
def test_oracle_equivalence(P, N):
    cfg = SearchConfig(g=1, N=N, P=P)
    F, prob, psi = sqc_search_run(cfg)
    v = np.linalg.matrix_power(round_kraus(cfg), N) @ PLUS
    assert prob == pytest.approx(np.vdot(v, v).real, rel=1e-10)
    v = v / np.linalg.norm(v)
    assert same_ray(v, psi, 1e-10)
    assert F == pytest.approx(abs(v[0]) ** 2, abs=1e-10)


def test_unit_probability_single_round():
    F, prob, _ = sqc_search_run(SearchConfig(g=1, N=1, P=1.0))
    assert F == pytest.approx(1, abs=1e-14)
    assert prob == pytest.approx(1, abs=1e-14)


def test_fidelity_and_probability_limits():
    F = [sqc_search_run(SearchConfig(g=1, N=N, P=0.9))[0] for N in range(1, 17)]
    assert all(np.diff(F) > 0)
    _, prob, _ = sqc_search_run(SearchConfig(g=1, N=64, P=0.9))
    assert abs(prob - 0.9) / 0.9 < 0.01


def test_coupling_propagator():
    g, t = 1.3, 0.4
    U = hermitian_propagator(sqc_coupling(g), t)
    np.testing.assert_allclose(U, math.cos(g * t) * np.eye(4) + 1j * math.sin(g * t) * kron(SIGMA_Y, SIGMA_Y),
                               atol=1e-14)


@pytest.mark.parametrize("N", [1, 3, 9])
def test_multiqubit_reduces_to_two_entry(N):
    cfg = SearchConfig(g=1, N=N, P=0.9)
    F2, p2, _ = sqc_search_run(cfg)
    Fm, pm = multiqubit_sqc_search(cfg)
    assert abs(F2 - Fm) < 1e-12 and abs(p2 - pm) < 1e-12


def test_multiqubit_large_N():
    F, _ = multiqubit_sqc_search(SearchConfig(g=1, N=64, P=0.9, N_G=4))
    assert F > 0.999


def test_complement_untouched_by_coupling():
    rot = build_general_rotation(0, [0.6, 0.5, 0.4, 0.3, 0.2])
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(np.column_stack([rot.target_state, rot.complement, rng.normal(size=(5, 3))]))
    outside = q[:, 3]
    U = hermitian_propagator(-1.0 * kron(SIGMA_Y, rot.sigma_y), 0.37)
    state = np.kron(np.array([0.6, 0.8j]), outside)
    np.testing.assert_allclose(U @ state, state, atol=1e-12)


# -- adiabatic baselines ------------------------------------------------------


def test_adiabatic_limits():
    assert aqc_search_run(AdiabaticSpec(Family.TYPE_II, 2.0, 200.0)) > 0.999
    assert aqc_search_run(AdiabaticSpec(Family.TYPE_I, 2.0, 200.0)) > 0.999
    for fam in Family:
        assert aqc_search_run(AdiabaticSpec(fam, 1.0, 1e-4)) == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("family", list(Family))
def test_adiabatic_dt_halving(family):
    spec = AdiabaticSpec(family, 1.7, 3.0)
    dt = default_adiabatic_dt(spec.T)
    f1 = aqc_search_run(spec, dt)
    f2 = aqc_search_run(spec, dt / 2)
    assert abs(f1 - f2) < 1e-8


def test_adiabatic_spec_validation():
    with pytest.raises(ValueError):
        AdiabaticSpec(Family.TYPE_I, 0.0, 1.0)
    with pytest.raises(ValueError):
        AdiabaticSpec(Family.TYPE_I, 1.0, -1.0)


def test_type_i_endpoints():
    H = adiabatic_hamiltonian(AdiabaticSpec(Family.TYPE_I, 1.5, 2.0))
    np.testing.assert_allclose(H(0.0), 1.5 * SIGMA_X)
    np.testing.assert_allclose(H(2.0), 1.5 * np.diag([1, -1]))


# -- energy cost --------------------------------------------------------------


def test_cost_closed_forms():
    assert COST_TYPE_I == pytest.approx(1.1478, abs=1e-4)
    assert COST_TYPE_II == pytest.approx(0.9120, abs=1e-4)
    g = 0.8
    assert energy_cost(lambda t: sqc_coupling(g), 2.0) == pytest.approx(cost_sqc(g), rel=1e-14)
    for amp, T in [(1.0, 1.0), (2.5, 7.0)]:
        c1 = energy_cost(adiabatic_hamiltonian(AdiabaticSpec(Family.TYPE_I, amp, T)), T)
        c2 = energy_cost(adiabatic_hamiltonian(AdiabaticSpec(Family.TYPE_II, amp, T)), T)
        assert c1 == pytest.approx(cost_type_i(amp), rel=1e-6)
        assert c2 == pytest.approx(cost_type_ii(amp), rel=1e-6)
    with pytest.raises(ValueError):
        energy_cost(lambda t: I2, 0.0)


def test_equalize_cost():
    omega, K = equalize_cost(1.0)
    assert omega == pytest.approx(1.7425, abs=1e-4)
    assert K == pytest.approx(2.1930, abs=1e-4)
    for fam, amp in ((Family.TYPE_I, omega), (Family.TYPE_II, K)):
        c = energy_cost(adiabatic_hamiltonian(AdiabaticSpec(fam, amp, 3.0)), 3.0)
        assert c == pytest.approx(2.0, rel=1e-6)
    with pytest.raises(ValueError):
        equalize_cost(0.0)


# -- Molmer-Sorensen gate -----------------------------------------------------


def _jy():
    return kron(0.5 * SIGMA_Y, I2) + kron(I2, 0.5 * SIGMA_Y)


def test_ms_regime():
    spec = MSSpec.entangling()
    assert spec.epsilon == pytest.approx(2 * spec.eta * spec.Omega)
    assert (spec.eta * spec.Omega) ** 2 * spec.t_ms / spec.epsilon == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        MSSpec(0.05, 0.02, 1.0, 1.0)


def test_ms_propagator_closes_at_gate_time():
    spec = MSSpec.entangling(n_max=12)
    assert abs(ms_displacement(spec, spec.t_ms)) < 1e-15
    U = ms_effective_propagator(spec, spec.t_ms)
    spin = expm(1j * math.pi / 2 * _jy() @ _jy())
    np.testing.assert_allclose(U, np.kron(spin, np.eye(12)), atol=1e-12)
    np.testing.assert_allclose(ms_effective_propagator(spec, 0.0), np.eye(48), atol=1e-15)


def test_ms_propagator_unitary_mid_gate():
    spec = MSSpec.entangling(n_max=20)
    U = ms_effective_propagator(spec, spec.t_ms / 2)
    assert np.max(np.abs(U.conj().T @ U - np.eye(80))) < 1e-10


def test_ms_propagator_truncation_guard():
    spec = MSSpec(0.5, 0.5, 1.0, 0.9, n_max=4)
    with pytest.raises(ValueError, match="n_max"):
        ms_effective_propagator(spec, spec.t_ms / 2)


def test_ms_carrier_only_is_near_identity():
    spec = MSSpec(0.0, 0.02, 1.0, 0.99, n_max=4)
    states = np.array(ms_test_states(4)).T
    out = ms_numeric_evolve(spec, states, spec.t_ms, 0.05)
    fids = [fidelity_pure(states[:, k], out[:, k]) for k in range(states.shape[1])]
    assert np.mean(fids) >= 0.99


def test_lamb_dicke_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lamb_dicke_check(MSSpec.entangling())
    with pytest.warns(UserWarning, match="Lamb-Dicke"):
        lamb_dicke_check(MSSpec(0.4, 0.02, 1.0, 0.99))
