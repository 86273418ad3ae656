import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import ps_grid_oracle, single_relay_scenario
from wprelay.ps import (initial_ps_vertex, optimize_ps, ps_feasibility_sdp, ps_gamma, ps_snr, ps_throughput,
                        received_power, recover_ps_ratios, theta_star, verify_ps_solution)
from wprelay.scenario import NetworkScenario, draw_channels
from wprelay.validation import Instance, check_ps_normality, check_ps_recovery, check_theta_rule


@pytest.fixture(scope="module")
def solved():
    inst = Instance(NetworkScenario(), seed=0, eps=1e-3, max_iter=100)
    return inst, inst.ps


def test_theta_star_examples():
    assert theta_star((4.0, 1.0)) == pytest.approx(0.5)
    assert theta_star((1.0, 1.0)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        theta_star((0.0, 1.0))
    with pytest.raises(ValueError):
        theta_star((1.0, -1.0))


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 1e3), st.floats(0, 1e3))
def test_relaxed_snr_monotone(X, Y, dX, dY):
    assert ps_gamma((X + dX, Y + dY)) >= ps_gamma((X, Y)) * (1 - 1e-12)


def test_zero_target_feasible():
    sc = NetworkScenario()
    r = draw_channels(sc, np.random.default_rng(0))
    ok, wit, _ = ps_feasibility_sdp(r, (1.0, 0.0), 1.0, sc)
    assert ok and np.all(wit.kappa == 0)


def test_zero_signal_lmi_feasible():
    # with kappa = 0 the 2x2 LMI only asks p theta^2 g^2 >= 0, so the SDP is solvable at any theta
    sc = NetworkScenario()
    r = draw_channels(sc, np.random.default_rng(1))
    ok, wit, q_up = ps_feasibility_sdp(r, (1.0, 1e-9), 1.0, sc, theta=1e-6)
    assert wit is not None and wit.q >= 0 and q_up >= wit.q


def test_witness_satisfies_program():
    sc = NetworkScenario()
    r = draw_channels(sc, np.random.default_rng(2))
    z = initial_ps_vertex(r, sc) * 0.01
    _, wit, q_up = ps_feasibility_sdp(r, z, 1.0, sc)
    g2 = np.abs(r.g) ** 2
    F = r.F
    fw = np.real(np.einsum("kn,kl,ln->n", F.conj(), wit.W, F))
    fwb = np.real(np.einsum("kn,kl,ln->n", F.conj(), wit.Wbar, F))
    tol = 1e-6 * (1 + sc.p_o)
    assert np.all(wit.p <= sc.eta * sc.p_o * fwb + tol)
    assert np.all(wit.p * wit.theta**2 * g2 >= wit.kappa * (wit.kappa + 1) * (1 - 1e-5) - 1e-6)
    assert np.all(wit.kappa <= sc.p_o * (fw - fwb) + tol)
    assert np.real(np.trace(wit.W)) <= 1 + 1e-7 and np.real(np.trace(wit.Wbar)) <= 1 + 1e-7
    assert q_up >= wit.q


def test_ratio_recovery_examples():
    rng = np.random.default_rng(3)
    F = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    L = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    W = L @ L.conj().T
    W /= np.real(np.trace(W))
    assert np.allclose(recover_ps_ratios(W, np.zeros((3, 3)), F), 0.0)
    assert np.allclose(recover_ps_ratios(W, W, F), 1.0)
    assert np.allclose(recover_ps_ratios(W, 0.3 * W, F), 0.3)


def test_ratio_recovery_dead_relay(caplog):
    F = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    W = np.diag([1.0, 0.0]).astype(complex)
    with caplog.at_level(logging.WARNING):
        rho = recover_ps_ratios(W, 0.5 * W, F)
    assert rho[1] == 0.0 and rho[0] == pytest.approx(0.5)
    assert "receives no power" in caplog.text


def test_ratio_recovery_clamp(caplog):
    F = np.eye(2, dtype=complex)
    W = np.diag([0.5, 0.5]).astype(complex)
    with caplog.at_level(logging.WARNING):
        rho = recover_ps_ratios(W, np.diag([0.6, 0.5]).astype(complex), F)
    assert rho[0] == 1.0
    assert "clamped" in caplog.text


def test_throughput_conventions():
    assert ps_throughput(3.0) == pytest.approx(1.0)
    assert ps_throughput(3.0, half_slot=False) == pytest.approx(2.0)


def test_vanishing_hap_power():
    sc = NetworkScenario(p_o_mw=1e-6)
    sol = optimize_ps(sc, draw_channels(sc, np.random.default_rng(0)), eps=1e-6)
    assert sol.throughput < 1e-6


def test_solution_invariants(solved):
    inst, sol = solved
    sc, r = inst.scenario, inst.realization
    assert np.all((sol.rho >= 0) & (sol.rho <= 1))
    assert verify_ps_solution(sol, sc, r)["ok"]
    assert sol.gamma == pytest.approx(ps_snr(sol.rho, sol.p, sol.W_p, r, sc.p_o))
    info = (1 - sol.rho) * received_power(r, sol.W_p, sc.p_o)
    if sol.rank_one:
        assert np.all(sol.kappa <= info + 1e-6 * (1 + info))
    assert sol.gamma >= sol.gamma_relaxed - 1e-6


def test_recovery_check(solved):
    inst, sol = solved
    ok, detail = check_ps_recovery(sol, inst.scenario, inst.realization)
    assert ok, detail


def test_normality(solved):
    inst, _ = solved
    ok, detail = check_ps_normality(inst, 30, np.random.default_rng(5))
    assert ok, detail


def test_theta_rule(solved):
    inst, _ = solved
    ok, detail = check_theta_rule(inst, 15, np.random.default_rng(6))
    assert ok, detail


def test_trace_bounds(solved):
    _, sol = solved
    prev = np.inf
    for row in sol.trace.rows:
        assert row.r_lower <= row.r_upper and row.r_upper <= prev + 1e-12
        prev = row.r_upper


@pytest.mark.parametrize("seed", [0, 1])
def test_single_relay_matches_grid(seed):
    sc = single_relay_scenario(zeta=1.0, max_iter=80)
    r = draw_channels(sc, np.random.default_rng(seed))
    ref = ps_grid_oracle(sc, r)
    assert optimize_ps(sc, r).throughput == pytest.approx(ref, rel=1e-3)


@settings(max_examples=5)
@given(st.integers(0, 2**32 - 1))
def test_single_relay_chance_matches_grid(seed):
    sc = single_relay_scenario(zeta=0.3, max_iter=80)
    r = draw_channels(sc, np.random.default_rng(seed))
    ref = ps_grid_oracle(sc, r)
    assert optimize_ps(sc, r).throughput == pytest.approx(ref, rel=1e-3)
