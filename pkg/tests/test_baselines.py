import numpy as np
import pytest

from oracles import single_relay_scenario
from wprelay.baselines import (SchemeResult, brs_select, energy_efficiency, from_ps, from_ts, optimize_brs,
                               run_scheme)
from wprelay.chance import ambiguity_sets, empirical_violation, gaussian_sampler
from wprelay.ps import optimize_ps
from wprelay.scenario import ChannelRealization, NetworkScenario, assemble_sigma, draw_channels
from wprelay.ts import optimize_ts
from wprelay.validation import Instance, check_baselines


@pytest.fixture(scope="module")
def inst():
    return Instance(NetworkScenario(p_o_mw=30.0), seed=2, eps=1e-3, max_iter=100)


def test_single_relay_selects_zero():
    sc = single_relay_scenario()
    assert brs_select(draw_channels(sc, np.random.default_rng(0))) == 0


def test_tie_goes_to_lowest_index():
    F = np.ones((2, 2), dtype=complex)
    u = np.zeros((1, 2))
    S = np.eye(2)[None]
    r = ChannelRealization(F, np.array([1.0, 1.0], dtype=complex), u, S, assemble_sigma(u, S))
    assert brs_select(r) == 0


def test_nearest_relay_usually_selected():
    sc = NetworkScenario()
    picks = np.array([brs_select(draw_channels(sc, np.random.default_rng(s))) for s in range(1000)])
    counts = np.bincount(picks, minlength=3)
    assert counts[0] > 500 and counts[0] == counts.max()


@pytest.mark.parametrize("scheme", ["ts", "ps"])
def test_single_relay_brs_is_plain_optimization(scheme):
    sc = single_relay_scenario(epsilon=1e-3, max_iter=60)
    r = draw_channels(sc, np.random.default_rng(0))
    brs = optimize_brs(sc, r, scheme)
    ref = optimize_ts(sc, r) if scheme == "ts" else optimize_ps(sc, r)
    assert brs.throughput == pytest.approx(ref.throughput, rel=1e-6, abs=1e-9)
    assert brs.selected == 0


def test_unknown_scheme():
    sc = single_relay_scenario()
    with pytest.raises(ValueError):
        optimize_brs(sc, draw_channels(sc, np.random.default_rng(0)), "af")
    with pytest.raises(ValueError):
        run_scheme("OPT-AF", sc, draw_channels(sc, np.random.default_rng(0)))


def test_efficiency_identity():
    res = SchemeResult("OPT-TS", 2.0, 3.0, np.array([0.5, 0.5, 0.0]), np.zeros(3), 1, True, t=0.3)
    assert res.energy_efficiency == pytest.approx(2.0)
    assert res.w == pytest.approx(0.4)
    assert energy_efficiency(1.0, 0.0) == pytest.approx(1e12)


def test_dominance_and_identity(inst):
    ok, detail = check_baselines(inst)
    assert ok, detail


def test_brs_other_relays_silent(inst):
    sc = inst.scenario.replace(epsilon=1e-3, max_iter=100)
    for scheme in ("ts", "ps"):
        res = optimize_brs(sc, inst.realization, scheme)
        others = np.delete(res.p, res.selected)
        assert np.all(others == 0)
        if res.rho is not None:
            assert np.all(np.delete(res.rho, res.selected) == 0)


def test_silent_relays_add_no_interference(inst):
    r = inst.realization
    p_full = np.asarray(inst.ts.p)
    n = int(np.argmax(p_full))
    p_one = np.zeros_like(p_full)
    p_one[n] = p_full[n]
    for m, amb in enumerate(ambiguity_sets(r, inst.scenario)):
        sampler = gaussian_sampler(r.u[m], r.S[m])
        one = empirical_violation(p_one, sampler, amb.phi_bar, 50_000, np.random.default_rng(m))
        full = empirical_violation(p_full, sampler, amb.phi_bar, 50_000, np.random.default_rng(m))
        assert one.probability <= full.probability


def test_result_wrappers(inst):
    ts, ps = from_ts(inst.ts), from_ps(inst.ps)
    assert ts.scheme == "OPT-TS" and ts.t == inst.ts.t and ts.rho is None
    assert ps.scheme == "OPT-PS" and ps.t is None and ps.w is None
    assert np.allclose(ps.rho, inst.ps.rho)
