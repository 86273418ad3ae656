import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wprelay.chance import (MomentAmbiguitySet, chance_lmi_blocks, empirical_violation, fragment_feasible,
                            gaussian_sampler, markov_bound, max_feasible_scale, worst_case_violation)
from wprelay.validation import random_ambiguity


def markov_set(zeta=1.0, phi_bar=2.0):
    # N = 1, u = 0, E|z|^2 = 1
    return MomentAmbiguitySet(np.diag([1.0, 1.0]), phi_bar, zeta)


def two_point_sup(second_moment: float, threshold: float, grid: int = 2001) -> float:
    """sup P(w >= threshold) over two-point laws of w >= 0 with E w = second_moment (brute force)."""
    best = 0.0
    for a in np.linspace(threshold, 20 * threshold, grid):  # the atom that crosses the threshold
        for b in (0.0, 0.5 * second_moment):
            if a <= b:
                continue
            q = (second_moment - b) / (a - b)
            if 0 <= q <= 1:
                best = max(best, q)
    return best


def test_zero_vector():
    assert worst_case_violation(np.zeros(1), markov_set()) == 0.0


def test_markov_tight_case():
    got = worst_case_violation(np.array([1.0]), markov_set())
    assert got == pytest.approx(0.5, abs=1e-4)
    assert got == pytest.approx(two_point_sup(1.0, 2.0), abs=1e-4)
    assert markov_bound([1.0], np.eye(1), 2.0) == 0.5


@settings(max_examples=30)
@given(st.floats(0.1, 3.0), st.floats(0.2, 5.0))
def test_single_relay_equals_markov(p, phi):
    amb = MomentAmbiguitySet(np.diag([1.0, 1.0]), phi, 1.0)
    assert worst_case_violation(np.array([np.sqrt(p)]), amb) == pytest.approx(min(1.0, p / phi), abs=1e-6)


def test_rejects_negative_c():
    with pytest.raises(ValueError):
        worst_case_violation(np.array([-1.0]), markov_set())


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(1.0, 4.0))
def test_monotone_in_scaling(seed, t):
    rng = np.random.default_rng(seed)
    amb, _, _ = random_ambiguity(rng, int(rng.integers(1, 4)))
    c = rng.uniform(0, 1.5, amb.N)
    assert worst_case_violation(t * c, amb) >= worst_case_violation(c, amb) - 1e-6


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 3.0))
def test_homogeneity(seed, t):
    rng = np.random.default_rng(seed)
    amb, _, _ = random_ambiguity(rng, int(rng.integers(1, 4)))
    c = rng.uniform(0, 1.5, amb.N)
    amb_t = dataclasses.replace(amb, phi_bar=amb.phi_bar * t * t)
    a, b = worst_case_violation(c, amb), worst_case_violation(t * c, amb_t)
    assert abs(a - b) <= 1e-5
    assert 0.0 <= a <= 1.0


def test_fragment_structure_single_relay():
    prog = chance_lmi_blocks(1, markov_set(0.5)).build()
    kinds = {b.name: (b.kind, b.dim) for b in prog.blocks}
    assert kinds["cue0_M"] == ("psd", 2) and kinds["cue0_nu"] == ("nonneg", 1)
    assert len(prog.constraints) + len(prog.lmis) == 2


def test_fragment_threshold_at_worst_case_probability():
    assert fragment_feasible([1.0], markov_set(0.5))
    assert not fragment_feasible([1.0], markov_set(0.49))


@pytest.mark.parametrize("p", [0.0, 1.0, 1e3, 1e8])
def test_fragment_vacuous_at_zeta_one(p):
    assert fragment_feasible([p], markov_set(1.0))


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_dual_and_homogenized_forms_agree(seed, zeta):
    rng = np.random.default_rng(seed)
    amb, _, _ = random_ambiguity(rng, int(rng.integers(1, 4)))
    amb = dataclasses.replace(amb, zeta=zeta)
    c = rng.uniform(0, 1.5, amb.N)
    wc = worst_case_violation(c, amb)
    if abs(wc - zeta) > 1e-4:
        assert fragment_feasible(c**2, amb) == (wc <= zeta)


def test_max_feasible_scale_single_relay():
    # worst case p s / phi = zeta gives s = zeta phi / p
    assert max_feasible_scale([1.0], markov_set(0.3)) == pytest.approx(0.6, rel=1e-6)
    assert max_feasible_scale([1.0], markov_set(1.0)) == np.inf


def test_empirical_zero_power():
    s = gaussian_sampler(np.zeros(2), np.eye(2))
    assert empirical_violation(np.zeros(2), s, 1.0, 1000, np.random.default_rng(0)).probability == 0.0


def test_empirical_rejects_no_trials():
    with pytest.raises(ValueError):
        empirical_violation(np.ones(1), gaussian_sampler(np.zeros(1), np.eye(1)), 1.0, 0, np.random.default_rng(0))


def test_gaussian_dominated_by_worst_case():
    rng = np.random.default_rng(5)
    for _ in range(10):
        amb, u, S = random_ambiguity(rng, 3)
        c = rng.uniform(0, 1.5, 3)
        est = empirical_violation(c**2, gaussian_sampler(u, S), amb.phi_bar, 100_000, rng)
        assert est.probability <= worst_case_violation(c, amb) + 3 * est.stderr


def test_doubling_power_with_common_random_numbers():
    rng = np.random.default_rng(6)
    for _ in range(10):
        amb, u, S = random_ambiguity(rng, 2)
        p = rng.uniform(0, 2, 2)
        seed = int(rng.integers(1 << 31))
        a = empirical_violation(p, gaussian_sampler(u, S), amb.phi_bar, 20_000, np.random.default_rng(seed))
        b = empirical_violation(2 * p, gaussian_sampler(u, S), amb.phi_bar, 20_000, np.random.default_rng(seed))
        assert b.probability >= a.probability


def test_gaussian_sampler_moments():
    rng = np.random.default_rng(7)
    _, u, S = random_ambiguity(rng, 2)
    z = gaussian_sampler(u, S)(rng, 200_000)
    assert np.allclose(z.mean(0), u, atol=0.01)
    zc = z - u
    assert np.allclose(zc.T @ zc.conj() / len(z), S, atol=0.02)


def test_ambiguity_set_validation():
    with pytest.raises(ValueError):
        MomentAmbiguitySet(np.diag([1.0, 2.0]), 1.0)
    with pytest.raises(ValueError):
        MomentAmbiguitySet(np.diag([-1.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        MomentAmbiguitySet(np.eye(2), 1.0, 0.0)
