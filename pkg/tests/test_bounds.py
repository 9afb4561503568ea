import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subsvms.bounds import (
    BoundsInput,
    clean_point_probs,
    epsilon_bound,
    eta_exact,
    eta_hoeffding,
    eta_surrogate,
    evaluate_chain,
    generalization_bound,
    phi,
    rho_beta_budget,
    rho_beta_budget_subbagging,
    s_min_appendix,
    s_min_hessian,
    s_min_main,
    translate_error_rate,
    vote_error_bound,
    worst_case_clean_probs,
)
from _oracles import binomial_eta


def _inputs(**kw):
    base = dict(
        r=8, delta=0.1, theta=0.1, rho=0.5, beta=0.25, s=32, p=0.5, radius=1.0, margin=0.5
    )
    base.update(kw)
    return BoundsInput(**base)


# --- generalization bound ---------------------------------------------------


def test_generalization_hand_value():
    # n = e^2, R = gamma, no slack, delta = 1/e, c = 1:
    # (1/e^2) * (1 * (log e^2)^2 + 1) = 5 e^-2
    val = generalization_bound(math.e**2, 1.0, 1.0, 0.0, math.exp(-1.0), 1.0)
    assert val.value == pytest.approx(5.0 * math.exp(-2.0), rel=1e-12)
    assert not val.vacuous


def test_generalization_decays_in_n():
    vals = [generalization_bound(n, 1.0, 0.5, 0.0, 0.05).value for n in (10**3, 10**4, 10**5)]
    assert vals[0] > vals[1] > vals[2]


def test_generalization_monotone_in_slack():
    lo = generalization_bound(100, 1.0, 0.5, 1.0, 0.1).value
    hi = generalization_bound(100, 1.0, 0.5, 2.0, 0.1).value
    assert hi > lo


# --- epsilon ----------------------------------------------------------------


def test_epsilon_at_s_equal_r_has_no_slack_term():
    inp = _inputs(s=16, r=16)
    got = epsilon_bound(inp)
    ls = math.log(16)
    expected = (1.0 / 16) * (1.0 / 0.25 * ls * ls + math.log(10.0))
    assert got.value == pytest.approx(expected, rel=1e-12)
    assert got.regularity_form == pytest.approx(inp.theta, rel=1e-12)


def test_epsilon_vacuous_case():
    got = epsilon_bound(_inputs(s=64, r=32, radius=1.0, margin=1.0, delta=0.1))
    ls = math.log(64)
    expected = (1.0 / 64) * ((1.0 + 4.0 * 32) * ls * ls + math.log(10.0))
    assert got.value == pytest.approx(expected, rel=1e-12)
    assert round(got.value, 2) == 34.9
    assert got.vacuous


@settings(max_examples=100, deadline=None)
@given(
    s=st.integers(8, 200),
    r_off=st.integers(0, 8),
    theta=st.floats(0.01, 0.49),
    ratio=st.floats(0.2, 5.0),
)
def test_regularity_form_bounds_clean_term(s, r_off, theta, ratio):
    # replacing the clean-subset term by theta only helps when theta really
    # bounds that term; verify the split reproduces value - clean + theta
    r = max(1, s - r_off)
    inp = _inputs(s=s, r=r, theta=theta, radius=ratio, margin=1.0)
    got = epsilon_bound(inp)
    ls = math.log(s)
    clean = (1.0 / s) * (ratio**2 / 1.0 * ls * ls + math.log(1.0 / inp.delta))
    assert got.regularity_form == pytest.approx(got.value - clean + theta, rel=1e-9, abs=1e-12)


def test_epsilon_requires_s_at_least_r():
    with pytest.raises(ValueError):
        epsilon_bound(_inputs(s=8, r=16))


# --- error-rate translation and phi ----------------------------------------


def test_translate_examples():
    assert translate_error_rate(0.1, 0.5) == pytest.approx(0.2)
    assert translate_error_rate(0.1, 0.25) == pytest.approx(0.4)
    assert translate_error_rate(0.0, 0.9) == 0.0


def test_phi_examples():
    assert phi(0.05, 0.5, 0.4, 0.25, 0.01, 0.01).value == pytest.approx(0.216)
    # eta = delta = 0 collapses to epsilon/p* + rho*beta
    assert phi(0.2, 0.5, 0.4, 0.25, 0.0, 0.0).value == pytest.approx(0.4 + 0.1)
    assert phi(0.0, 0.5, 0.4, 0.25, 0.0, 0.0).value == pytest.approx(0.1)


# --- vote bound -------------------------------------------------------------


def test_vote_error_bound_values():
    got = vote_error_bound(0.4, 128)
    assert got.value == pytest.approx(math.exp(-2.56), abs=1e-15)
    assert vote_error_bound(0.5, 977).value == 1.0
    assert vote_error_bound(0.7, 10).vacuous


def test_vote_error_bound_exponent_quarters():
    a = vote_error_bound(0.3, 100).value  # margin 0.2
    b = vote_error_bound(0.4, 100).value  # margin 0.1
    assert math.log(a) == pytest.approx(4 * math.log(b), rel=1e-12)


def test_vote_bound_dominates_monte_carlo():
    rng = np.random.default_rng(0)
    for phi_val, J in ((0.3, 51), (0.4, 101), (0.45, 201)):
        trials = 20_000
        wrong_votes = rng.binomial(J, phi_val, size=trials)
        freq = np.mean(wrong_votes >= J / 2)
        bound = vote_error_bound(phi_val, J).value
        mc_std = math.sqrt(freq * (1 - freq) / trials + 1e-12)
        assert freq <= bound + 3 * mc_std


# --- rho-beta budgets -------------------------------------------------------


def test_budget_hand_value():
    # theta=0.1, eta=delta=0.05, s=r: 1 - 0.2 - 1/1.8
    got = rho_beta_budget(_inputs(s=16, r=16, theta=0.1, delta=0.05), eta=0.05)
    assert got.theorem_form == pytest.approx(1.0 - 0.2 - 1.0 / 1.8, rel=1e-12)


def test_budget_blows_down_as_failure_mass_grows():
    inp = _inputs(s=16, r=16, theta=0.1, delta=0.05)
    vals = [rho_beta_budget(inp, eta=e).theorem_form for e in (0.1, 0.5, 0.9, 0.9499)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < -1000
    assert rho_beta_budget(inp, eta=0.96).theorem_form == -math.inf


def test_budget_decreasing_in_s():
    vals = [
        rho_beta_budget(_inputs(s=s, r=8, theta=0.1, delta=0.05), eta=0.05).theorem_form
        for s in range(9, 120, 7)
    ]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_budget_increases_with_margin_ratio():
    lo = rho_beta_budget(_inputs(s=32, r=8, margin=0.4), eta=0.05).theorem_form
    hi = rho_beta_budget(_inputs(s=32, r=8, margin=0.8), eta=0.05).theorem_form
    assert hi > lo


def test_subbagging_budget_consistency():
    inp = _inputs(r=10, theta=0.1, delta=0.05)
    pinned_s = math.ceil(s_min_main(10))
    direct = rho_beta_budget(_inputs(r=10, s=pinned_s, theta=0.1, delta=0.05), eta=0.05)
    assert rho_beta_budget_subbagging(inp, eta=0.05) == pytest.approx(direct.theorem_form)


def test_subbagging_negative_regime():
    val = rho_beta_budget_subbagging(_inputs(r=10, theta=0.25, margin=0.05), eta=0.05)
    assert val < 0


# --- clean-point probabilities ----------------------------------------------


def test_worst_case_clean_probs_example():
    a, b = worst_case_clean_probs(0.75, 0.5)
    assert a == pytest.approx(0.5 / 1.75)
    assert b == pytest.approx(0.5 / 1.75)
    assert a == pytest.approx(0.2857, abs=5e-5)


def test_clean_probs_no_corruption():
    a, b = clean_point_probs(0.3, 0.0, 0.7, 0.4)
    assert a == pytest.approx(0.4)
    assert b == pytest.approx(0.6)


def test_clean_prob_minimized_at_closed_form():
    rho, p = 0.6, 0.35
    grid = np.linspace(0.0, 1.0, 2001)
    numeric_a = min(clean_point_probs(0.25, rho, a, p)[0] for a in grid)
    numeric_b = min(clean_point_probs(0.5, rho, a, p)[1] for a in grid)
    wa, wb = worst_case_clean_probs(rho, p)
    assert numeric_a == pytest.approx(wa, abs=1e-12)
    assert numeric_b == pytest.approx(wb, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    beta=st.floats(0.01, 0.5),
    rho=st.floats(0.0, 0.99),
    alpha=st.floats(0.0, 1.0),
    p=st.floats(0.01, 0.99),
)
def test_worst_case_really_is_a_lower_bound(beta, rho, alpha, p):
    a, b = clean_point_probs(beta, rho, alpha, p)
    wa, wb = worst_case_clean_probs(rho, p)
    assert a >= wa - 1e-12
    assert b >= wb - 1e-12


# --- eta --------------------------------------------------------------------


def test_eta_exact_enumeration_value():
    got = eta_exact(4, 2, 0.5, 0.5)
    assert got.value == pytest.approx(0.125, abs=1e-15)  # 2 * 0.5^4


def test_eta_exact_vanishes_at_high_clean_prob():
    assert eta_exact(40, 2, 0.999999, 0.999999).value < 1e-20


def test_eta_exact_edge_probabilities():
    assert eta_exact(10, 4, 0.0, 1.0).value == pytest.approx(1.0)


@settings(max_examples=150, deadline=None)
@given(
    s=st.integers(2, 300),
    r=st.integers(1, 40),
    q_a=st.floats(0.0, 1.0),
    q_b=st.floats(0.0, 1.0),
)
def test_eta_exact_matches_scipy(s, r, q_a, q_b):
    if math.ceil(r / 2) - 1 >= s:
        return
    got = eta_exact(s, r, q_a, q_b)
    assert got.value == pytest.approx(binomial_eta(s, r, q_a, q_b), rel=1e-10, abs=1e-12)
    assert got.clamped == min(got.value, 1.0)


def test_eta_exact_monte_carlo_union_is_below_sum():
    rng = np.random.default_rng(1)
    for s, r, rho, p in ((30, 6, 0.5, 0.5), (48, 10, 0.75, 0.5), (24, 8, 0.25, 0.3)):
        q_a, q_b = worst_case_clean_probs(rho, p)
        trials = 40_000
        n_a = rng.binomial(s, q_a, size=trials)
        n_b = rng.binomial(s, q_b, size=trials)
        k = math.ceil(r / 2) - 1
        freq = np.mean((n_a <= k) | (n_b <= k))
        bound = eta_exact(s, r, q_a, q_b).value
        mc_std = math.sqrt(freq * (1 - freq) / trials + 1e-12)
        assert freq <= bound + 3 * mc_std


def test_eta_hoeffding_symmetric_terms_at_half():
    v = eta_surrogate(0.5, 60, 8, 0.5)
    t = 60 * 0.5 / 1.5 - 3.0
    assert v == pytest.approx(math.exp(-2.0 / 60 * t * t))


def test_eta_hoeffding_cross_check_example():
    q = 0.5 / 1.75
    exact = eta_exact(200, 10, q, q).value
    hoeff = eta_hoeffding(200, 10, 0.75, 0.5)
    assert hoeff.applicable
    assert hoeff.value >= exact


def test_eta_hoeffding_vanishes_in_s():
    vals = [eta_hoeffding(s, 10, 0.75, 0.5).value for s in (100, 400, 1600)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-100


def test_eta_hoeffding_inapplicable_flag():
    got = eta_hoeffding(10, 10, 0.9, 0.5)  # s p/(1+rho) = 2.63 < r/2 - 1 = 4
    assert not got.applicable
    assert math.isnan(got.value)


def test_eta_hoeffding_dominates_exact_away_from_boundary():
    # with even r and at least ~0.7 sqrt(s) of slack in both classes the
    # exponential form stays above the exact tail sum (odd r shifts the exact
    # cut to ceil(r/2)-1, half a draw beyond the exponent's r/2-1)
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(3000):
        s = int(rng.integers(8, 200))
        r = 2 * int(rng.integers(1, min(s, 40) // 2))
        rho = float(rng.uniform(0.0, 0.99))
        p = float(rng.uniform(0.05, 0.95))
        t1 = s * p / (1 + rho) - r / 2 + 1
        t2 = s * (1 - p) / (1 + rho) - r / 2 + 1
        if min(t1, t2) < 0.7 * math.sqrt(s):
            continue
        checked += 1
        q_a, q_b = worst_case_clean_probs(rho, p)
        assert eta_hoeffding(s, r, rho, p).value >= eta_exact(s, r, q_a, q_b).value - 1e-12
    assert checked > 300


def test_eta_hoeffding_half_prefactor_fails_near_boundary():
    # the printed exponential bound carries 1/2 prefactors that a plain
    # Hoeffding tail bound does not have; just inside the validity region the
    # exact tail sum can exceed it.  This pins the known counterexample.
    got = eta_hoeffding(4, 4, 0.0, 0.5)
    assert got.applicable
    exact = eta_exact(4, 4, 0.5, 0.5).value
    assert got.value < exact


# --- subsample-size thresholds ----------------------------------------------


def test_s_min_main_value():
    assert s_min_main(10) == pytest.approx(28.59145257374339, abs=1e-9)


def test_s_min_main_equals_appendix_at_rho_one():
    for r in range(4, 201):
        assert abs(s_min_main(r) - s_min_appendix(r, 1.0)) < 1e-9


def test_s_min_hessian_below_appendix():
    for r in range(3, 120):
        for rho in np.linspace(0.0, 1.0, 21):
            assert s_min_hessian(r, rho) <= s_min_appendix(r, rho) + 1e-12


def test_s_min_too_small_r():
    with pytest.raises(ValueError):
        s_min_main(1)


def test_surrogate_minimized_at_half_above_threshold():
    for r in (6, 10, 20):
        for rho in (0.25, 0.75):
            s = 2 * math.ceil(s_min_appendix(r, rho))
            ps = np.round(np.arange(0.01, 0.995, 0.01), 10)
            vals = [eta_surrogate(p, s, r, rho) for p in ps]
            assert ps[int(np.argmin(vals))] == pytest.approx(0.5)


# --- input bundle and chain -------------------------------------------------


def test_bounds_input_validation():
    with pytest.raises(ValueError):
        _inputs(delta=0.5)
    with pytest.raises(ValueError):
        _inputs(theta=0.6)
    with pytest.raises(ValueError):
        _inputs(rho=1.0)
    with pytest.raises(ValueError):
        _inputs(beta=0.7)
    with pytest.raises(ValueError):
        _inputs(p=1.0)
    assert _inputs(p=0.3).p_star == pytest.approx(0.3)
    assert _inputs(p=0.8).p_star == pytest.approx(0.2)


def test_evaluate_chain_keys_and_consistency():
    inp = _inputs(s=48, r=8, rho=0.75, beta=0.25, theta=0.1, delta=0.1, margin=0.5)
    chain = evaluate_chain(inp)
    q_a, q_b = worst_case_clean_probs(0.75, 0.5)
    assert chain["q_clean_minority"] == pytest.approx(q_a)
    assert chain["eta_exact"] == pytest.approx(eta_exact(48, 8, q_a, q_b).value)
    assert chain["rho_beta_actual"] == pytest.approx(0.1875)
    assert chain["vote_error_bound"] <= 1.0
