import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from madrp import risk
from madrp.errors import DegenerateMarketError, DimensionError, NotAdditiveError
from madrp.scenarios import ScenarioMatrix, random_scenarios, synth_comonotone

from conftest import centred


def _direct_mad(scn, x):
    """Independent oracle: explicit scenario loop with math.fsum."""
    R = scn.returns
    T, n = R.shape
    mu = [math.fsum(R[:, i]) / T for i in range(n)]
    devs = [math.fsum((R[t, i] - mu[i]) * x[i] for i in range(n)) for t in range(T)]
    return math.fsum(abs(v) for v in devs) / T, devs


@st.composite
def markets(draw, max_n=8, max_T=100):
    n = draw(st.integers(1, max_n))
    T = draw(st.integers(2, max_T))
    seed = draw(st.integers(0, 2 ** 31))
    return random_scenarios(n, T, seed=seed)


@st.composite
def market_and_weights(draw, max_n=8, max_T=100):
    scn = draw(markets(max_n, max_T))
    # zero or normal-range weights: halving a subnormal total is not exact
    x = draw(arrays(np.float64, scn.n, elements=st.one_of(st.just(0.0), st.floats(1e-100, 1.0))))
    return scn, x


def test_mad_two_point(two_point):
    assert risk.mad(two_point, [1.0]) == pytest.approx(0.02, abs=1e-17)
    assert risk.msad(two_point, [1.0]) == pytest.approx(0.01, abs=1e-17)
    assert risk.volatility(two_point, [1.0]) == pytest.approx(0.02, abs=1e-17)


def test_mad_zero_vector_probe(rng):
    scn = random_scenarios(4, 20, seed=1)
    assert risk.mad(scn, np.zeros(4)) == 0.0


def test_mad_comonotone_half_half():
    z = np.array([1.0, -1.0, 1.0, -1.0])
    scn = centred(np.column_stack([0.02 * z, 0.01 * z]))
    assert scn.asset_mads.tolist() == [0.02, 0.01]
    assert risk.mad(scn, [0.5, 0.5]) == pytest.approx(0.015, abs=1e-17)
    assert _direct_mad(scn, [0.5, 0.5])[0] == pytest.approx(0.015, abs=1e-17)


def test_msad_zero_when_all_deviations_negative():
    # a single scenario set where the portfolio deviation is never positive
    scn = centred([[0.0, 0.0], [0.0, 0.0]])
    assert risk.msad(scn, [0.5, 0.5]) == 0.0


@given(market_and_weights())
def test_msad_literal_positive_part(case):
    scn, x = case
    d = scn.deviations @ x
    literal = math.fsum(max(v, 0.0) for v in d) / scn.T
    assert risk.msad(scn, x) == pytest.approx(literal, rel=1e-12, abs=1e-14)


@given(market_and_weights())
def test_mad_matches_direct_loop(case):
    scn, x = case
    assert risk.mad(scn, x) == pytest.approx(_direct_mad(scn, x)[0], rel=1e-12, abs=1e-16)


@given(market_and_weights())
def test_mad_equals_twice_msad_exactly(case):
    scn, x = case
    assert risk.mad(scn, x) == 2.0 * risk.msad(scn, x)


@given(market_and_weights(), st.floats(0.0, 1e3))
def test_positive_homogeneity(case, lam):
    scn, x = case
    m = risk.mad(scn, x)
    assert abs(risk.mad(scn, lam * x) - lam * m) <= 1e-12 * max(lam * m, 1e-300) + 1e-300


@given(market_and_weights(), st.integers(0, 2 ** 31))
def test_subadditivity(case, seed):
    scn, x = case
    y = np.random.default_rng(seed).uniform(0, 1, scn.n)
    assert risk.mad(scn, x + y) <= risk.mad(scn, x) + risk.mad(scn, y) + 1e-12


@given(markets(), st.floats(-0.5, 0.5), st.integers(0, 2 ** 31))
def test_translation_invariance(scn, c, seed):
    x = np.random.default_rng(seed).dirichlet(np.ones(scn.n))
    shifted = ScenarioMatrix(scn.returns + c)
    assert abs(risk.mad(shifted, x) - risk.mad(scn, x)) <= 1e-12


@given(market_and_weights())
def test_lower_range_bounds(case):
    scn, x = case
    R = scn.returns @ x
    gap = R.mean() - R.min()
    assert risk.msad(scn, x) <= gap + 1e-12
    assert risk.mad(scn, x) <= 2 * gap + 1e-12


def test_mad_can_exceed_mean_minus_infimum():
    # a right-skewed two-point law: the upside half of MAD is not bounded by the downside range
    scn = ScenarioMatrix(np.array([[0.0]] * 9 + [[10.0]]))
    assert risk.mad(scn, [1.0]) == pytest.approx(1.8)
    assert scn.returns.mean() - scn.returns.min() == pytest.approx(1.0)
    assert risk.msad(scn, [1.0]) <= 1.0


def test_volatility_two_pass_oracle():
    scn = random_scenarios(2, 30, seed=5)
    x = np.array([0.3, 0.7])
    R = [float(r @ x) for r in scn.returns]
    m = math.fsum(R) / len(R)
    var = math.fsum((v - m) ** 2 for v in R) / len(R)
    assert risk.volatility(scn, x) == pytest.approx(math.sqrt(var), rel=1e-13)
    const = ScenarioMatrix(np.ones((5, 1)) * 0.01)
    assert risk.volatility(const, [1.0]) == 0.0


def test_rho_mad():
    scn = centred([[0.02], [-0.02]])
    assert risk.rho_mad(scn, [1.0]) == pytest.approx(0.02)
    const = ScenarioMatrix(np.full((4, 1), 0.03))
    assert risk.rho_mad(const, [1.0]) == pytest.approx(-0.03)
    scn = random_scenarios(3, 40, seed=8)
    x = np.array([0.2, 0.3, 0.5])
    assert risk.rho_mad(scn, x) > -float(scn.means @ x)


def test_dimension_mismatch():
    scn = random_scenarios(3, 10)
    for fn in (risk.mad, risk.msad, risk.volatility, risk.rho_mad, risk.risk_contributions):
        with pytest.raises(DimensionError):
            fn(scn, [0.5, 0.5])


# ------------------------------------------------------------- subgradient


def _fd_grad(scn, x, h=1e-7):
    g = np.empty(scn.n)
    for i in range(scn.n):
        e = np.zeros(scn.n)
        e[i] = h
        g[i] = (risk.mad(scn, x + e) - risk.mad(scn, x - e)) / (2 * h)
    return g


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 100:
        scn = random_scenarios(int(rng.integers(1, 7)), int(rng.integers(5, 60)),
                               seed=int(rng.integers(2 ** 31)))
        x = rng.dirichlet(np.ones(scn.n))
        d = scn.deviations @ x
        if np.min(np.abs(d)) < 1e-5 * np.max(np.abs(d)):
            continue  # keep the finite-difference stencil off the kinks
        g, sel = risk.mad_subgradient(scn, x)
        assert sel.tie_scenarios == ()
        np.testing.assert_allclose(g, _fd_grad(scn, x), atol=1e-5, rtol=1e-6)
        checked += 1


def test_one_asset_slope(two_point):
    g, _ = risk.mad_subgradient(two_point, [0.7])
    assert g[0] == pytest.approx(risk.mad(two_point, [1.0]))


def test_tie_rules():
    scn = centred([[1.0, -1.0], [1.0, 1.0], [-2.0, 0.0]])
    x = [0.5, 0.5]  # scenario 0 has zero deviation
    for rule, val in (("zero", 0.0), ("plus", 1.0), ("minus", -1.0)):
        g, sel = risk.mad_subgradient(scn, x, tie_rule=rule)
        assert sel.tie_scenarios == (0,)
        assert sel.s[0] == val
        assert np.array_equal(sel.s[1:], [1.0, -1.0])
        np.testing.assert_allclose(g, scn.deviations.T @ sel.s / 3)
    with pytest.raises(ValueError):
        risk.mad_subgradient(scn, x, tie_rule="bogus")


def test_balanced_rule_equalizes_contributions():
    from madrp.solvers import adversarial_tie_instance
    scn = adversarial_tie_instance()
    rc = risk.risk_contributions(scn, [0.5, 0.5], tie_rule="balanced")
    assert rc.selection.s[0] == pytest.approx(-0.5, abs=1e-12)
    assert rc.rc[0] == pytest.approx(rc.rc[1], abs=1e-15)
    assert rc.total == pytest.approx(risk.mad(scn, [0.5, 0.5]), abs=1e-15)
    zero = risk.risk_contributions(scn, [0.5, 0.5], tie_rule="zero")
    assert abs(zero.rc[0] - zero.rc[1]) > 0.1


def test_euler_identity_random_points():
    rng = np.random.default_rng(1)
    for _ in range(300):
        scn = random_scenarios(int(rng.integers(1, 9)), int(rng.integers(2, 80)),
                               seed=int(rng.integers(2 ** 31)))
        x = rng.dirichlet(np.ones(scn.n))
        rc = risk.risk_contributions(scn, x)
        if rc.selection.tie_scenarios:
            continue
        assert abs(rc.total - risk.mad(scn, x)) <= 1e-10
        assert rc.total == pytest.approx(float(np.sum(rc.rc)))


def test_vertex_contributions():
    scn = random_scenarios(4, 30, seed=2)
    rc = risk.risk_contributions(scn, [0.0, 0.0, 1.0, 0.0])
    assert rc.rc[2] == pytest.approx(scn.asset_mads[2], rel=1e-13)
    assert np.all(rc.rc[[0, 1, 3]] == 0.0)


def test_identical_columns_symmetric():
    col = np.array([0.01, -0.03, 0.02, 0.0])
    scn = centred(np.column_stack([col, col]))
    rc = risk.risk_contributions(scn, [0.5, 0.5])
    assert rc.rc[0] == rc.rc[1]


# --------------------------------------------------------------- additivity


def test_additivity_detector():
    assert risk.is_additive(synth_comonotone(4, 50, seed=3))
    anti = centred([[0.01, -0.01], [-0.01, 0.01]])
    chk = risk.is_additive(anti)
    assert not chk and chk.witness[1:] == (0, 1) and chk.witness[0] in (0, 1)
    with_const = ScenarioMatrix(np.column_stack([[0.01, -0.01, 0.02], [0.05, 0.05, 0.05]]))
    assert risk.is_additive(with_const, 0.0) and risk.is_additive(with_const, 1e-12)
    with pytest.raises(DimensionError):
        risk.is_additive(random_scenarios(1, 5))


@given(st.integers(2, 6), st.integers(2, 60), st.integers(0, 10_000), st.integers(0, 10_000))
def test_additivity_of_mad_on_comonotone(n, T, seed, wseed):
    scn = synth_comonotone(n, T, seed=seed)
    x = np.random.default_rng(wseed).uniform(0, 3, n)
    assert abs(risk.mad(scn, x) - float(x @ scn.asset_mads)) <= 1e-12


def test_closed_form():
    z = np.array([1.0, -1.0, 2.0, -2.0])
    scn = centred(np.column_stack([0.02 * z / 1.5, 0.01 * z / 1.5]))
    np.testing.assert_allclose(scn.asset_mads, [0.02, 0.01], rtol=1e-14)
    w = risk.closed_form_rp(scn)
    np.testing.assert_allclose(w.x, [1 / 3, 2 / 3], rtol=1e-14)
    rc = risk.risk_contributions(scn, w.x)
    assert rc.rc[0] == pytest.approx(rc.rc[1], rel=1e-13)
    eq = centred(np.column_stack([z, z, z]) * 0.01)
    np.testing.assert_allclose(risk.closed_form_rp(eq).x, np.full(3, 1 / 3), rtol=1e-15)


def test_closed_form_errors():
    with pytest.raises(NotAdditiveError) as exc:
        risk.closed_form_rp(centred([[0.01, -0.01], [-0.01, 0.01]]))
    assert exc.value.witness is not None
    const = ScenarioMatrix(np.column_stack([[0.01, -0.01, 0.02], [0.05, 0.05, 0.05]]))
    with pytest.raises(DegenerateMarketError):
        risk.closed_form_rp(const)


def test_portfolio_weights_invariants():
    risk.PortfolioWeights([0.25, 0.75])
    with pytest.raises(ValueError):
        risk.PortfolioWeights([0.5, 0.6])
    with pytest.raises(ValueError):
        risk.PortfolioWeights([1.5, -0.5])
    risk.PortfolioWeights([2.0, 3.0], normalized=False)
    with pytest.raises(ValueError):
        risk.PortfolioWeights([2.0, 0.0], normalized=False)
    w = risk.PortfolioWeights.from_positive([1.0, 3.0])
    np.testing.assert_allclose(np.asarray(w), [0.25, 0.75])
    assert len(w) == 2


def test_rc_accuracy_fixture():
    f, mean, mx = risk.rc_accuracy([0.3, 0.3, 0.4])
    assert mean == pytest.approx(0.0444444444444444, rel=1e-12)
    assert mx == pytest.approx(0.0666666666666667, rel=1e-12)
    assert f == pytest.approx(0.0066666666666667, rel=1e-12)
    assert risk.rc_accuracy([1 / 3] * 3) == (0.0, 0.0, 0.0)
