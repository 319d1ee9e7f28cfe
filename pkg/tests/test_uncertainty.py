"""Special functions, copula sampling, and reserve requirement dimensioning.

Reference values come from scipy.special / scipy.stats, which the library
itself does not use for these quantities.
"""

import numpy as np
import pytest
import scipy.special as sps
import scipy.stats as sst

from bmlab.uncertainty import (
    BetaMarginal,
    CopulaSpec,
    DomainError,
    EmpiricalCdf,
    NotPositiveDefinite,
    ScenarioSet,
    beta_cdf,
    beta_inv_cdf,
    conditional_mean_forecast,
    portfolio_cdf,
    reserve_requirements,
    sample_scenarios,
    std_normal_cdf,
    std_normal_inv_cdf,
)

SHAPE_GRID = [0.5, 1.0, 2.0, 5.67]


# -- scalar special functions -------------------------------------------------

def test_normal_cdf_against_reference():
    x = np.concatenate([np.linspace(-8.0, 8.0, 2001), [-37.0, 37.0, 0.0]])
    ours = np.array([std_normal_cdf(v) for v in x])
    ref = sps.ndtr(x)
    np.testing.assert_allclose(ours, ref, rtol=2e-14, atol=1e-300)


def test_normal_inverse_against_reference():
    p = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 1001),
                        [1e-12, 1 - 1e-12, 0.5]])
    ours = np.array([std_normal_inv_cdf(v) for v in p])
    ref = sps.ndtri(p)
    np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-12)


def test_normal_round_trip():
    # |x| <= 5: p stays far enough from 1 for full double precision
    for x in np.linspace(-5, 5, 101):
        assert std_normal_inv_cdf(std_normal_cdf(x)) == pytest.approx(x, abs=1e-9)
    # deep left tail keeps relative precision (p is tiny, not 1 - tiny)
    for x in (-8.0, -12.0, -20.0):
        assert std_normal_inv_cdf(std_normal_cdf(x)) == pytest.approx(x, rel=1e-9)


def test_normal_inverse_domain():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(DomainError):
            std_normal_inv_cdf(bad)


def test_beta_cdf_against_reference():
    x = np.linspace(0.0, 1.0, 501)
    for a in SHAPE_GRID:
        for b in SHAPE_GRID:
            ours = beta_cdf(x, a, b)
            ref = sps.betainc(a, b, x)
            np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-12,
                                       err_msg=f"alpha={a} beta={b}")


def test_beta_cdf_case_study_shapes():
    x = np.linspace(0.0, 1.0, 2001)
    for a, b in ((3.78, 1.62), (5.67, 6.48)):
        np.testing.assert_allclose(beta_cdf(x, a, b), sps.betainc(a, b, x),
                                   rtol=1e-12, atol=1e-12)


def test_beta_inverse_round_trip():
    p = np.linspace(0.001, 0.999, 200)
    for a in SHAPE_GRID:
        for b in SHAPE_GRID:
            x = beta_inv_cdf(p, a, b)
            back = beta_cdf(x, a, b)
            assert np.max(np.abs(back - p)) <= 1e-8, f"alpha={a} beta={b}"


def test_beta_inverse_against_reference():
    p = np.linspace(0.001, 0.999, 97)
    for a, b in ((3.78, 1.62), (5.67, 6.48), (0.5, 0.5)):
        np.testing.assert_allclose(beta_inv_cdf(p, a, b), sst.beta.ppf(p, a, b),
                                   rtol=0, atol=5e-9)


def test_beta_domain_errors():
    with pytest.raises(DomainError):
        beta_cdf(0.5, -1.0, 2.0)
    with pytest.raises(DomainError):
        beta_cdf(1.5, 2.0, 2.0)
    with pytest.raises(DomainError):
        beta_inv_cdf(-0.1, 2.0, 2.0)
    with pytest.raises(DomainError):
        beta_inv_cdf(1.1, 2.0, 2.0)
    # endpoints are part of the domain and map exactly
    assert beta_inv_cdf(0.0, 2.0, 2.0) == 0.0
    assert beta_inv_cdf(1.0, 2.0, 2.0) == 1.0


def test_beta_endpoints_exact():
    assert beta_cdf(0.0, 2.0, 3.0) == 0.0
    assert beta_cdf(1.0, 2.0, 3.0) == 1.0


# -- marginals and copula ------------------------------------------------------

def test_marginal_mean_and_quantile():
    m = BetaMarginal(3.78, 1.62)
    assert m.mean() == pytest.approx(3.78 / (3.78 + 1.62))
    assert m.quantile(0.5) == pytest.approx(sst.beta.ppf(0.5, 3.78, 1.62),
                                            abs=1e-9)
    with pytest.raises(DomainError):
        BetaMarginal(0.0, 1.0)


def test_copula_spec():
    spec = CopulaSpec.uniform(3, 0.35)
    L = spec.cholesky()
    np.testing.assert_allclose(L @ L.T, spec.correlation, atol=1e-12)
    with pytest.raises(NotPositiveDefinite):
        CopulaSpec(np.array([[1.0, 2.0], [2.0, 1.0]])).cholesky()


def test_sampling_is_deterministic():
    marg = [BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48)]
    kw = dict(farm_ids=["w1", "w2"], marginals=marg, capacities=[912.0, 456.0],
              copula=CopulaSpec.uniform(2, 0.35), count=64, seed=20240811)
    a = sample_scenarios(**kw)
    b = sample_scenarios(**kw)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(a.values >= 0.0)
    assert np.all(a.values <= np.array([912.0, 456.0]) + 1e-9)


def test_sampling_matches_reference_inversion():
    # rebuild the draw by hand: same latent streams, scipy's Beta inverse
    from numpy.random import Generator, PCG64, SeedSequence
    seed, count = 99, 256
    rho = 0.35
    L = np.linalg.cholesky(np.array([[1.0, rho], [rho, 1.0]]))
    z = np.column_stack([
        Generator(PCG64(SeedSequence(entropy=seed, spawn_key=(j,))))
        .standard_normal(count)
        for j in range(2)
    ])
    y = sps.ndtr(z @ L.T)
    ref = np.column_stack([sst.beta.ppf(y[:, 0], 3.78, 1.62) * 100.0,
                           sst.beta.ppf(y[:, 1], 5.67, 6.48) * 50.0])
    got = sample_scenarios(["a", "b"],
                           [BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48)],
                           [100.0, 50.0], CopulaSpec.uniform(2, rho),
                           count, seed)
    np.testing.assert_allclose(got.values, ref, atol=1e-7)


def test_adding_a_farm_preserves_earlier_columns():
    m1, m2, m3 = (BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48),
                  BetaMarginal(2.0, 2.0))
    two = sample_scenarios(["a", "b"], [m1, m2], [100.0, 50.0],
                           CopulaSpec.uniform(2, 0.0), 128, seed=5)
    three = sample_scenarios(["a", "b", "c"], [m1, m2, m3], [100.0, 50.0, 10.0],
                             CopulaSpec.uniform(3, 0.0), 128, seed=5)
    np.testing.assert_array_equal(three.values[:, :2], two.values)


def test_capacity_scaling_is_exact():
    m = [BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48)]
    cop = CopulaSpec.uniform(2, 0.35)
    base = sample_scenarios(["a", "b"], m, [1.0, 1.0], cop, 200, seed=3)
    scaled = sample_scenarios(["a", "b"], m, [912.0, 456.0], cop, 200, seed=3)
    np.testing.assert_allclose(scaled.values,
                               base.values * np.array([912.0, 456.0]),
                               rtol=0, atol=1e-9)


def test_latent_correlation_recovered():
    rho = 0.35
    s = sample_scenarios(["a", "b"],
                         [BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48)],
                         [1.0, 1.0], CopulaSpec.uniform(2, rho),
                         20_000, seed=17)
    u = np.column_stack([sst.beta.cdf(s.values[:, 0], 3.78, 1.62),
                         sst.beta.cdf(s.values[:, 1], 5.67, 6.48)])
    z = sps.ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    got = np.corrcoef(z.T)[0, 1]
    assert got == pytest.approx(rho, abs=0.02)


def test_sampling_guards():
    m = [BetaMarginal(2.0, 2.0)]
    cop = CopulaSpec.uniform(1, 0.0)
    with pytest.raises(DomainError):
        sample_scenarios(["a"], m, [1.0], cop, 0, seed=1)
    with pytest.raises(DomainError):
        sample_scenarios(["a"], m, [-1.0], cop, 10, seed=1)
    with pytest.raises(DomainError):
        sample_scenarios(["a", "b"], m, [1.0], cop, 10, seed=1)


# -- scenario sets ---------------------------------------------------------------

def test_scenario_csv_round_trip(tmp_path):
    s = sample_scenarios(["w1", "w2"],
                         [BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48)],
                         [912.0, 456.0], CopulaSpec.uniform(2, 0.35),
                         100, seed=42)
    path = tmp_path / "scen.csv"
    s.to_csv(path)
    assert path.read_text().startswith("# seed=42\nscenario,prob,w1,w2\n")
    back = ScenarioSet.from_csv(path)
    assert back.farm_ids == s.farm_ids
    assert back.seed == 42
    np.testing.assert_array_equal(back.values, s.values)
    np.testing.assert_array_equal(back.probabilities, s.probabilities)


def test_scenario_csv_header_validated(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("w1,w2\n1,2\n")
    with pytest.raises(ValueError):
        ScenarioSet.from_csv(bad)


# -- reserve requirements ---------------------------------------------------------

def test_interval_bounds():
    rr = reserve_requirements(BetaMarginal(2.0, 2.0), 100.0, 0.99)
    assert rr.alpha_low == pytest.approx(0.005, abs=1e-15)
    assert rr.alpha_high == pytest.approx(0.995, abs=1e-15)
    # the band is constructed as alpha_low + xi, so this holds to the bit
    assert rr.alpha_high == rr.alpha_low + rr.xi
    assert rr.xi == 0.99


def test_uniform_marginal_requirements():
    # Beta(1,1) is uniform: mean 1/2, q(0.005) = 0.005, q(0.995) = 0.995
    rr = reserve_requirements(BetaMarginal(1.0, 1.0), 100.0, 0.99)
    assert rr.up == pytest.approx(49.5, abs=1e-9)
    assert rr.down == pytest.approx(49.5, abs=1e-9)


def test_requirements_against_reference_quantiles():
    for a, b, cap in ((3.78, 1.62, 912.0), (5.67, 6.48, 456.0)):
        rr = reserve_requirements(BetaMarginal(a, b), cap, 0.99)
        mean = a / (a + b)
        q_lo = sst.beta.ppf(0.005, a, b)
        q_hi = sst.beta.ppf(0.995, a, b)
        assert rr.up == pytest.approx((mean - q_lo) * cap, abs=1e-6)
        assert rr.down == pytest.approx((q_hi - mean) * cap, abs=1e-6)
        assert rr.up >= 0 and rr.down >= 0


def test_requirements_scale_linearly_with_capacity():
    m = BetaMarginal(3.78, 1.62)
    r1 = reserve_requirements(m, 1.0, 0.99)
    r9 = reserve_requirements(m, 912.0, 0.99)
    assert r9.up == pytest.approx(912.0 * r1.up, rel=1e-12)
    assert r9.down == pytest.approx(912.0 * r1.down, rel=1e-12)


def test_requirements_xi_guard():
    with pytest.raises(DomainError):
        reserve_requirements(BetaMarginal(2.0, 2.0), 1.0, 1.0)
    with pytest.raises(DomainError):
        reserve_requirements(BetaMarginal(2.0, 2.0), 1.0, 0.0)


def test_portfolio_requirements_via_empirical_cdf():
    # a portfolio of two correlated farms, dimensioned by Monte Carlo
    marg = [BetaMarginal(3.78, 1.62), BetaMarginal(5.67, 6.48)]
    caps = [912.0, 456.0]
    dist = portfolio_cdf(marg, caps, CopulaSpec.uniform(2, 0.35),
                         count=100_000, seed=0)
    rr = reserve_requirements(dist, 1.0, 0.99)
    total = sum(caps)
    # diversification: the pooled requirement sits below the sum of parts
    parts_up = sum(reserve_requirements(m, c, 0.99).up
                   for m, c in zip(marg, caps))
    assert rr.up < parts_up
    # and within a sane band of the per-unit ratios seen in calibration
    assert rr.up / total == pytest.approx(0.398, abs=0.02)
    assert rr.down / total == pytest.approx(0.272, abs=0.02)


def test_portfolio_cdf_minimum_sample_size():
    marg = [BetaMarginal(2.0, 2.0)]
    with pytest.raises(DomainError):
        portfolio_cdf(marg, [1.0], CopulaSpec.uniform(1, 0.0), count=5000)


def test_empirical_cdf():
    e = EmpiricalCdf(np.array([1.0, 2.0, 3.0, 4.0]))
    assert e.mean() == pytest.approx(2.5)
    assert e.quantile(0.0) == pytest.approx(1.0)
    assert e.quantile(1.0) == pytest.approx(4.0)


def test_conditional_mean_forecast():
    assert conditional_mean_forecast(BetaMarginal(3.78, 1.62), 912.0) == \
        pytest.approx(912.0 * 0.7, abs=1e-9)
