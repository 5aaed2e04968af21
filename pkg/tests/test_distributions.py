import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from auctioncc.distributions import (
    DistSpec,
    Seed,
    atom_mass,
    cdf,
    conditional_mean_below,
    conditional_variance_below,
    favorite_marginal,
    max_quantile_sample,
    nonfavorite_marginal,
    pdf_density,
    quantile,
    sample,
    virtual_value,
)

ER = DistSpec.equal_revenue()


def test_distspec_validation():
    assert DistSpec.truncated(4.0).is_truncated
    assert not ER.is_truncated
    with pytest.raises(ValueError):
        DistSpec.truncated(0.5)
    with pytest.raises(ValueError):
        DistSpec(ER.kind, truncation=2.0)


def test_cdf_pdf_atom_hand_values():
    assert cdf(ER, 2.0) == 0.5
    assert cdf(ER, 0.5) == 0.0
    assert pdf_density(ER, 2.0) == 0.25
    t4 = DistSpec.truncated(4.0)
    assert cdf(t4, 4.0) == 1.0
    assert cdf(t4, 2.0) == 0.5
    assert atom_mass(t4, 4.0) == 0.25
    assert atom_mass(t4, 2.0) == 0.0
    assert pdf_density(t4, 4.0) == 0.0


def test_quantile_inverts_cdf():
    assert quantile(ER, 0.5) == 2.0
    t4 = DistSpec.truncated(4.0)
    assert quantile(t4, 1.0) == 4.0
    assert quantile(t4, 0.9) == 4.0  # inside the atom
    for q in np.linspace(0.01, 0.74, 20):
        x = quantile(t4, q)
        assert cdf(t4, x) == pytest.approx(q, abs=1e-12)
    with pytest.raises(ValueError):
        quantile(ER, 1.5)


def test_virtual_value():
    t4 = DistSpec.truncated(4.0)
    assert virtual_value(t4, 4.0) == 4.0
    assert virtual_value(t4, 2.0) == 0.0
    assert virtual_value(ER, 17.0) == 0.0
    with pytest.raises(ValueError):
        virtual_value(t4, 5.0)
    with pytest.raises(ValueError):
        virtual_value(ER, 0.5)


def test_sampling_atom_and_ks():
    t = 6.0
    spec = DistSpec.truncated(t)
    v = sample(spec, Seed(7), 10**6)
    # atom draws are bit-equal to the truncation point
    frac_atom = (v == t).mean()
    se = math.sqrt((1 / t) * (1 - 1 / t) / v.size)
    assert abs(frac_atom - 1 / t) <= 4 * se
    # continuous part, conditioned below the atom, against its exact cdf
    below = v[v < t]
    stat, _ = stats.kstest(below, lambda x: (1 - 1 / x) / (1 - 1 / t))
    assert stat < 0.005


def test_sampling_untruncated_ks():
    v = sample(ER, Seed(8), 10**6)
    assert v.min() >= 1.0
    stat, _ = stats.kstest(v, lambda x: 1 - 1 / x)
    assert stat < 0.005


def test_seed_reproducibility():
    a = sample(ER, Seed(3), 100, 1, 2)
    b = sample(ER, Seed(3), 100, 1, 2)
    c = sample(ER, Seed(3), 100, 1, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert Seed(3).with_stream(5).generator(0).random() != Seed(3).generator(
        0
    ).random()


def test_favorite_marginal_hand_values():
    c, p = favorite_marginal(2, 2.0)
    assert c == pytest.approx(0.25)
    assert p == pytest.approx(0.25)
    c1, p1 = favorite_marginal(1, 2.0)
    assert c1 == pytest.approx(0.5)
    assert p1 == pytest.approx(0.25)


def test_nonfavorite_marginal_hand_values():
    c, p = nonfavorite_marginal(2, 2.0)
    assert c == pytest.approx(0.75)
    assert p == pytest.approx(0.25)
    with pytest.raises(ValueError):
        nonfavorite_marginal(1, 2.0)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_marginal_densities_integrate_to_one(m):
    fav, _ = integrate.quad(lambda x: favorite_marginal(m, x)[1], 1, np.inf)
    nf, _ = integrate.quad(lambda x: nonfavorite_marginal(m, x)[1], 1, np.inf)
    assert fav == pytest.approx(1.0, abs=1e-6)
    assert nf == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("m", [2, 4])
def test_marginal_pdf_matches_cdf_derivative(m):
    for x in (1.5, 3.0, 10.0):
        num, _ = integrate.quad(lambda t: favorite_marginal(m, t)[1], 1, x)
        assert num == pytest.approx(favorite_marginal(m, x)[0], abs=1e-9)
        num, _ = integrate.quad(lambda t: nonfavorite_marginal(m, t)[1], 1, x)
        assert num == pytest.approx(nonfavorite_marginal(m, x)[0], abs=1e-9)


def test_conditional_moments_against_quadrature():
    for v in (1.5, 4.0, 30.0):
        mass = 1 - 1 / v
        mean_q, _ = integrate.quad(lambda x: x / (x * x), 1, v)
        assert conditional_mean_below(v) == pytest.approx(mean_q / mass, rel=1e-10)
        m2_q, _ = integrate.quad(lambda x: 1.0, 1, v)  # x^2 * 1/x^2
        var_q = m2_q / mass - (mean_q / mass) ** 2
        assert conditional_variance_below(v) == pytest.approx(var_q, rel=1e-10)
    with pytest.raises(ValueError):
        conditional_mean_below(1.0)


def test_max_quantile_sample_mean():
    k = 12
    u = max_quantile_sample(k, Seed(9), 10**6)
    # mean of U^(1/k) is k/(k+1)
    se = u.std() / math.sqrt(u.size)
    assert abs(u.mean() - k / (k + 1)) <= 4 * se
    assert u.max() <= 1.0 and u.min() >= 0.0


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1.0 + 1e-9, max_value=1e6))
def test_quantile_cdf_roundtrip_property(x):
    assert quantile(ER, cdf(ER, x)) == pytest.approx(x, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=2, max_value=12),
    st.floats(min_value=1.0, max_value=1e5),
)
def test_marginal_cdf_properties(m, x):
    fc, fp = favorite_marginal(m, x)
    nc, np_ = nonfavorite_marginal(m, x)
    assert 0.0 <= fc <= 1.0 and fp >= 0.0
    assert 0.0 <= nc <= 1.0 and np_ >= 0.0
    # the favorite stochastically dominates a non-favorite coordinate
    assert fc <= nc + 1e-12
