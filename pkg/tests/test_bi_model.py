import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from fdrlab.bi_model import (BernoulliTruth, DiracZero, FixedTruth, NormalShift, PiecewiseD3,
                             Table, alt_cdf, alt_quantile, load_table, parse_alternative,
                             sample_bi, std_normal_cdf, std_normal_quantile,
                             uniform_alternative)
from fdrlab.errors import ConfigError, DomainError

# Reference values of the standard normal cdf (mpmath, 40 digits).
NORMAL_CDF_REFERENCE = [
    (-8.0, 6.2209605742717841235e-16),
    (-5.0, 2.8665157187919391167e-7),
    (-2.5, 0.006209665325776135167),
    (-1.0, 0.15865525393145705141),
    (0.0, 0.5),
    (0.3, 0.61791142218895263307),
    (1.0, 0.8413447460685429485852),
    (1.7, 0.95543453724145695634),
    (3.0, 0.99865010196836990547),
    (6.0, 0.99999999901341235496),
    (8.0, 0.9999999999999993779),
]
# Adaptive quadrature of int_0^1 (1 - Phi(Phi^-1(t) + 1)) dt.
D2_MEAN_FALSE_P = 0.23975006108562863


@pytest.mark.parametrize("x, expected", NORMAL_CDF_REFERENCE)
def test_normal_cdf_reference(x, expected):
    assert abs(std_normal_cdf(x) - expected) <= 1e-12


def test_normal_quantile_reference():
    assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)
    assert std_normal_quantile(0.5) == 0.0


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(u):
    with pytest.raises(DomainError):
        std_normal_quantile(u)


def test_normal_round_trip():
    u = np.linspace(1e-9, 1 - 1e-9, 20001)
    assert np.max(np.abs(std_normal_cdf(std_normal_quantile(u)) - u)) < 1e-10
    # beyond x ~ 5 the cdf saturates towards 1 and the inverse is ill-conditioned
    x = np.linspace(-8, 5, 2001)
    assert np.max(np.abs(std_normal_quantile(std_normal_cdf(x)) - x)) < 1e-6


def test_alt_cdf_examples():
    assert alt_cdf(PiecewiseD3(), 0.5) == 0.75
    assert alt_cdf(DiracZero(), 0.0) == 1.0
    assert alt_cdf(NormalShift(1.0), 0.5) == pytest.approx(0.841344746, abs=1e-9)
    assert alt_cdf(NormalShift(1.0), 1.0) == 1.0
    assert alt_cdf(NormalShift(1.0), 0.0) == 0.0


@pytest.mark.parametrize("t", [-0.01, 1.01])
def test_alt_cdf_domain(t):
    with pytest.raises(DomainError):
        alt_cdf(PiecewiseD3(), t)


def test_d3_branches_agree_at_half():
    lower = 1.5 * 0.5
    upper = 1 - 2 * (1 - 0.5) ** 3
    assert lower == upper == 0.75


@pytest.mark.parametrize("u, t", [(0.75, 0.5), (0.6, 0.4), (0.984, 0.8)])
def test_d3_quantile_examples(u, t):
    assert alt_quantile(PiecewiseD3(), u) == pytest.approx(t, abs=1e-12)


@pytest.mark.parametrize("alt", [NormalShift(1.0), NormalShift(-0.5), PiecewiseD3(),
                                 uniform_alternative(),
                                 Table((0.0, 0.2, 0.5, 1.0), (0.0, 0.6, 0.9, 1.0))])
def test_continuous_round_trip(alt):
    u = np.linspace(0.0005, 0.9995, 1000)
    assert np.max(np.abs(alt_cdf(alt, alt_quantile(alt, u)) - u)) < 1e-10


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=200)
def test_quantile_is_generalized_inverse(u, u2):
    for alt in (PiecewiseD3(), NormalShift(1.0), Table((0.0, 0.5, 1.0), (0.3, 1.0, 1.0))):
        q = alt_quantile(alt, u)
        assert 0.0 <= q <= 1.0
        assert alt_cdf(alt, q) >= u - 1e-12
        if u <= u2:
            assert q <= alt_quantile(alt, u2) + 1e-15


def test_table_flat_segment_and_atom():
    alt = Table((0.0, 0.5, 1.0), (0.3, 1.0, 1.0))
    assert alt_quantile(alt, 0.2) == 0.0           # inside the atom at 0
    assert alt_quantile(alt, 1.0) == 0.5           # inf of the flat top
    assert alt_cdf(alt, 0.25) == pytest.approx(0.65)


@pytest.mark.parametrize("t, f", [((0.0, 0.5), (0.0, 1.0)), ((0.0, 0.6, 0.5, 1.0), (0, .5, .6, 1)),
                                  ((0.0, 1.0), (0.5, 0.9)), ((0.0, 1.0), (0.5, 0.4))])
def test_table_validation(t, f):
    with pytest.raises(ConfigError):
        Table(t, f)


def test_sample_all_true():
    s = sample_bi(4, FixedTruth(4), PiecewiseD3(), seed=7)
    assert np.all(s.h == 0)
    assert np.all((s.p > 0) & (s.p < 1))


def test_sample_all_false_d1():
    s = sample_bi(3, FixedTruth(0), DiracZero(), seed=7)
    np.testing.assert_array_equal(s.p, [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(s.h, [1, 1, 1])


def test_sample_d2_false_mean():
    s = sample_bi(1000, FixedTruth(600), NormalShift(1.0), seed=42)
    assert s.n0 == 600
    false_p = s.p[s.h == 1]
    # 400 draws with sd ~0.24: a +-0.02 band is only 1.7 standard errors
    se = false_p.std(ddof=1) / np.sqrt(false_p.size)
    assert abs(false_p.mean() - D2_MEAN_FALSE_P) < 4 * se


def test_sample_d2_false_mean_large():
    s = sample_bi(200_000, FixedTruth(0), NormalShift(1.0), seed=42)
    assert abs(s.p.mean() - D2_MEAN_FALSE_P) < 0.005


def test_sample_reproducible():
    a = sample_bi(500, BernoulliTruth(0.7), NormalShift(1.0), seed=[3, 9])
    b = sample_bi(500, BernoulliTruth(0.7), NormalShift(1.0), seed=[3, 9])
    c = sample_bi(500, BernoulliTruth(0.7), NormalShift(1.0), seed=[3, 10])
    assert a.p.tobytes() == b.p.tobytes() and a.h.tobytes() == b.h.tobytes()
    assert a.p.tobytes() != c.p.tobytes()


def test_bernoulli_truth_fraction():
    pi0 = 0.65
    s = sample_bi(100_000, BernoulliTruth(pi0), PiecewiseD3(), seed=11)
    frac = np.mean(s.h == 0)
    assert abs(frac - pi0) <= 3 * np.sqrt(pi0 * (1 - pi0) / s.n)


@pytest.mark.parametrize("truth", [FixedTruth(-1), FixedTruth(11), BernoulliTruth(0.0),
                                   BernoulliTruth(1.2)])
def test_invalid_truth(truth):
    with pytest.raises(ConfigError):
        sample_bi(10, truth, DiracZero(), seed=0)


def test_d3_ks():
    s = sample_bi(100_000, FixedTruth(0), PiecewiseD3(), seed=5)
    ks = stats.kstest(s.p, lambda t: alt_cdf(PiecewiseD3(), np.clip(t, 0, 1))).statistic
    assert ks < 0.01


def test_d2_sampler_matches_cdf():
    s = sample_bi(50_000, FixedTruth(0), NormalShift(1.0), seed=6)
    ks = stats.kstest(s.p, lambda t: alt_cdf(NormalShift(1.0), np.clip(t, 0, 1))).statistic
    assert ks < 0.01


def test_parse_alternative(tmp_path):
    assert parse_alternative("d1") == DiracZero()
    assert parse_alternative("d2") == NormalShift(1.0)
    assert parse_alternative("d2:mu=2.5") == NormalShift(2.5)
    assert parse_alternative("D3") == PiecewiseD3()
    path = tmp_path / "d4.csv"
    path.write_text("t,F1\n0,0\n0.5,1\n1,1\n")
    alt = parse_alternative(f"table:{path}")
    assert alt_cdf(alt, 0.5) == 1.0 and alt_cdf(alt, 0.25) == 0.5
    assert load_table(str(path)) == alt
    for bad in ("d4", "d2:sigma=1", "d2:mu=x", "table:"):
        with pytest.raises(ConfigError):
            parse_alternative(bad)
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("x,y\n0,0\n1,1\n")
    with pytest.raises(ConfigError):
        parse_alternative(f"table:{bad_csv}")
