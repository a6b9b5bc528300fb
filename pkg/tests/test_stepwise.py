import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdrlab import BiSample, ProcedureConfig, critical_values, order, run_procedure, step_down, step_up
from fdrlab.errors import ConfigError, DomainError
from fdrlab.estimators import Dynamic, GStorey, Storey
from fdrlab.stepwise import config_errors, modified_critical_values

CRIT3 = np.array([0.05 / 3, 0.1 / 3, 0.05])


def bh_direct(p, alpha):
    """Textbook BH: reject the k smallest where k = max{i : p_(i) <= i alpha / n}."""
    s = np.sort(p)
    k = 0
    for i in range(1, len(s) + 1):
        if s[i - 1] <= i * alpha / len(s):
            k = i
    return k


def test_critical_values_bh_ladder():
    assert critical_values(3, 0.05, 0.5, 3) == pytest.approx([0.0166667, 0.0333333, 0.05], abs=1e-6)


def test_critical_values_cap():
    assert np.array_equal(critical_values(3, 0.05, 0.5, 0.1), [0.5, 0.5, 0.5])


def test_critical_values_reduce_to_bh():
    n = 17
    assert np.allclose(critical_values(n, 0.05, 0.5, n), np.arange(1, n + 1) * 0.05 / n, rtol=0, atol=1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_critical_values_domain(bad):
    with pytest.raises(DomainError):
        critical_values(3, 0.05, 0.5, bad)


def test_step_up_example():
    res = step_up(order([0.01, 0.02, 0.5]), CRIT3)
    assert res.r == 2
    assert list(res.rejected) == [0, 1]
    assert res.threshold == pytest.approx(0.1 / 3)


def test_step_up_nothing_and_everything():
    assert step_up(order([0.2, 0.3, 0.9]), CRIT3).r == 0
    assert step_up(order([0.2, 0.3, 0.9]), CRIT3).threshold == 0.0
    assert step_up(order([0.0, 0.0, 0.0]), CRIT3).r == 3


def test_step_down_example():
    o = order([0.01, 0.04, 0.5])
    assert step_down(o, CRIT3).r == 1
    assert step_up(o, CRIT3).r == 1


def test_step_down_tied_block():
    o = order([0.03, 0.03, 0.5])
    assert step_down(o, CRIT3).r == 0
    res = step_down(o, CRIT3, "modified")
    assert res.r == 2
    assert list(res.rejected) == [0, 1]


def test_all_zero_both_variants():
    o = order(np.zeros(3))
    assert step_down(o, CRIT3).r == 3
    assert step_down(o, CRIT3, "modified").r == 3


def test_length_mismatch():
    with pytest.raises(DomainError):
        step_up(order([0.1, 0.2]), CRIT3)
    with pytest.raises(DomainError):
        step_down(order([0.1, 0.2]), CRIT3)


def test_rejected_indices_are_original_positions():
    res = step_up(order([0.5, 0.02, 0.01]), CRIT3)
    assert list(res.rejected) == [1, 2]


def test_run_procedure_bh():
    res = run_procedure([0.01, 0.02, 0.5], ProcedureConfig(0.05, 0.5, "bh"))
    assert res.r == 2
    assert res.estimate == 3
    assert res.v is None and res.fdp is None


def test_run_procedure_storey_chain():
    res = run_procedure([0.004, 0.02, 0.6, 0.8], ProcedureConfig(0.05, 0.5, Storey(0.5)))
    assert res.estimate == pytest.approx(6.0)
    assert res.r == 1
    assert list(res.rejected) == [0]


def test_run_procedure_global_null_above_lambda():
    s = BiSample(np.array([0.6, 0.7, 0.9]), np.zeros(3, dtype=int))
    res = run_procedure(s, ProcedureConfig(0.05, 0.5, Storey(0.5)))
    assert (res.r, res.v, res.fdp) == (0, 0, 0.0)


def test_run_procedure_fills_fdp():
    s = BiSample(np.array([0.001, 0.002, 0.9]), np.array([0, 1, 1]))
    res = run_procedure(s, ProcedureConfig(0.05, 0.5, "bh"))
    assert (res.r, res.v) == (2, 1)
    assert res.fdp == 0.5


def test_config_alpha_below_lambda():
    with pytest.raises(ConfigError, match="alpha < lambda"):
        ProcedureConfig(0.6, 0.5)


def test_config_reports_every_error():
    errs = config_errors(1.5, 0.0, "up", "odd")
    assert len(errs) == 4


def test_config_modified_needs_sd():
    with pytest.raises(ConfigError, match="requires direction 'sd'"):
        ProcedureConfig(0.05, 0.5, "bh", "su", "modified")


def test_config_estimator_below_lambda_rejected():
    with pytest.raises(ConfigError):
        ProcedureConfig(0.05, 0.5, Storey(0.4))


def test_n0_hat_above_n_not_clamped():
    # storey(0.5) on one p-value above 0.5 gives (1 - 0 + 1) / 0.5 = 4 > n
    res = run_procedure([0.9], ProcedureConfig(0.05, 0.5, Storey(0.5)))
    assert res.estimate == 4.0


def _random_samples(rng, count, n_max=40):
    for _ in range(count):
        n = int(rng.integers(1, n_max))
        kind = rng.integers(3)
        if kind == 0:
            p = rng.random(n)
        elif kind == 1:
            p = rng.random(n) ** 4
        else:
            p = rng.choice([0.0, 0.005, 0.01, 0.03, 0.2, 0.6], size=n)
        yield p


def test_sd_never_exceeds_su(rng):
    for p in _random_samples(rng, 10_000):
        o = order(p)
        crit = critical_values(o.n, 0.05, 0.5, rng.uniform(0.2, 2 * o.n))
        su = step_up(o, crit).r
        assert step_down(o, crit).r <= su
        assert step_down(o, crit, "modified").r <= su


def test_modified_sd_dominates_standard(rng):
    for p in _random_samples(rng, 10_000):
        o = order(p)
        crit = critical_values(o.n, 0.05, 0.5, rng.uniform(0.2, 2 * o.n))
        assert step_down(o, crit, "modified").r >= step_down(o, crit).r
        assert np.all(modified_critical_values(o.sorted_p, crit) >= crit)


def test_su_self_consistency(rng):
    for p in _random_samples(rng, 2000):
        o = order(p)
        crit = critical_values(o.n, 0.05, 0.5, rng.uniform(0.2, 2 * o.n))
        res = step_up(o, crit)
        if res.r:
            assert o.sorted_p[res.r - 1] <= crit[res.r - 1]
        assert np.all(o.sorted_p[res.r:] > crit[res.r:])
        assert np.all(p[res.rejected] <= res.threshold)


def test_bh_matches_direct_implementation(rng):
    cfg = ProcedureConfig(0.05, 0.5, "bh")
    for p in _random_samples(rng, 1000, n_max=200):
        res = run_procedure(p, cfg)
        k = bh_direct(p, 0.05)
        assert res.r == k
        expected = np.flatnonzero(p <= k * 0.05 / len(p)) if k else np.array([], dtype=int)
        assert np.array_equal(res.rejected, expected)


@pytest.mark.parametrize("spec", [Storey(0.5), GStorey(0.5, 0.8),
                                  Dynamic((0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0))])
def test_su_monotone_under_improvement(rng, spec):
    cfg = ProcedureConfig(0.05, 0.5, spec)
    for _ in range(300):
        n = int(rng.integers(5, 60))
        p = np.where(rng.random(n) < 0.4, rng.random(n) ** 3, rng.random(n))
        r0 = run_procedure(p, cfg).r
        below = np.flatnonzero(p <= 0.5)
        if below.size == 0:
            continue
        q = p.copy()
        i = rng.choice(below)
        q[i] = rng.uniform(0, p[i])
        assert run_procedure(q, cfg).r >= r0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30),
       st.floats(0.1, 50))
def test_rejected_set_is_threshold_set(p, n0_hat):
    p = np.array(p)
    o = order(p)
    crit = critical_values(o.n, 0.05, 0.5, n0_hat)
    for res in (step_up(o, crit), step_down(o, crit), step_down(o, crit, "modified")):
        assert res.rejected.size == res.r
        if res.r:
            assert np.array_equal(res.rejected, np.flatnonzero(p <= res.threshold))
