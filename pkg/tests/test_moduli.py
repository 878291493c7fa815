import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermod.errors import ConfigError, DomainError, InfeasibleError, MisuseError
from hypermod.moduli import (
    Modulus,
    check_concavity_scaling,
    eval_modulus,
    find_M,
    find_sprime,
    modulus_from_config,
)

ALL = [
    Modulus.linear(1.0),
    Modulus.linear(2.5),
    Modulus.power(1.0, 0.5),
    Modulus.power(3.0, 0.2),
    Modulus.truncated_linear(1.0, 2.0),
    Modulus.bounded_exp(1.0, 1.0),
    Modulus.piecewise([(1.0, 2.0), (3.0, 3.0), (10.0, 3.5)]),
    Modulus.piecewise([(1.0, 1.0), (2.0, 1.5), (4.0, 1.5)]),
]


def test_eval_examples():
    assert eval_modulus(Modulus.linear(1), 3.0) == 3.0
    assert eval_modulus(Modulus.truncated_linear(1, 2), 5.0) == 2.0
    assert eval_modulus(Modulus.power(1, 0.5), 4.0) == 2.0


def test_eval_rejects_negative_argument():
    with pytest.raises(DomainError):
        eval_modulus(Modulus.linear(1), -1.0)


@pytest.mark.parametrize("om", ALL, ids=lambda m: m.variant)
def test_vanishes_at_zero_and_monotone(om):
    assert om(0.0) == 0.0
    s = np.linspace(0, 50, 5001)
    assert np.all(np.diff(om(s)) >= 0)


@pytest.mark.parametrize("om", ALL, ids=lambda m: m.variant)
def test_subadditive_on_samples(om):
    rng = np.random.default_rng(0)
    a, b = 20 * rng.random(10000), 20 * rng.random(10000)
    assert np.all(om(a + b) <= om(a) + om(b) + 1e-12)


def test_scaling_bound_examples():
    assert check_concavity_scaling(Modulus.power(1, 0.5), 4.0, 1.0)
    assert check_concavity_scaling(Modulus.bounded_exp(2, 3), 1.0, 0.7)
    for lam, s in ((1.0, 2.0), (3.7, 0.4), (100.0, 5.0)):
        assert check_concavity_scaling(Modulus.linear(2.0), lam, s)
    with pytest.raises(DomainError):
        check_concavity_scaling(Modulus.linear(1.0), 0.5, 1.0)


def test_broken_modulus_fails_scaling_check():
    bad = Modulus.piecewise([(1.0, 0.5), (2.0, 2.0)], validate=False)
    assert not check_concavity_scaling(bad, 2.0, 1.0)


def test_find_M_linear():
    M = find_M(Modulus.linear(1), 1.0, 0.25)
    assert M == pytest.approx(4.0, rel=1e-12)
    s = np.concatenate([[0.0], np.linspace(0, 100, 1001)])
    assert np.all(M + s >= 1 + 0.75 * s - 1e-12)


def test_find_M_power():
    om = Modulus.power(1, 0.5)
    M = find_M(om, 1.0, 0.5)
    assert M == pytest.approx(4.0, rel=1e-12)
    s = np.linspace(0, 100, 1001)
    assert np.all(np.sqrt(M + s) >= 1 + 0.5 * np.sqrt(s) - 1e-12)


@pytest.mark.parametrize("om", [m for m in ALL if not m.bounded], ids=lambda m: m.variant)
@pytest.mark.parametrize("k,lam", [(1.0, 0.25), (0.3, 0.9), (5.0, 0.01)])
def test_find_M_inequality_on_geometric_grid(om, k, lam):
    M = find_M(om, k, lam)
    assert om(M) >= k / lam
    s = np.concatenate([[0.0], np.geomspace(1e-6, 1e3 * M, 3000)])
    assert np.all(om(M + s) >= k + (1 - lam) * om(s) - 1e-9)


def test_find_M_infeasible_for_small_cap():
    with pytest.raises(InfeasibleError):
        find_M(Modulus.truncated_linear(1, 2), 1.0, 0.25)


def test_find_sprime_examples():
    assert find_sprime(Modulus.truncated_linear(1, 2), 0.1, 0.5) <= 2.0
    assert Modulus.truncated_linear(1, 2)(find_sprime(Modulus.truncated_linear(1, 2), 0.1, 0.5)) >= 0.95 * 2
    # closed forms: 1 - exp(-s') = 0.9 and 1 - exp(-s') = 0.5
    assert find_sprime(Modulus.bounded_exp(1, 1), 0.2, 0.5) == pytest.approx(2.302585092994046, rel=1e-12)
    assert find_sprime(Modulus.bounded_exp(1, 1), 0.5, 1.0) == pytest.approx(math.log(2), rel=1e-12)


def test_find_sprime_needs_bounded_modulus():
    with pytest.raises(MisuseError):
        find_sprime(Modulus.linear(1), 0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.05, 1.0), st.floats(0.1, 10), st.floats(0.1, 10))
def test_find_sprime_meets_target(t, guard, cap, tau):
    om = Modulus.bounded_exp(cap, tau)
    sp = find_sprime(om, t, guard)
    assert om(sp) >= (1 - guard * t) * cap


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 10), st.floats(0.01, 5)), min_size=1, max_size=6))
def test_piecewise_from_decreasing_slopes_is_concave(increments):
    # build nodes from positive widths and decreasing slopes
    widths = [w for w, _ in increments]
    slopes = sorted((s for _, s in increments), reverse=True)
    xs = np.cumsum(widths)
    ys = np.cumsum(np.array(widths) * np.array(slopes))
    om = Modulus.piecewise(list(zip(xs, ys)))
    a = np.linspace(0, xs[-1] * 2, 400)
    b = a[::-1]
    assert np.all(om(0.5 * (a + b)) >= 0.5 * (om(a) + om(b)) - 1e-9 * (1 + om(a + b)))


def test_piecewise_validation():
    with pytest.raises(DomainError):
        Modulus.piecewise([(1.0, 0.5), (2.0, 2.0)])
    with pytest.raises(DomainError):
        Modulus.piecewise([(1.0, 1.0), (2.0, 0.5)])
    with pytest.raises(DomainError):
        Modulus.piecewise([(0.0, 1.0), (1.0, 2.0)])
    merged = Modulus.piecewise([(1.0, 1.0), (2.0, 2.0), (3.0, 2.5)])
    assert merged.params == ((0.0, 0.0), (2.0, 2.0), (3.0, 2.5))
    assert not merged.bounded
    capped = Modulus.piecewise([(1.0, 1.0), (2.0, 1.0)])
    assert capped.sup == 1.0


@pytest.mark.parametrize("om", ALL, ids=lambda m: m.variant)
def test_config_roundtrip(om):
    assert modulus_from_config(om.to_json()) == om


def test_config_parsing():
    om = modulus_from_config({"variant": "piecewise_linear_concave", "nodes": "1,2\n3,3"})
    assert om(3.0) == 3.0
    with pytest.raises(ConfigError):
        modulus_from_config({"variant": "power", "c": 1.0})
    with pytest.raises(ConfigError):
        modulus_from_config({"variant": "cubic"})


def test_parameter_validation():
    for bad in (lambda: Modulus.linear(0), lambda: Modulus.power(1, 1.5), lambda: Modulus.truncated_linear(1, 0),
                lambda: Modulus.bounded_exp(1, 0)):
        with pytest.raises(DomainError):
            bad()
