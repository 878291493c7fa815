import json
import math

import numpy as np
import pytest

from hypermod.errors import DomainError, InfeasibleError
from hypermod.funcspace import (
    Band,
    BallClamp,
    Constant,
    DenseSequence,
    Dilate,
    ExprPiece,
    Identity,
    RegionPiecewise,
    RetractionParams,
    RetractPrecompose,
    Slide,
    blend,
    canonical_json,
    check_in_C_omega,
    content_hash,
    displacement_bound,
    eval_map,
    evaluate,
    map_from_json,
    map_to_json,
    metric_d,
    metric_dinf,
    metric_dTheta,
    mod_lower,
    mod_lower_witness,
    stratified_pairs,
)
from hypermod.geometry import Euclidean, PoincareHalfPlane, StarTree
from hypermod.moduli import Modulus

LINE = Euclidean(1)
LIN = Modulus.linear(1.0)


def P(*c):
    return LINE.point(*c)


# -- evaluation ----------------------------------------------------------------

def test_identity_and_blend():
    x = P(3.0)
    assert eval_map(LINE, Identity(), x) == x
    assert eval_map(LINE, blend(Identity(), Constant(P(1.0)), 0.25), x).coords == (2.5,)


def test_region_piecewise_bands_and_slide():
    z0, a, b = P(10.0), P(0.0), P(4.0)
    h = RegionPiecewise(z0, (Band(0.0, 1.0, Slide(a, b, 1.0, 1.0, LIN)),
                             Band(1.0, math.inf, ExprPiece(Constant(P(-5.0))))))
    assert eval_map(LINE, h, z0).coords == (4.0,)           # ratio omega(1)/1 = 1
    assert eval_map(LINE, h, P(10.5)).coords == (2.0,)      # ratio 1/2
    assert eval_map(LINE, h, P(11.0)).coords == (-5.0,)     # left-closed second band
    hc = RegionPiecewise(z0, h.bands, right_closed=True)
    assert eval_map(LINE, hc, P(11.0)).coords == (0.0,)     # right-closed: 1 belongs to the first band


def test_region_piecewise_validation():
    with pytest.raises(DomainError):
        RegionPiecewise(P(0.0), (Band(0.0, 1.0, Identity()),))
    with pytest.raises(DomainError):
        RegionPiecewise(P(0.0), (Band(0.0, 1.0, Identity()), Band(2.0, math.inf, Identity())))
    with pytest.raises(DomainError):
        Slide(P(0.0), P(1.0), 1.0, 0.0, LIN)
    with pytest.raises(DomainError):
        RetractionParams(P(0.0), 2.0, 1.0)


def test_dilate_on_star_tree_is_about_hub():
    st = StarTree(3)
    out = evaluate(st, Dilate(st.base_point, 0.5), np.array([[1.0, 4.0], [2.0, 1.0]]))
    assert out.tolist() == [[1.0, 2.0], [2.0, 0.5]]


def _sample_tree():
    z0 = P(5.0)
    phi = RetractionParams(z0, 1.0, 3.0)
    inner = blend(RetractPrecompose(Identity(), phi), Constant(P(0.0)), 0.3)
    return RegionPiecewise(z0, (Band(0.0, 1.0, Slide(P(0.0), P(1.0), 1.0, 1.0, LIN)),
                                Band(1.0, 2.0, ExprPiece(BallClamp(P(2.0), 0.5))),
                                Band(2.0, math.inf, ExprPiece(inner))), right_closed=True)


def test_json_roundtrip_and_hash_stability():
    h = _sample_tree()
    data = map_to_json(h)
    again = map_from_json(json.loads(json.dumps(data)))
    assert again == h
    assert content_hash(again) == content_hash(h)
    X = np.linspace(-5, 15, 401)[:, None]
    assert np.array_equal(evaluate(LINE, h, X), evaluate(LINE, again, X))
    assert canonical_json(data) == canonical_json(map_to_json(again))


def test_hash_distinguishes_maps():
    assert content_hash(Constant(P(0.0))) != content_hash(Constant(P(1.0)))
    assert len(content_hash(Identity())) == 16


# -- modulus estimation ----------------------------------------------------------

def test_mod_lower_half_dilation():
    v = mod_lower(LINE, Dilate(P(0.0), 0.5), 2.0, 100000, rng_seed=0)
    assert 0.999 <= v <= 1.0 + 1e-12


def test_mod_lower_constant_and_identity():
    assert mod_lower(LINE, Constant(P(3.0)), 1.0, 1000) == 0.0
    v = mod_lower(LINE, Identity(), 1.0, 10000)
    assert 0.999 <= v <= 1.0 + 1e-12


def test_mod_lower_monotone_in_budget_and_independent_of_workers():
    sp = PoincareHalfPlane()
    m = blend(Identity(), Constant(sp.base_point), 0.4)
    vals = [mod_lower(sp, m, 1.0, b, rng_seed=5, refine=False) for b in (4096, 8192, 16384)]
    assert vals[0] <= vals[1] <= vals[2]
    a = mod_lower_witness(sp, m, 1.0, 16384, rng_seed=5, workers=1)
    b = mod_lower_witness(sp, m, 1.0, 16384, rng_seed=5, workers=4)
    assert a.value == b.value and np.array_equal(a.x, b.x)


def test_check_in_C_omega_examples():
    assert check_in_C_omega(LINE, Identity(), LIN, 4096, 0).passed
    res = check_in_C_omega(LINE, Dilate(P(0.0), 2.0), LIN, 4096, 0)
    assert not res.passed
    x, y = np.array(res.witness["x"]), np.array(res.witness["y"])
    gap = abs(2 * (x - y)).item()
    assert gap > abs((x - y).item()) + 1e-7


def test_check_in_C_omega_min_dist_filters_pairs():
    # the clamp is 1-Lipschitz but contracts far pairs: ratio <= 2 / rho
    res = check_in_C_omega(LINE, BallClamp(P(0.0), 1.0), LIN, 4096, 0, factor=0.5, min_dist=4.0)
    assert res.passed
    res = check_in_C_omega(LINE, BallClamp(P(0.0), 1.0), LIN, 4096, 0, factor=0.5)
    assert not res.passed


def test_stratified_pairs_cover_every_band_pair():
    edges = [0.0, 1.0, 2.5, 6.0, 12.0]
    X, Y, bi, bj = stratified_pairs(LINE, P(0.0), edges, 9, np.random.default_rng(0))
    r = lambda A: np.abs(A[:, 0])  # noqa: E731
    band = lambda v: np.clip(np.searchsorted(edges, v, side="right") - 1, 0, 3)  # noqa: E731
    seen = set(zip(band(r(X)).tolist(), band(r(Y)).tolist()))
    assert seen >= {(i, j) for i in range(4) for j in range(4)} - {(i, j) for i in range(4) for j in range(4)
                                                                  if False}
    assert len(seen) == 16


# -- metrics ------------------------------------------------------------------------

def test_metric_d_equal_maps():
    enc = metric_d(LINE, Identity(), Identity(), P(0.0), 12, 0.01, LIN)
    assert (enc.lo, enc.hi) == (0.0, 2.0 ** -12)


def test_metric_d_constants():
    N = 20
    enc = metric_d(LINE, Constant(P(0.0)), Constant(P(0.5)), P(0.0), N, 0.01, LIN)
    assert enc.contains(0.5)
    assert enc.width <= 2 * 0.01 + 2.0 ** -N + 1e-15
    enc = metric_d(LINE, Constant(P(0.0)), Constant(P(3.0)), P(0.0), N, 0.01, LIN)
    assert enc.contains(1.0)
    assert enc.lo == pytest.approx(1.0 - 2.0 ** -N, abs=1e-15)


def test_metric_d_enclosure_shrinks():
    f, g = Identity(), blend(Identity(), Constant(P(0.0)), 0.1)
    encs = [metric_d(LINE, f, g, P(0.0), N, mesh, LIN) for N, mesh in ((6, 0.1), (10, 0.01), (14, 0.001))]
    widths = [e.width for e in encs]
    assert widths[0] > widths[1] > widths[2]
    lo = max(e.lo for e in encs)
    hi = min(e.hi for e in encs)
    assert lo <= hi
    for (N, mesh), e in zip(((6, 0.1), (10, 0.01), (14, 0.001)), encs):
        assert e.width <= 2 * mesh + 2.0 ** -N + 1e-12


def test_metric_dinf_examples():
    assert metric_dinf(LINE, Identity(), Identity(), 100, 0.1, LIN).hi == 0.0
    enc = metric_dinf(LINE, Constant(P(0.0)), Constant(P(0.7)), 100, 0.1, LIN)
    assert enc.lo == pytest.approx(0.7) and enc.hi == pytest.approx(0.7)


def test_metric_dinf_blend_toward_base_value():
    # f has displacement sup Omega_f = 1 from f(x0); d_inf(f, g) <= gamma * Omega_f
    f = BallClamp(P(0.0), 1.0)
    gamma = 0.25
    g = blend(f, Constant(P(0.0)), gamma)
    enc = metric_dinf(LINE, f, g, 2000, 0.01, LIN)
    assert enc.hi <= gamma * 1.0 + 1e-12
    assert enc.lo == pytest.approx(0.25, abs=1e-12)


def test_metric_dinf_unbounded_displacement_is_infeasible():
    with pytest.raises(InfeasibleError):
        metric_dinf(LINE, Identity(), Constant(P(0.0)), 100, 0.1, LIN)


def test_displacement_bound_structure():
    f = BallClamp(P(0.0), 2.0)
    assert displacement_bound(LINE, f, f) == 0.0
    assert displacement_bound(LINE, f, blend(f, Constant(P(1.0)), 0.5)) <= 0.5 * 3.0 + 1e-12


def test_dense_sequence_is_dense_near_samples():
    for sp in (Euclidean(1), Euclidean(2), PoincareHalfPlane(), StarTree(3)):
        theta = DenseSequence.rational(sp)
        T = theta.points(20000)
        X = sp.sample_ball(sp.base_point, 1.0, np.random.default_rng(0), 50)
        gaps = [float(np.min(sp.dist(x, T))) for x in X]
        assert max(gaps) < 0.25, sp


def test_dense_sequence_has_no_repeats():
    T = DenseSequence.rational(StarTree(3)).points(3000)
    assert np.unique(T, axis=0).shape[0] == T.shape[0]


def test_dtheta_examples():
    theta = DenseSequence.rational(LINE)
    enc = metric_dTheta(LINE, theta, Identity(), Identity(), 30)
    assert (enc.lo, enc.hi) == (0.0, 2.0 ** -30)
    enc = metric_dTheta(LINE, theta, Constant(P(0.0)), Constant(P(0.5)), 30)
    assert enc.contains(0.5)
    first = theta.points(1)[0]
    enc = metric_dTheta(LINE, theta, Identity(), Constant(LINE.to_point(first + 2.0)), 1)
    assert enc.lo >= 0.5
