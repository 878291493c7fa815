import json
import math

import numpy as np
import pytest

from hypermod.config import preset_map
from hypermod.constructions import (
    ConstructionRecord,
    choose_p,
    choose_p_pointwise,
    phi_f_estimate,
    phi_f_profile,
    porosity_center,
    retraction_eval,
    step1,
    step1_bounded,
    step1_unbounded,
    step2_eta,
    step2_q,
)
from hypermod.errors import DomainError, InfeasibleError, MisuseError
from hypermod.funcspace import (
    BallClamp,
    Constant,
    DenseSequence,
    Identity,
    RetractionParams,
    apply_retraction,
    blend,
    eval_map,
    evaluate,
    metric_d,
    metric_dinf,
)
from hypermod.geometry import Euclidean, PoincareHalfPlane, StarTree
from hypermod.moduli import Modulus

LINE = Euclidean(1)
LIN = Modulus.linear(1.0)
STAR = StarTree(3)
CAPPED = Modulus.truncated_linear(1.0, 2.0)


def d(space, a, b):
    return float(space.dist(space.as_array(a)[0], space.as_array(b)[0]))


# -- retraction ----------------------------------------------------------------

@pytest.mark.parametrize("x,out", [(1.5, 1.0), (0.5, 0.0), (1.0, 0.0), (-1.5, -1.0), (1.75, 1.5), (2.0, 2.0),
                                   (7.0, 7.0), (-3.0, -3.0)])
def test_retraction_examples(x, out):
    phi = RetractionParams(LINE.point(0.0), 1.0, 2.0)
    assert retraction_eval(LINE, phi, LINE.point(x)).coords == pytest.approx((out,), abs=1e-15)


def test_retraction_lipschitz_bound_on_half_plane():
    sp = PoincareHalfPlane()
    phi = RetractionParams(sp.point(0.0, 1.0), 1.0, 3.0)
    rng = np.random.default_rng(0)
    X = sp.sample_ball(sp.base_point, 5.0, rng, 2000)
    Y = sp.sample_ball(sp.base_point, 5.0, rng, 2000)
    RX, RY = apply_retraction(sp, phi, X), apply_retraction(sp, phi, Y)
    assert np.all(sp.dist(RX, RY) <= 1.5 * sp.dist(X, Y) + 1e-9)    # r / (r - delta) = 3 / 2


# -- scalar choices --------------------------------------------------------------

def test_choose_p_uses_strict_tail_bound():
    assert choose_p(0.5) == 3      # 2^-2 = eps/2 is not strictly below
    assert choose_p(0.25) == 4
    assert choose_p(3.0) == 1
    with pytest.raises(DomainError):
        choose_p(0.0)


def test_step2_eta_examples():
    assert step2_eta(2.0, 0.5, 3) == 0.03125
    assert step2_eta(100.0, 0.5, 1) == 0.5
    with pytest.raises(DomainError):
        step2_eta(1.0, 0.5, 0)


def test_step2_q_is_strict():
    assert step2_q(LINE, LINE.point(0.0), LINE.point(2.0)) == 3
    assert step2_q(LINE, LINE.point(0.0), LINE.point(2.5), LINE.point(-1.0)) == 3


# -- Step 1, unbounded modulus --------------------------------------------------------

@pytest.fixture(scope="module")
def unbounded_rec():
    return step1(LINE, LIN, Identity(), 1.0, 0.5, 0.5)


def test_step1_unbounded_scalars(unbounded_rec):
    # frozen from an independent recomputation of the closed forms
    sc, pt = unbounded_rec.scalars, unbounded_rec.points
    assert sc["p"] == 3
    assert sc["t"] == pytest.approx(0.0825, rel=1e-14)
    assert sc["M"] == pytest.approx(24.242424242424242, rel=1e-12)
    assert sc["R"] == pytest.approx(586.6951331496786, rel=1e-12)
    assert pt["z0"].coords[0] == pytest.approx(590.6951331496786, rel=1e-12)
    assert pt["y0"].coords[0] == pytest.approx(589.6951331496786, rel=1e-12)
    assert pt["w0"].coords[0] == pytest.approx(541.9627846648301, rel=1e-12)
    assert pt["e0"].coords[0] == pytest.approx(542.9627846648301, rel=1e-12)
    assert sc["q"] == 591
    assert sc["eta"] == pytest.approx(1.542348713665846e-179, rel=1e-12)


def test_step1_unbounded_closed_form_relations(unbounded_rec):
    sc = unbounded_rec.scalars
    t, M, s = sc["t"], sc["M"], sc["s"]
    assert t <= sc["mu"] / 4
    assert LIN(sc["p"]) * t < sc["eps"] / 2
    assert sc["R"] == pytest.approx((2 - t) * (M + s) / t, rel=1e-14)
    grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e4, 2000)])
    assert np.all(LIN(M + grid) >= sc["omega_s"] + (1 - t / 2) * LIN(grid) - 1e-9)


def test_step1_unbounded_hits_target(unbounded_rec):
    rec = unbounded_rec
    hy = eval_map(LINE, rec.h, rec.points["y0"])
    hz = eval_map(LINE, rec.h, rec.points["z0"])
    assert d(LINE, hy, hz) == pytest.approx(LIN(1.0), abs=1e-9)
    assert d(LINE, rec.points["y0"], rec.points["z0"]) == pytest.approx(1.0, abs=1e-9)
    assert hz == rec.points["e0"]


def test_step1_unbounded_is_close_to_f(unbounded_rec):
    rec = unbounded_rec
    enc = metric_d(LINE, rec.f, rec.h, rec.points["x0"], 20, 0.01, LIN)
    assert enc.hi < rec.scalars["eps"]


def test_step1_unbounded_rejects_bounded_modulus():
    with pytest.raises(MisuseError):
        step1_unbounded(STAR, CAPPED, Identity(), 1.0, 0.5, 0.5)


@pytest.mark.parametrize("s,mu,eps", [(0.0, 0.5, 0.5), (1.0, 1.0, 0.5), (1.0, 0.5, -1.0)])
def test_step1_parameter_errors(s, mu, eps):
    with pytest.raises(DomainError):
        step1(LINE, LIN, Identity(), s, mu, eps)


# -- Step 1, bounded modulus --------------------------------------------------------

@pytest.fixture(scope="module")
def bounded_constant():
    return step1(STAR, CAPPED, preset_map(STAR, "constant", {}), 1.0, 0.5, 0.5)


@pytest.fixture(scope="module")
def bounded_blend():
    return step1(STAR, CAPPED, preset_map(STAR, "clamped_blend", {"radius": 1.0, "t": 0.5}), 1.0, 0.5, 0.5)


def test_step1_bounded_scalars(bounded_constant):
    sc, pt = bounded_constant.scalars, bounded_constant.points
    assert bounded_constant.kind == "step1_bounded"
    assert sc["t"] == 0.125
    assert sc["s_prime"] == 1.875
    assert sc["M"] == 6.625
    assert sc["R"] == 53.0
    assert sc["q"] == 58
    assert pt["z0"].coords == (1.0, 57.0)
    assert pt["e0"].coords == (1.0, 1.75)
    assert pt["w1"].coords == (0.0, 0.0)
    assert pt["w2"].coords == (1.0, 0.875)


def test_step1_bounded_points_for_blend(bounded_blend):
    pt = bounded_blend.points
    assert pt["w0"].coords == (1.0, 0.4375)
    assert pt["e0"].coords == (1.0, 1.3125)
    assert pt["w1"].coords == (2.0, 0.4375)
    assert pt["w2"].coords == (1.0, 0.4375)


@pytest.mark.parametrize("which", ["bounded_constant", "bounded_blend"])
def test_step1_bounded_hits_target(which, request):
    rec = request.getfixturevalue(which)
    hy = eval_map(STAR, rec.h, rec.points["y0"])
    hz = eval_map(STAR, rec.h, rec.points["z0"])
    sc = rec.scalars
    gap = d(STAR, rec.points["w1"], rec.points["e0"])
    assert d(STAR, hy, hz) == pytest.approx(sc["omega_s"] / sc["Omega"] * gap, abs=1e-12)
    assert d(STAR, hy, hz) > (1 - 2 * sc["t"]) * sc["omega_s"]
    assert rec.scalars["omega_s_prime"] >= (1 - rec.scalars["guard"] * rec.scalars["t"]) * CAPPED.sup


def test_step1_bounded_direct_call_requires_bounded():
    with pytest.raises(MisuseError):
        step1_bounded(LINE, LIN, Identity(), 1.0, 0.5, 0.5)


# -- records -------------------------------------------------------------------------

def test_record_roundtrip(bounded_blend):
    text = bounded_blend.dumps()
    again = ConstructionRecord.from_json(json.loads(text))
    assert again.dumps() == text
    X = STAR.sample_ball(STAR.base_point, 60.0, np.random.default_rng(0), 500)
    assert np.array_equal(evaluate(STAR, again.h, X), evaluate(STAR, bounded_blend.h, X))


def test_record_is_deterministic():
    a = step1(STAR, CAPPED, preset_map(STAR, "clamped_blend", {"radius": 1.0, "t": 0.5}), 1.0, 0.5, 0.5)
    b = step1(STAR, CAPPED, preset_map(STAR, "clamped_blend", {"radius": 1.0, "t": 0.5}), 1.0, 0.5, 0.5)
    assert a.dumps() == b.dumps()


# -- porosity ---------------------------------------------------------------------------

def test_porosity_clamp_example():
    f = BallClamp(LINE.point(0.0), 1.0)
    rec = porosity_center(LINE, LIN, f, 1.0, 1.0)
    sc = rec.scalars
    assert (sc["gamma"], sc["alpha"], sc["Omega"], sc["eps0"], sc["rakotch"]) == (0.25, 0.0625, 2.0, 4.0, 0.875)
    enc = metric_dinf(LINE, f, rec.g, 4000, 0.01, LIN)
    assert enc.hi <= sc["gamma"] * sc["Omega"] / 2 + 1e-12   # the sup of |f - f(x0)| is 1, not 2


def test_porosity_constant_example():
    rec = porosity_center(LINE, LIN, Constant(LINE.point(0.0)), 1.0, 0.25)
    sc = rec.scalars
    assert (sc["eps0"], sc["alpha"], sc["rakotch"], sc["gamma"]) == (0.25, 1.0, 0.5, 0.0)
    with pytest.raises(DomainError):
        porosity_center(LINE, LIN, Constant(LINE.point(0.0)), 1.0, 0.5)


def test_porosity_errors():
    with pytest.raises(MisuseError):
        porosity_center(LINE, LIN, Identity(), 1.0, 0.5)
    with pytest.raises(DomainError):
        porosity_center(LINE, LIN, BallClamp(LINE.point(0.0), 1.0), 1.0, 5.0)
    with pytest.raises(DomainError):
        porosity_center(LINE, LIN, BallClamp(LINE.point(0.0), 1.0), 0.0, 1.0)


def test_phi_f_estimates():
    assert phi_f_estimate(LINE, LIN, Constant(LINE.point(2.0)), 1.0, 2000) == 0.0
    assert phi_f_estimate(LINE, LIN, Identity(), 1.0, 2000) == pytest.approx(1.0, abs=1e-12)
    gamma = 0.25
    v = phi_f_estimate(LINE, LIN, blend(Identity(), Constant(LINE.point(0.0)), gamma), 1.0, 2000)
    assert v == pytest.approx(1 - gamma, abs=1e-12)


def test_phi_f_profile_is_nonincreasing():
    f = BallClamp(LINE.point(0.0), 1.0)
    prof = phi_f_profile(LINE, LIN, f, [0.1, 0.5, 1.0, 2.0, 4.0, 8.0], 5000)
    assert np.all(np.diff(prof) <= 0)
    assert np.all(prof <= 1.0 + 1e-12)
    with pytest.raises(DomainError):
        phi_f_profile(LINE, LIN, f, [0.0], 100)


# -- pointwise topology ---------------------------------------------------------------

INTS = np.array([0] + [v for k in range(1, 40) for v in (k, -k)], dtype=float)[:, None]


def test_choose_p_pointwise_on_integers():
    theta = DenseSequence.from_points(LINE, INTS)
    p = choose_p_pointwise(theta, LINE.point(0.0), 0.25, 50)
    assert p == 3
    # tail sum for p = 3: indices n >= 6 (values 3, -3, ...) give 2^-5 exactly
    w = 2.0 ** -np.arange(1, len(INTS) + 1)
    assert float(np.sum(w[np.abs(INTS[:, 0]) >= 3])) == pytest.approx(0.03125, abs=2.0 ** -len(INTS))


def test_choose_p_pointwise_edge_cases():
    theta = DenseSequence.from_points(LINE, INTS)
    assert choose_p_pointwise(theta, LINE.point(0.0), 2.0, 50) == 1
    with pytest.raises(InfeasibleError):
        choose_p_pointwise(theta, LINE.point(0.0), 0.25, 2)
    with pytest.raises(InfeasibleError):
        choose_p_pointwise(DenseSequence.from_points(LINE, INTS[:4]), LINE.point(0.0), 0.25, 50)
    with pytest.raises(DomainError):
        choose_p_pointwise(theta, LINE.point(0.0), 0.0, 50)


def test_choose_p_pointwise_rational_sequence():
    theta = DenseSequence.rational(LINE)
    p = choose_p_pointwise(theta, LINE.point(0.0), 0.25, 50)
    T = theta.points(64)
    w = 2.0 ** -np.arange(1, 65)
    assert float(np.sum(w[np.abs(T[:, 0]) >= p])) + 2.0 ** -64 < 0.125
    assert math.isfinite(p)
