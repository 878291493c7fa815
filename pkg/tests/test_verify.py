import json

import numpy as np
import pytest

from hypermod.config import preset_map
from hypermod.constructions import porosity_center, step1
from hypermod.funcspace import BallClamp, Constant, Identity
from hypermod.geometry import Euclidean, PoincareHalfPlane, StarTree
from hypermod.moduli import Modulus
from hypermod.verify import (
    CheckRecord,
    ReparametrizedSpace,
    VerificationReport,
    band_edges,
    case_of_pair,
    run_negative_controls,
    verify_dTheta,
    verify_modulus,
    verify_porosity,
    verify_retraction,
    verify_space,
    verify_step1,
    verify_step2,
)

LINE = Euclidean(1)
LIN = Modulus.linear(1.0)
STAR = StarTree(3)
CAPPED = Modulus.truncated_linear(1.0, 2.0)
MODELS = [Euclidean(2), PoincareHalfPlane(), StarTree(4)]


@pytest.fixture(scope="module")
def unbounded_rec():
    return step1(LINE, LIN, Identity(), 1.0, 0.5, 0.5)


@pytest.fixture(scope="module")
def bounded_rec():
    return step1(STAR, CAPPED, preset_map(STAR, "clamped_blend", {"radius": 1.0, "t": 0.5}), 1.0, 0.5, 0.5)


@pytest.mark.parametrize("sp", MODELS, ids=lambda s: s.model_tag)
def test_space_suite_passes(sp):
    rep = verify_space(sp, trials=5000)
    assert rep.passed, rep.to_markdown()
    ids = {c.check_id for c in rep.checks}
    assert {"segment_parametrization", "hyperbolicity"} <= ids


@pytest.mark.parametrize("sp", MODELS, ids=lambda s: s.model_tag)
def test_retraction_suite_passes(sp):
    assert verify_retraction(sp, trials=5000).passed


def test_reparametrized_space_breaks_geodesics():
    rep = verify_space(ReparametrizedSpace(LINE), trials=2000, expect_fail=True)
    c = rep.get("segment_parametrization")
    assert not c.passed and c.witness is not None and c.ok


@pytest.mark.parametrize("om", [LIN, CAPPED, Modulus.power(1.0, 0.5), Modulus.bounded_exp(2.0, 1.0)],
                         ids=lambda m: m.variant)
def test_modulus_suite(om):
    assert verify_modulus(om, trials=2000).passed


def test_step1_unbounded_suite(unbounded_rec):
    rep = verify_step1(unbounded_rec, pairs=4000, budget=2048, N=10, mesh=0.01)
    assert rep.passed, rep.to_markdown()


def test_step1_bounded_suite(bounded_rec):
    rep = verify_step1(bounded_rec, pairs=4000, budget=2048, N=10, mesh=0.01)
    assert rep.passed, rep.to_markdown()


def test_every_case_receives_samples(unbounded_rec, bounded_rec):
    for rec, n_cases in ((unbounded_rec, 4), (bounded_rec, 10)):
        rep = verify_step1(rec, pairs=4000, budget=1024, N=8, mesh=0.02)
        cases = rep.get("h_in_C_omega").details["cases"]
        assert len(cases) == n_cases
        assert min(v["pairs"] for v in cases.values()) > 0


def test_case_of_pair_is_symmetric(bounded_rec):
    edges = band_edges(bounded_rec)
    rng = np.random.default_rng(0)
    rx = rng.random(500) * edges[-2] * 1.5
    ry = rng.random(500) * edges[-2] * 1.5
    assert np.array_equal(case_of_pair(bounded_rec, rx, ry), case_of_pair(bounded_rec, ry, rx))


def test_step2_suite(unbounded_rec):
    rep = verify_step2(unbounded_rec, n_neighbors=5, budget=256)
    assert rep.passed, rep.to_markdown()


def test_porosity_suite():
    for f, eps in ((BallClamp(LINE.point(0.0), 1.0), 1.0), (Constant(LINE.point(0.0)), 0.25)):
        rec = porosity_center(LINE, LIN, f, 1.0, eps)
        rep = verify_porosity(rec, n_samples=5, pairs=1000)
        assert rep.passed, rep.to_markdown()


def test_dtheta_suite():
    rep = verify_dTheta(LINE, trials=50, N=20)
    assert rep.passed, rep.to_markdown()


def test_negative_controls_all_caught():
    rep = run_negative_controls(trials=2000)
    assert len(rep.checks) == 5
    for c in rep.checks:
        assert c.expect_fail and not c.passed and c.witness is not None, c.check_id
    assert rep.passed


def test_reports_are_deterministic(unbounded_rec):
    a = verify_step1(unbounded_rec, pairs=1000, budget=512, N=8, mesh=0.02, seed=3)
    b = verify_step1(unbounded_rec, pairs=1000, budget=512, N=8, mesh=0.02, seed=3)
    assert a.stable_json() == b.stable_json()
    assert a.to_markdown(timing=False) == b.to_markdown(timing=False)


def test_check_record_json_and_markdown():
    rep = VerificationReport("demo", seed=1)
    rep.add(CheckRecord("good", "claim a", np.bool_(True), 10, 1e-9, np.float64(-0.0)))
    rep.add(CheckRecord("bad", "claim b", False, 10, 1e-9, -1.0, witness={"x": np.array([1.0])},
                        expect_fail=True))
    data = json.loads(rep.stable_json())
    assert data["passed"] is True
    assert data["checks"][0]["margin"] == 0.0 and str(data["checks"][0]["margin"]) == "0.0"
    assert "seconds" not in data["checks"][0]
    md = rep.to_markdown(timing=False)
    assert "seconds" not in md and "## Witnesses" in md and "`bad`" in md
    assert "seconds" in rep.to_markdown()
