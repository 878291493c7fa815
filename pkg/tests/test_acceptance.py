"""Acceptance suite: one test per criterion, each printing a single result line.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
Budgets and tolerances are the full ones; the whole file runs in well under a minute.
"""

import math
import time

import pytest

from hypermod.config import preset_map
from hypermod.constructions import porosity_center, step1
from hypermod.funcspace import BallClamp, Constant, Identity
from hypermod.geometry import Euclidean, PoincareHalfPlane, StarTree
from hypermod.moduli import Modulus
from hypermod.verify import (
    run_negative_controls,
    verify_dTheta,
    verify_porosity,
    verify_retraction,
    verify_space,
    verify_step1,
    verify_step2,
)

MODELS = (Euclidean(2), PoincareHalfPlane(), StarTree(5))
LINE = Euclidean(1)
LIN = Modulus.linear(1.0)
STAR = StarTree(3)
CAPPED = Modulus.truncated_linear(1.0, 2.0)


def report_line(n, title, ok, seconds, limit, note=""):
    verdict = "PASS" if ok and seconds < limit else "FAIL"
    line = f"[criterion {n}] {verdict}  {title}  ({seconds:.1f} s, limit {limit:g} s){'  ' + note if note else ''}"
    print("\n" + line)
    return verdict == "PASS"


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def failures(rep):
    bad = [c.check_id for c in rep.checks if not c.ok]
    return "failing: " + ", ".join(bad) if bad else ""


def notes(*parts):
    return "; ".join(p for p in parts if p)


def test_criterion_1_space_axioms():
    worst, ok, bad = 0.0, True, []
    for sp in MODELS:
        rep, sec = timed(lambda: verify_space(sp, trials=100000, tol=1e-9))
        worst = max(worst, sec)
        if not (rep.passed and sec < 30):
            ok = False
            bad.append(f"{sp.model_tag}: {failures(rep)}")
    assert report_line(1, "space axioms, 3 models x 1e5 trials, tol 1e-9", ok, worst, 30, "; ".join(bad)), bad


def test_criterion_2_retraction():
    total, ok = 0.0, True
    for sp in MODELS:
        rep, sec = timed(lambda: verify_retraction(sp, trials=100000, tol=1e-9))
        total += sec
        ok = ok and rep.passed
    assert report_line(2, "radial retraction, 3 models x 1e5 pairs", ok, total, 30)


def test_criterion_3_step1_unbounded():
    def go():
        rec = step1(LINE, LIN, Identity(), 1.0, 0.5, 0.5)
        return rec, verify_step1(rec, pairs=100000, budget=20000, N=30, mesh=1e-3)

    (rec, rep), sec = timed(go)
    cases = rep.get("h_in_C_omega").details["cases"]
    prox = rep.get("proximity").details["hi"]
    ok = (rep.passed and len(cases) == 4 and all(v["pairs"] > 0 for v in cases.values())
          and prox < 0.5 and rep.get("separation").passed)
    assert report_line(3, "Step 1, unbounded omega on the line", ok, sec, 120,
                       notes(f"d(f,h) <= {prox:.4f}", failures(rep))), rep.to_markdown()


@pytest.mark.parametrize("preset", ["constant", "clamped_blend"])
def test_criterion_4_step1_bounded(preset):
    def go():
        f = preset_map(STAR, preset, {"radius": 1.0, "t": 0.5} if preset != "constant" else {})
        rec = step1(STAR, CAPPED, f, 1.0, 0.5, 0.5)
        return rec, verify_step1(rec, pairs=100000, budget=20000, N=30, mesh=1e-3)

    (rec, rep), sec = timed(go)
    cases = rep.get("h_in_C_omega").details["cases"]
    sc = rec.scalars
    phi_ok = abs(rec.diagnostics["phi_e0"] - (1 - sc["t"]) * sc["Omega"]) <= sc["t"] * sc["Omega"] / 4
    ok = (rep.passed and len(cases) == 10 and all(v["pairs"] > 0 for v in cases.values()) and phi_ok
          and rep.get("separation").passed)
    assert report_line(4, f"Step 1, bounded omega on the star tree, f = {preset}", ok, sec, 180,
                       failures(rep)), rep.to_markdown()


def test_criterion_5_step2():
    def go():
        rec = step1(LINE, LIN, Identity(), 1.0, 0.5, 0.5)
        return verify_step2(rec, n_neighbors=50)

    rep, sec = timed(go)
    ok = rep.passed and rep.budgets.get("n_neighbors", 50) >= 50
    assert report_line(5, "Step 2, 50 neighbours within eta", ok, sec, 120, failures(rep)), rep.to_markdown()


@pytest.mark.parametrize("case", ["Omega>0", "constant f"])
def test_criterion_6_porosity(case):
    def go():
        if case == "Omega>0":
            rec = porosity_center(LINE, LIN, BallClamp(LINE.point(0.0), 1.0), 1.0, 1.0)
        else:
            rec = porosity_center(LINE, LIN, Constant(LINE.point(0.0)), 1.0, 0.25)
        return verify_porosity(rec, n_samples=50, pairs=10000)

    rep, sec = timed(go)
    assert report_line(6, f"porosity, {case}, 50 maps x 1e4 pairs", rep.passed, sec, 120,
                       failures(rep)), rep.to_markdown()


def test_criterion_7_dtheta():
    rep, sec = timed(lambda: verify_dTheta(LINE, trials=1000, N=30))
    width = rep.get("blend_convergence").details["width"]
    ok = rep.passed and width < 2.0 ** -20
    assert report_line(7, "d_Theta metric axioms and 1/k convergence", ok, sec, 60,
                       notes(f"width {width:.2e}", failures(rep))), rep.to_markdown()


def test_criterion_8_negative_controls():
    rep, sec = timed(lambda: run_negative_controls())
    caught = [c for c in rep.checks if c.expect_fail and not c.passed and c.witness is not None]
    ok = len(rep.checks) >= 5 and len(caught) == len(rep.checks)
    assert report_line(8, f"negative controls, {len(caught)}/{len(rep.checks)} caught with witnesses", ok, sec,
                       math.inf), rep.to_markdown()


def test_criterion_9_reproducibility():
    def go():
        out = []
        for _ in range(2):
            f = preset_map(STAR, "clamped_blend", {"radius": 1.0, "t": 0.5})
            rec = step1(STAR, CAPPED, f, 1.0, 0.5, 0.5, rng_seed=11)
            rep = verify_step1(rec, pairs=20000, budget=4096, N=20, mesh=1e-2, seed=11)
            out.append((rec.dumps(), rep.stable_json()))
        return out

    (a, b), sec = timed(go)
    assert report_line(9, "identical seed and config reproduce record and report", a == b, sec, math.inf)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
