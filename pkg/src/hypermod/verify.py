"""Property checks that replay every inequality the constructions rely on.

Each suite returns a :class:`VerificationReport` made of :class:`CheckRecord`
entries.  A record carries the worst margin found (positive means slack), the
number of trials, the tolerance, and a concrete witness whenever it fails.
Negative controls are records that are expected to fail; a report is green
when every ordinary check passes and every control fails.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .constructions import (
    ConstructionRecord,
    choose_p,
    image_diameter_bound,
    phi_f_profile,
    step2_eta,
    step2_q,
)
from .funcspace import (
    Band,
    Constant,
    DenseSequence,
    GeodesicBlend,
    Identity,
    RegionPiecewise,
    RetractionParams,
    Slide,
    apply_retraction,
    blend,
    canonical_json,
    check_in_C_omega,
    chunk_rng,
    displacement_bound,
    evaluate,
    metric_d,
    metric_dTheta,
    metric_dinf,
    mod_lower_witness,
    pair_margins,
    sample_points,
    stratified_pairs,
)
from .geometry import Space
from .moduli import Modulus, find_M

GEOMETRY_TOL = 1e-9
CONSTRUCTION_TOL = 1e-7


# ---------------------------------------------------------------------------
# report types
# ---------------------------------------------------------------------------

@dataclass
class CheckRecord:
    check_id: str
    claim: str
    passed: bool
    trials: int
    tol: float
    margin: float
    witness: dict | None = None
    expect_fail: bool = False
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.margin = float(self.margin) + 0.0

    @property
    def ok(self) -> bool:
        if self.expect_fail:
            return (not self.passed) and self.witness is not None
        return self.passed

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "check_id": self.check_id,
            "claim": self.claim,
            "verdict": "PASS" if self.passed else "FAIL",
            "expected": "FAIL" if self.expect_fail else "PASS",
            "ok": self.ok,
            "trials": int(self.trials),
            "tol": self.tol,
            "margin": _clean(self.margin),
            "witness": _clean(self.witness),
            "details": _clean(self.details),
        }
        if timing:
            out["seconds"] = round(self.seconds, 4)
        return out


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in sorted(v.items(), key=lambda kv: str(kv[0]))}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class VerificationReport:
    suite: str
    checks: list = field(default_factory=list)
    seed: int = 0
    budgets: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.checks.append(rec)
        return rec

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(replace(c, check_id=prefix + c.check_id))

    def get(self, check_id: str) -> CheckRecord:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "passed": self.passed,
            "seed": self.seed,
            "budgets": _clean(self.budgets),
            "checks": [c.to_json(timing=False) for c in self.checks],
        }
        if timing:
            out["timing"] = {c.check_id: round(c.seconds, 4) for c in self.checks}
        return out

    def stable_json(self) -> str:
        """Canonical JSON without wall-clock data; identical for identical inputs."""
        return canonical_json(self.to_json(timing=False))

    def to_markdown(self, timing: bool = True) -> str:
        head = "| check | claim | verdict | expected | trials | margin |"
        lines = [
            f"# {self.suite}",
            "",
            f"Overall: **{'PASS' if self.passed else 'FAIL'}** (seed {self.seed})",
            "",
            head + (" seconds |" if timing else ""),
            "|---" * (7 if timing else 6) + "|",
        ]
        for c in self.checks:
            row = (f"| {c.check_id} | {c.claim} | {'PASS' if c.passed else 'FAIL'} | "
                   f"{'FAIL' if c.expect_fail else 'PASS'} | {c.trials} | {_fmt(c.margin)} |")
            lines.append(row + (f" {c.seconds:.3f} |" if timing else ""))
        failing = [c for c in self.checks if not c.passed and c.witness is not None]
        if failing:
            lines += ["", "## Witnesses", ""]
            for c in failing:
                lines.append(f"- `{c.check_id}`: `{canonical_json(_clean(c.witness))}`")
        return "\n".join(lines) + "\n"


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, float) and math.isfinite(x):
        return f"{x:.3e}"
    return str(x)


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _worst(margins, *arrays):
    """Index and value of the smallest margin; arrays are sliced into a witness."""
    margins = np.asarray(margins, dtype=float)
    i = int(np.argmin(margins))
    return float(margins[i]), {f"a{k}": np.asarray(a)[i].tolist() for k, a in enumerate(arrays)}


def _record(check_id, claim, margins, tol, arrays, names, extra=None, expect_fail=False, seconds=0.0):
    margin, raw = _worst(margins, *arrays)
    witness = {names[k]: raw[f"a{k}"] for k in range(len(arrays))}
    if extra:
        witness.update(extra)
    passed = bool(margin >= -tol)
    return CheckRecord(check_id, claim, passed, int(np.size(margins)), tol, margin,
                       None if passed else witness, expect_fail, seconds=seconds)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

class ReparametrizedSpace:
    """Wraps a space and replaces ``combine(p, q, t)`` by ``combine(p, q, t**2)``.

    This breaks the constant-speed parametrization of geodesics and is used
    as a negative control.
    """

    def __init__(self, base: Space):
        self._base = base

    def __getattr__(self, name):
        return getattr(self._base, name)

    def combine(self, P, Q, t):
        return self._base.combine(P, Q, np.asarray(t, dtype=float) ** 2)


def _default_radius(space) -> float:
    return 3.0 if space.model_tag == "poincare_half_plane" else 5.0


def verify_space(space: Space, trials: int = 100000, tol: float = GEOMETRY_TOL, seed: int = 0,
                 radius: float | None = None, expect_fail: bool = False) -> VerificationReport:
    """Metric axioms, geodesic identities, hyperbolicity, ball convexity and ray isometry."""
    rep = VerificationReport(f"space:{space.model_tag}", seed=seed, budgets={"trials": trials})
    radius = _default_radius(space) if radius is None else radius
    rng = np.random.default_rng([seed, 100])
    x0 = space.base_point
    n = trials

    def pts():
        return space.sample_ball(x0, radius, rng, n)

    def comb(P, Q, T):
        return np.atleast_2d(space.combine(P, Q, T))

    def d(P, Q):
        return np.atleast_1d(space.dist(P, Q))

    X, Y, Z = pts(), pts(), pts()

    with _Timer() as tm:
        m_id = -d(X, X)
        m_sym = -np.abs(d(X, Y) - d(Y, X))
        m_tri = d(X, Y) + d(Y, Z) - d(X, Z)
        m_pos = np.where(np.all(X == Y, axis=1), 1.0, d(X, Y))
        margins = np.minimum(np.minimum(m_id + tol * 0, m_sym), m_tri)
        margins = np.minimum(margins, np.where(m_pos > 0, np.inf, -1.0))
    rep.add(_record("metric_axioms", "distance is a metric (identity, symmetry, triangle)", margins, tol,
                    [X, Y, Z], ["x", "y", "z"], seconds=tm.seconds))

    with _Timer() as tm:
        l1, l2 = rng.random(n), rng.random(n)
        A = comb(X, Y, l1)
        B = comb(X, Y, l2)
        margins = -np.abs(d(A, B) - np.abs(l1 - l2) * d(X, Y))
    rep.add(_record("segment_parametrization", "points at fractions l1, l2 of [x, y] are |l1 - l2| rho(x, y) apart",
                    margins, tol, [X, Y, l1, l2], ["x", "y", "lambda1", "lambda2"], expect_fail=expect_fail,
                    seconds=tm.seconds))

    with _Timer() as tm:
        lam = rng.random(n)
        C = comb(X, Y, lam)
        margins = -np.abs(d(X, Y) - d(X, C) - d(C, Y))
    rep.add(_record("segment_additivity", "a point z of [x, y] splits rho(x, y) = rho(x, z) + rho(z, y)",
                    margins, tol, [X, Y, lam], ["x", "y", "lambda"], seconds=tm.seconds))

    with _Timer() as tm:
        t = rng.random(n)
        rev = d(comb(X, Y, t), comb(Y, X, 1.0 - t))
        a, b, u = rng.random(n), rng.random(n), rng.random(n)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        Z1, Z2 = comb(X, Y, lo), comb(X, Y, hi)
        sub = d(comb(Z1, Z2, u), comb(X, Y, lo + u * (hi - lo)))
        margins = -np.maximum(rev, sub)
    rep.add(_record("geodesic_coherence", "geodesics are reversible and restrict to sub-geodesics",
                    margins, tol, [X, Y, t, lo, hi, u], ["x", "y", "t", "a", "b", "u"], seconds=tm.seconds))

    with _Timer() as tm:
        t = rng.random(n)
        margins = t * d(Y, Z) - d(comb(X, Y, t), comb(X, Z, t))
    rep.add(_record("hyperbolicity", "rho((1-t)x+ty, (1-t)x+tz) <= t rho(y, z)", margins, tol,
                    [X, Y, Z, t], ["x", "y", "z", "t"], seconds=tm.seconds))

    with _Timer() as tm:
        t = rng.random(n)
        W = comb(Y, Z, t)
        margins = (1.0 - t) * d(Y, X) + t * d(Z, X) - d(W, X)
    rep.add(_record("ball_convexity", "rho((1-t)y+tz, x) <= (1-t) rho(y, x) + t rho(z, x)", margins, tol,
                    [X, Y, Z, t], ["x", "y", "z", "t"], seconds=tm.seconds))

    with _Timer() as tm:
        Cmax = np.maximum(np.maximum(d(X, Y), d(Y, Z)), d(Z, X))
        U = comb(X, Y, rng.random(n))
        V = comb(Y, Z, rng.random(n))
        margins = Cmax - d(U, V)
    rep.add(_record("triangle_bound", "u in [a, b], v in [b, c] are within the largest side of abc",
                    margins, tol, [X, Y, Z], ["a", "b", "c"], seconds=tm.seconds))

    with _Timer() as tm:
        dirs = space.random_directions(rng, n)
        a, b = 2 * radius * rng.random(n), 2 * radius * rng.random(n)
        Ra = np.atleast_2d(space.ray_point(X, dirs, a))
        Rb = np.atleast_2d(space.ray_point(X, dirs, b))
        margins = np.minimum(-np.abs(d(Ra, Rb) - np.abs(a - b)), -np.abs(d(X, Ra) - a))
    rep.add(_record("ray_isometry", "rays are isometric embeddings of [0, inf)", margins, tol,
                    [X, a, b], ["origin", "a", "b"], seconds=tm.seconds))

    with _Timer() as tm:
        zero = d(comb(X, Y, np.zeros(n)), X)
        one = d(comb(X, Y, np.ones(n)), Y)
        margins = -np.maximum(zero, one)
    rep.add(_record("endpoints", "combine(p, q, 0) = p and combine(p, q, 1) = q", margins, tol,
                    [X, Y], ["p", "q"], seconds=tm.seconds))
    return rep


def verify_retraction(space: Space, phi: RetractionParams | None = None, trials: int = 100000,
                      tol: float = GEOMETRY_TOL, seed: int = 0) -> VerificationReport:
    """Lipschitz bound, identity outside ``B(z0, r)`` and collapse of ``B(z0, delta)``."""
    if phi is None:
        z0 = space.to_point(np.atleast_2d(space.ray_point(space.as_array(space.base_point),
                                                          space.default_direction(), 2.0))[0])
        phi = RetractionParams(z0, 1.0, 2.0)
    rep = VerificationReport(f"retraction:{space.model_tag}", seed=seed, budgets={"trials": trials})
    rng = np.random.default_rng([seed, 200])
    Z = space.as_array(phi.z0)
    L = phi.lipschitz
    n = trials
    with _Timer() as tm:
        X = space.sample_ball(phi.z0, 1.5 * phi.r, rng, n)
        step = np.where(rng.random(n) < 0.5, phi.r * rng.random(n) ** 3, 2.0 * phi.r * rng.random(n))
        Y = np.atleast_2d(space.ray_point(X, space.random_directions(rng, n), step))
        PX = apply_retraction(space, phi, X)
        PY = apply_retraction(space, phi, Y)
        margins = L * np.atleast_1d(space.dist(X, Y)) - np.atleast_1d(space.dist(PX, PY))
    rep.add(_record("lipschitz", f"rho(Phi x, Phi y) <= r/(r-delta) rho(x, y) with r/(r-delta) = {L:.6g}",
                    margins, tol, [X, Y], ["x", "y"], seconds=tm.seconds))
    with _Timer() as tm:
        rX = np.atleast_1d(space.dist(Z, X))
        outside = rX >= phi.r
        inside = rX <= phi.delta
        m_out = np.where(outside, -np.atleast_1d(space.dist(PX, X)), 0.0)
        m_in = np.where(inside, -np.atleast_1d(space.dist(PX, Z)), 0.0)
        exact_out = bool(np.all(PX[outside] == X[outside]))
        exact_in = bool(np.all(PX[inside] == Z))
    r1 = _record("identity_outside", "Phi(x) = x when rho(x, z0) >= r", m_out, 0.0, [X], ["x"],
                 seconds=tm.seconds)
    r1.details = {"points": int(outside.sum()), "bitwise": exact_out}
    r1.passed = bool(r1.passed and exact_out and outside.sum() > 0)
    rep.add(r1)
    r2 = _record("constant_inside", "Phi(x) = z0 when rho(x, z0) <= delta", m_in, 0.0, [X], ["x"])
    r2.details = {"points": int(inside.sum()), "bitwise": exact_in}
    r2.passed = bool(r2.passed and exact_in and inside.sum() > 0)
    rep.add(r2)
    return rep


# ---------------------------------------------------------------------------
# moduli
# ---------------------------------------------------------------------------

def verify_modulus(omega: Modulus, trials: int = 10000, tol: float = 1e-12, seed: int = 0,
                   scale: float = 50.0, expect_fail: bool = False) -> VerificationReport:
    """``omega(0) = 0``, monotonicity, concavity, subadditivity and the scaling bound on samples."""
    rep = VerificationReport(f"modulus:{omega.variant}", seed=seed, budgets={"trials": trials})
    rng = np.random.default_rng([seed, 300])
    a = scale * rng.random(trials) ** 2
    b = scale * rng.random(trials) ** 2
    lam = 1.0 + 10.0 * rng.random(trials)
    w = lambda s: np.asarray(omega(s), dtype=float)  # noqa: E731
    rel = lambda v: tol * np.maximum(1.0, np.abs(v))  # noqa: E731

    z = float(omega(0.0))
    rep.add(CheckRecord("vanishes_at_zero", "omega(0) = 0", z == 0.0, 1, 0.0, -abs(z),
                        None if z == 0.0 else {"omega_0": z}))
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    rep.add(_record("nondecreasing", "omega(a) <= omega(b) for a <= b", w(hi) - w(lo) + rel(w(hi)) - tol,
                    tol, [lo, hi], ["a", "b"]))
    mid = w(0.5 * (a + b)) - 0.5 * (w(a) + w(b))
    rep.add(_record("concavity", "omega((a+b)/2) >= (omega(a) + omega(b))/2", mid + rel(w(a + b)), tol,
                    [a, b], ["a", "b"], expect_fail=expect_fail))
    sub = w(a) + w(b) - w(a + b)
    rep.add(_record("subadditivity", "omega(a+b) <= omega(a) + omega(b)", sub + rel(w(a + b)), tol,
                    [a, b], ["a", "b"], expect_fail=expect_fail))
    scl = lam * w(a) - w(lam * a)
    rep.add(_record("scaling_bound", "omega(lambda s) <= lambda omega(s) for lambda >= 1", scl + rel(w(lam * a)),
                    tol, [lam, a], ["lambda", "s"], expect_fail=expect_fail))
    if not omega.bounded:
        k = float(omega(1.0))
        lmb = 0.25
        M = find_M(omega, k, lmb)
        grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e3 * M, 2000)])
        margins = w(M + grid) - (k + (1.0 - lmb) * w(grid))
        rep.add(_record("find_M_inequality", "omega(M + s) >= k + (1 - lambda) omega(s) on a grid",
                        margins, 1e-9, [grid], ["s"], extra={"M": M, "k": k, "lambda": lmb}))
    return rep


# ---------------------------------------------------------------------------
# Step 1
# ---------------------------------------------------------------------------

def _scalar_check(check_id, claim, margin, tol=CONSTRUCTION_TOL, witness=None):
    passed = bool(margin >= -tol)
    return CheckRecord(check_id, claim, passed, 1, tol, float(margin), None if passed else (witness or {}))


def _dist_pts(space, a, b):
    return float(space.dist(space.as_array(a)[0], space.as_array(b)[0]))


def case_of_pair(rec: ConstructionRecord, rx: np.ndarray, ry: np.ndarray) -> np.ndarray:
    """Case number of the Step-1 argument for each pair, from the distances to ``z0``."""
    s = rec.scalars["s"]
    a = np.minimum(rx, ry)
    b = np.maximum(rx, ry)
    if rec.kind == "step1_unbounded":
        Ms = rec.scalars["M"] + s
        return np.select([a >= s, b < s, b <= Ms], [1, 3, 2], default=4)
    sp = rec.scalars["s_prime"]
    e1, e2, e3 = s + sp, s + 2 * sp, s + 3 * sp
    return np.select(
        [
            a > e2,
            (a > e1) & (b <= e2),
            (a > e1) & (b <= e3),
            a > e1,
            (a > s) & (b <= e1),
            (a > s) & (b <= e2),
            b > e2,
            b <= s,
            b <= e1,
        ],
        [1, 2, 3, 4, 5, 6, 7, 8, 9],
        default=10,
    )


def band_edges(rec: ConstructionRecord) -> list:
    s = rec.scalars["s"]
    R = rec.scalars["R"]
    if rec.kind == "step1_unbounded":
        return [0.0, s, rec.scalars["M"] + s, R, 2.0 * R]
    sp = rec.scalars["s_prime"]
    return [0.0, s, s + sp, s + 2 * sp, s + 3 * sp, R, 2.0 * R]


def _step1_scalars(rep, rec):
    sp_ = rec.space
    sc = rec.scalars
    om = rec.omega
    s, t, mu, eps, M, R, p = sc["s"], sc["t"], sc["mu"], sc["eps"], sc["M"], sc["R"], int(sc["p"])
    rep.add(_scalar_check("p_choice", "2^-p < eps/2 with p minimal", min(eps / 2 - 2.0 ** -p, 0.0)
                          if choose_p(eps) == p else -1.0, 0.0, {"p": p, "eps": eps}))
    z0x0 = _dist_pts(sp_, rec.points["z0"], rec.points["x0"])
    rep.add(_scalar_check("z0_far", "rho(z0, x0) > p + R", z0x0 - (p + R), 0.0,
                          {"rho_z0_x0": z0x0, "p_plus_R": p + R}))
    rep.add(_scalar_check("y0_at_s", "rho(y0, z0) = s",
                          -abs(_dist_pts(sp_, rec.points["y0"], rec.points["z0"]) - s), 1e-9))
    if rec.kind == "step1_unbounded":
        rep.add(_scalar_check("t_range", "0 < t < 1/2 and t <= mu/4", min(0.5 - t, mu / 4 - t, t), 0.0, {"t": t}))
        rep.add(_scalar_check("t_small", "omega(p) t < eps/2", eps / 2 - float(om(p)) * t, 0.0, {"t": t, "p": p}))
        rep.add(_scalar_check("M_choice", "omega(M) >= omega(s) / (t/2)",
                              float(om(M)) - float(om(s)) / (t / 2), 1e-9 * float(om(M))))
        rep.add(_scalar_check("R_formula", "R = (2 - t)(M + s) / t", -abs(R - (2 - t) * (M + s) / t), 1e-9 * R))
        rep.add(_scalar_check("R_identity", "(1 - t) R / (R - (M + s)) = 1 - t/2",
                              -abs((1 - t) * R / (R - (M + s)) - (1 - t / 2)), 1e-12))
        w0 = sp_.as_array(rec.points["w0"])[0]
        fz0 = evaluate(sp_, rec.f, rec.point("z0"))[0]
        fx0 = evaluate(sp_, rec.f, rec.point("x0"))[0]
        expect = np.atleast_2d(sp_.combine(fz0, fx0, t))[0]
        rep.add(_scalar_check("w0_formula", "w0 = (1-t) f(z0) + t f(x0)", -float(sp_.dist(w0, expect)), 1e-9))
        rep.add(_scalar_check("e0_distance", "rho(w0, e0) = omega(s)",
                              -abs(_dist_pts(sp_, rec.points["w0"], rec.points["e0"]) - float(om(s))), 1e-9))
        return
    Om, spr, guard = sc["Omega"], sc["s_prime"], sc["guard"]
    rep.add(_scalar_check("t_range", "0 < t <= min(mu/4, eps/(2 Omega))", min(mu / 4 - t, eps / (2 * Om) - t, t),
                          0.0, {"t": t}))
    rep.add(_scalar_check("s_prime_choice", "omega(s') >= (1 - t/2) Omega",
                          float(om(spr)) - (1 - guard * t) * Om, 1e-12))
    rep.add(_scalar_check("M_formula", "M = s + 3 s'", -abs(M - (s + 3 * spr)), 1e-12))
    rep.add(_scalar_check("R_choice", "R >= M / t and (1 - t) R / (R - M) <= 1",
                          min(R - M / t, 1 - (1 - t) * R / (R - M)), 1e-12))
    g1 = rec.maps["g1"]
    w0 = evaluate(sp_, g1, rec.point("z0"))[0]
    rep.add(_scalar_check("w0_formula", "w0 = g1(z0)", -float(sp_.dist(w0, rec.point("w0")[0])), 1e-9))
    w1 = evaluate(sp_, g1, rec.point("w1_preimage"))[0]
    rep.add(_scalar_check("w1_in_image", "w1 = g1(x) for the recorded x", -float(sp_.dist(w1, rec.point("w1")[0])),
                          1e-9))
    gap = _dist_pts(sp_, rec.points["w1"], rec.points["e0"])
    rep.add(_scalar_check("w1_far", "rho(w1, e0) > (1 - 2t) Omega", gap - (1 - 2 * t) * Om, 0.0,
                          {"rho_w1_e0": gap}))
    w2 = np.atleast_2d(sp_.combine(rec.point("w1"), rec.point("e0"), float(om(s)) / Om))[0]
    rep.add(_scalar_check("w2_formula", "w2 = (1 - omega(s)/Omega) w1 + (omega(s)/Omega) e0",
                          -float(sp_.dist(w2, rec.point("w2")[0])), 1e-9))
    w0w1 = _dist_pts(sp_, rec.points["w0"], rec.points["w1"])
    rep.add(_scalar_check("w0_w1_close", "rho(w0, w1) <= (1 - t) Omega", (1 - t) * Om - w0w1, 1e-9,
                          {"rho_w0_w1": w0w1}))


def _phi_check(rep, rec, budget, seed):
    """Independent estimate of ``phi(e0)`` from a fresh sample of the image of ``g1``."""
    sp_ = rec.space
    sc = rec.scalars
    t, Om = sc["t"], sc["Omega"]
    target = (1 - t) * Om
    tolerance = t * Om / 4
    rng = chunk_rng(seed, 0, stream=20)
    reach = 2.0 * (sc["p"] + sc["R"] + 1.0)
    levels = max(1, int(math.ceil(math.log2(reach))) + 1)
    per = max(1, budget // (2 * levels))
    pre = np.vstack([sample_points(sp_, rng, per, c, float(2.0 ** k))
                     for c in (rec.points["x0"], rec.points["z0"]) for k in range(levels)])
    img = evaluate(sp_, rec.maps["g1"], pre)
    phi_e0 = float(np.max(np.atleast_1d(sp_.dist(rec.point("e0")[0], img))))
    upper = None
    ball = None
    from .funcspace import image_ball

    ball = image_ball(sp_, rec.maps["g1"])
    if ball is not None:
        upper = float(sp_.dist(rec.point("e0")[0], ball[0])) + ball[1]
    margin = tolerance - abs(phi_e0 - target)
    rec_ = _scalar_check("phi_e0", "phi(e0) within t Omega / 4 of (1 - t) Omega", margin, 0.0,
                         {"phi_e0": phi_e0, "target": target})
    rec_.trials = int(pre.shape[0])
    rec_.details = {"phi_e0_sampled": phi_e0, "target": target, "tolerance": tolerance,
                    "phi_e0_upper": upper}
    if upper is not None and upper > target + tolerance:
        rec_.details["upper_exceeds_band"] = True
    rep.add(rec_)


def verify_step1(rec: ConstructionRecord, pairs: int = 100000, budget: int = 20000, tol: float = CONSTRUCTION_TOL,
                 N: int = 30, mesh: float = 1e-3, seed: int = 0, expect_fail: bool = False,
                 h_override=None) -> VerificationReport:
    """Replay every claim about a Step-1 record.

    ``pairs`` stratified pairs are spread evenly over all ordered pairs of
    distance bands around ``z0``, so each case of the argument receives
    samples; per-case worst margins are reported.
    """
    sp_ = rec.space
    om = rec.omega
    sc = rec.scalars
    s, t, mu, eps = sc["s"], sc["t"], sc["mu"], sc["eps"]
    h = rec.h if h_override is None else h_override
    rep = VerificationReport(f"step1:{rec.kind}:{sp_.model_tag}", seed=seed,
                             budgets={"pairs": pairs, "budget": budget, "N": N, "mesh": mesh})
    with _Timer() as tm:
        _step1_scalars(rep, rec)
    rep.checks[-1].seconds = tm.seconds
    if rec.kind == "step1_bounded":
        with _Timer() as tm:
            _phi_check(rep, rec, budget, seed)
        rep.checks[-1].seconds = tm.seconds

    centers = [rec.points["x0"], rec.points["z0"]]
    edges = band_edges(rec)
    # contraction of the auxiliary maps
    with _Timer() as tm:
        if rec.kind == "step1_unbounded":
            res = check_in_C_omega(sp_, rec.g, om, budget, seed, tol, centers=centers, radius=edges[-2],
                                   factor=1 - t / 2)
            claim = "rho(g x, g y) <= (1 - t/2) omega(rho(x, y))"
            cid = "g_contraction"
        else:
            res = check_in_C_omega(sp_, rec.maps["g1"], om, budget, seed, tol, centers=centers,
                                   radius=edges[-2], factor=1 - t)
            claim = "rho(g1 x, g1 y) <= (1 - t) omega(rho(x, y))"
            cid = "g1_contraction"
    rep.add(CheckRecord(cid, claim, res.passed, res.pairs, tol, res.worst_margin, res.witness, seconds=tm.seconds))
    if rec.kind == "step1_bounded":
        with _Timer() as tm:
            res = check_in_C_omega(sp_, rec.g, om, budget, seed + 1, tol, centers=centers, radius=edges[-2])
        rep.add(CheckRecord("g2_in_C_omega", "rho(g2 x, g2 y) <= omega(rho(x, y))", res.passed, res.pairs, tol,
                            res.worst_margin, res.witness, seconds=tm.seconds))

    # membership of h, case by case
    with _Timer() as tm:
        n_bands = len(edges) - 1
        per = max(3, int(math.ceil(pairs / (n_bands * n_bands))))
        X, Y, _, _ = stratified_pairs(sp_, rec.points["z0"], edges, per, chunk_rng(seed, 0, stream=21))
        Z = rec.point("z0")
        rx = np.atleast_1d(sp_.dist(Z, X))
        ry = np.atleast_1d(sp_.dist(Z, Y))
        cases = case_of_pair(rec, rx, ry)
        margins = pair_margins(sp_, h, om, X, Y)
        res = check_in_C_omega(sp_, h, om, budget, seed + 2, tol, centers=centers + [rec.points["y0"]],
                               radius=edges[-2], pairs=(X, Y))
    n_cases = 4 if rec.kind == "step1_unbounded" else 10
    per_case = {}
    for c in range(1, n_cases + 1):
        sel = cases == c
        per_case[f"case_{c}"] = {"pairs": int(sel.sum()),
                                 "worst_margin": float(margins[sel].min()) if np.any(sel) else None}
    covered = all(v["pairs"] > 0 for v in per_case.values())
    worst = min(float(margins.min()), res.worst_margin)
    passed = bool(worst >= -tol and covered)
    witness = None
    if not passed:
        if margins.min() <= res.worst_margin:
            i = int(np.argmin(margins))
            witness = {"x": X[i].tolist(), "y": Y[i].tolist(), "case": int(cases[i]),
                       "rho_xy": float(sp_.dist(X[i], Y[i])), "margin": float(margins[i])}
        else:
            witness = res.witness
        if not covered:
            witness = dict(witness or {}, uncovered=[k for k, v in per_case.items() if v["pairs"] == 0])
    rep.add(CheckRecord("h_in_C_omega", f"h satisfies omega across all {n_cases} cases", passed,
                        int(X.shape[0]) + res.pairs, tol, worst, witness, expect_fail,
                        details={"cases": per_case, "random_search_margin": res.worst_margin},
                        seconds=tm.seconds))

    with _Timer() as tm:
        enc = metric_d(sp_, rec.f, h, rec.points["x0"], N, mesh, om)
    rep.add(CheckRecord("proximity", "d(f, h) < eps (upper end of the enclosure)", enc.hi < eps, 1, 0.0,
                        eps - enc.hi, None if enc.hi < eps else {"lo": enc.lo, "hi": enc.hi, "eps": eps},
                        details={"lo": enc.lo, "hi": enc.hi}, seconds=tm.seconds))

    hy = evaluate(sp_, h, rec.point("y0"))[0]
    hz = evaluate(sp_, h, rec.point("z0"))[0]
    sep = float(sp_.dist(hy, hz))
    need = (1 - mu / 2) * float(om(s))
    rep.add(_scalar_check("separation", "rho(h y0, h z0) >= (1 - mu/2) omega(s)", sep - need, 1e-9,
                          {"rho_hy0_hz0": sep, "required": need}))
    if rec.kind == "step1_unbounded":
        exact = {"h_z0": (hz, rec.point("e0")[0]), "h_y0": (hy, rec.point("w0")[0])}
    else:
        exact = {"h_z0": (hz, rec.point("w2")[0]), "h_y0": (hy, rec.point("w1")[0])}
        rng = chunk_rng(seed, 0, stream=22)
        sp = sc["s_prime"]
        r = s + sp * (0.01 + 0.99 * rng.random(256))
        P = np.atleast_2d(sp_.ray_point(np.repeat(rec.point("z0"), 256, axis=0), sp_.random_directions(rng, 256), r))
        HP = evaluate(sp_, h, P)
        rep.add(_scalar_check("band_iii_value", "h = w1 on s < rho(x, z0) <= s + s'",
                              -float(np.max(np.atleast_1d(sp_.dist(HP, rec.point("w1"))))), 0.0))
    for k, (a, b) in exact.items():
        rep.add(_scalar_check(f"{k}_value", f"{k.replace('_', '(')}) takes its designed value",
                              -float(sp_.dist(a, b)), 1e-9))
    return rep


# ---------------------------------------------------------------------------
# Step 2
# ---------------------------------------------------------------------------

def neighbor_scale(rec: ConstructionRecord, m, h=None, N: int = 64) -> float:
    """``K`` with ``d(h, (1-u) h + u m) <= u K`` for any ``m`` in ``C_omega``.

    On ``B(x0, n)`` both maps move at most ``omega(n)`` away from their
    values at ``x0``; for ``n > N`` concavity gives ``omega(n) <= n omega(1)``.
    """
    sp_ = rec.space
    om = rec.omega
    h = rec.h if h is None else h
    X0 = rec.point("x0")
    rho0 = float(sp_.dist(evaluate(sp_, h, X0)[0], evaluate(sp_, m, X0)[0]))
    n = np.arange(1, N + 1, dtype=float)
    head = float(np.sum(2.0 ** -n * (rho0 + 2.0 * np.asarray(om(n)))))
    tail = 2.0 ** -N * (rho0 + 2.0 * float(om(1.0)) * (N + 2))
    return head + tail


def random_companion(space: Space, h, rng, x0, spread: float = 8.0):
    """A map in ``C_omega`` whenever ``h`` is: a constant or a blend of ``h`` with a constant."""
    c = space.to_point(sample_points(space, rng, 1, x0, spread)[0])
    kind = int(rng.integers(0, 3))
    v = float(rng.random())
    if kind == 0:
        return Constant(c)
    if kind == 1:
        return blend(h, Constant(c), v)
    return blend(Constant(c), h, v)


def verify_step2(rec: ConstructionRecord, n_neighbors: int = 50, budget: int = 2048, seed: int = 0,
                 eta_scale: float = 1.0, tol: float = CONSTRUCTION_TOL) -> VerificationReport:
    """Neighbours ``h'`` of ``h`` with certified ``d(h, h') < eta`` keep ``omega_h'(s) > (1 - mu) omega(s)``.

    ``eta_scale`` inflates ``eta`` (a negative control when above 1).  The
    three-term triangle chain of the argument is replayed deterministically.
    """
    sp_ = rec.space
    om = rec.omega
    sc = rec.scalars
    s, mu = sc["s"], sc["mu"]
    ws = float(om(s))
    rep = VerificationReport(f"step2:{rec.kind}:{sp_.model_tag}", seed=seed,
                             budgets={"n_neighbors": n_neighbors, "budget": budget, "eta_scale": eta_scale})
    q = step2_q(sp_, rec.points["x0"], rec.points["y0"], rec.points["z0"])
    eta0 = step2_eta(ws, mu, q)
    rep.add(_scalar_check("eta_formula", "q and eta = 2^-q min(1, omega(s) mu / 4) match the record",
                          -max(abs(q - sc["q"]), abs(eta0 - sc["eta"]) / eta0), 0.0,
                          {"q": q, "eta": eta0, "recorded_q": sc["q"], "recorded_eta": sc["eta"]}))
    eta = eta0 * eta_scale
    h = rec.h
    Y0, Z0 = rec.point("y0"), rec.point("z0")
    hy, hz = evaluate(sp_, h, Y0)[0], evaluate(sp_, h, Z0)[0]
    sep = float(sp_.dist(hy, hz))
    # the chain: each point moves by less than 2^q eta (when that is <= 1)
    move = math.ldexp(eta, q)
    chain = sep - 2.0 * min(move, math.inf) - (1 - mu) * ws
    chain_ok = move <= 1.0 and chain >= -tol
    rep.add(CheckRecord("triangle_chain", "rho(h y0, h z0) - 2 * 2^q eta > (1 - mu) omega(s)", chain_ok, 1, tol,
                        chain, None if chain_ok else {"separation": sep, "displacement_bound": move,
                                                      "eta": eta, "q": q, "required": (1 - mu) * ws},
                        expect_fail=eta_scale > 1.0))

    rng = chunk_rng(seed, 0, stream=30)
    worst_mod = math.inf
    worst_move = math.inf
    witness = None
    move_witness = None
    with _Timer() as tm:
        for i in range(n_neighbors):
            if i == 0:
                m, u = h, 0.0
            else:
                m = random_companion(sp_, h, rng, rec.points["x0"])
                K = neighbor_scale(rec, m)
                frac = 1.0 - 1e-9 if i == n_neighbors - 1 else float(rng.random())
                u = min(1.0, frac * eta / K) if K > 0 else 1.0
            hp = blend(h, m, u)
            hpy, hpz = evaluate(sp_, hp, Y0)[0], evaluate(sp_, hp, Z0)[0]
            mv = ws * mu / 4 - max(float(sp_.dist(hpy, hy)), float(sp_.dist(hpz, hz)))
            if mv < worst_move:
                worst_move, move_witness = mv, {"neighbor": i, "u": u}
            lb = mod_lower_witness(sp_, hp, s, budget, seed + i, centers=[rec.points["z0"]], radius=2 * s,
                                   seed_pairs=[(rec.points["y0"], rec.points["z0"])])
            margin = lb.value - (1 - mu) * ws
            if margin < worst_mod:
                worst_mod = margin
                witness = {"neighbor": i, "u": u, "mod_lower": lb.value, "required": (1 - mu) * ws,
                           "x": None if lb.x is None else lb.x.tolist(),
                           "y": None if lb.y is None else lb.y.tolist()}
    ok_move = worst_move > 0
    rep.add(CheckRecord("neighbor_displacement", "rho(h' y0, h y0), rho(h' z0, h z0) < omega(s) mu / 4", ok_move,
                        n_neighbors, 0.0, worst_move, None if ok_move else move_witness))
    ok = worst_mod > 0
    rep.add(CheckRecord("neighbor_modulus", "mod_lower(h', s) > (1 - mu) omega(s) for every neighbour", ok,
                        n_neighbors, 0.0, worst_mod, None if ok else witness, seconds=tm.seconds))
    return rep


# ---------------------------------------------------------------------------
# porosity
# ---------------------------------------------------------------------------

def verify_porosity(rec: ConstructionRecord, n_samples: int = 50, pairs: int = 10000, seed: int = 0,
                    alpha_scale: float = 1.0, tol: float = CONSTRUCTION_TOL,
                    s_grid=(0.25, 0.5, 1.0, 2.0, 4.0)) -> VerificationReport:
    """Maps ``h'`` in ``B(g, alpha eps)`` stay within ``eps`` of ``f`` and satisfy the Rakotch bound beyond ``s``."""
    sp_ = rec.space
    om = rec.omega
    sc = rec.scalars
    s, eps, gamma, alpha, Om = sc["s"], sc["eps"], sc["gamma"], sc["alpha"] * alpha_scale, sc["Omega"]
    ws = float(om(s))
    factor = sc["rakotch"]
    rep = VerificationReport(f"porosity:{sp_.model_tag}", seed=seed,
                             budgets={"n_samples": n_samples, "pairs": pairs, "alpha_scale": alpha_scale})
    Om_bound = image_diameter_bound(sp_, rec.f, om)
    rep.add(_scalar_check("Omega_bound", "recorded Omega bounds the sampled diameter of f(X)",
                          Om - rec.diagnostics.get("Omega_sampled", 0.0), 1e-9,
                          {"Omega": Om, "sampled": rec.diagnostics.get("Omega_sampled")}))
    if Om > 0:
        rep.add(_scalar_check("parameters", "eps <= 2 Omega, gamma = eps/(2 Omega), alpha = min(1/2, omega(s)/(8 Omega))",
                              -max(abs(gamma - eps / (2 * Om)), abs(sc["alpha"] - min(0.5, ws / (8 * Om))),
                                   max(0.0, eps - 2 * Om)), 1e-12))
        chain = gamma * ws / 2 - 2 * alpha * eps
        chain_claim = "2 alpha eps <= gamma omega(s) / 2"
    else:
        rep.add(_scalar_check("parameters", "f constant: eps <= omega(s)/4, alpha = 1",
                              -max(abs(sc["alpha"] - 1.0), max(0.0, eps - ws / 4)), 1e-12, {"Omega_bound": Om_bound}))
        chain = ws / 2 - 2 * alpha * eps
        chain_claim = "2 alpha eps <= omega(s) / 2"
    rep.add(CheckRecord("rakotch_chain", chain_claim, chain >= -tol, 1, tol, chain,
                        None if chain >= -tol else {"alpha": alpha, "eps": eps, "gamma": gamma, "omega_s": ws},
                        expect_fail=alpha_scale > 1.0))
    dfg = displacement_bound(sp_, rec.f, rec.g, om)
    rep.add(_scalar_check("center_close", "d_inf(f, g) <= eps / 2", eps / 2 - (math.inf if dfg is None else dfg),
                          1e-12, {"bound": dfg}))

    rng = chunk_rng(seed, 0, stream=40)
    worst_dinf, worst_rak = math.inf, math.inf
    wit_dinf = wit_rak = None
    with _Timer() as tm:
        for i in range(n_samples):
            if i == 0:
                hp, u = rec.g, 0.0
            else:
                m = random_companion(sp_, rec.g, rng, rec.points["x0"], spread=2.0)
                D = displacement_bound(sp_, rec.g, m, om)
                frac = 1.0 - 1e-9 if i == n_samples - 1 else float(rng.random())
                u = min(1.0, frac * alpha * eps / D) if D and D > 0 else 1.0
                hp = blend(rec.g, m, u)
            enc = metric_dinf(sp_, rec.f, hp, 256, 0.05, om, rng_seed=seed + i)
            if eps - enc.hi < worst_dinf:
                worst_dinf, wit_dinf = eps - enc.hi, {"neighbor": i, "u": u, "lo": enc.lo, "hi": enc.hi}
            res = check_in_C_omega(sp_, hp, om, pairs, seed + i, tol, radius=8.0, max_dist=16.0,
                                   factor=factor, min_dist=s, refine=(i % 10 == 0))
            if res.worst_margin < worst_rak:
                worst_rak, wit_rak = res.worst_margin, dict(res.witness or {}, neighbor=i, u=u)
    ok = worst_dinf > 0
    rep.add(CheckRecord("ball_inside_f_ball", "d_inf(f, h') < eps for sampled h' in B(g, alpha eps)", ok, n_samples,
                        0.0, worst_dinf, None if ok else wit_dinf, seconds=tm.seconds))
    ok = worst_rak >= -tol
    rep.add(CheckRecord("rakotch_bound", f"rho(h' x, h' y) <= {factor:.6g} omega(rho(x, y)) when rho(x, y) >= s",
                        ok, n_samples * pairs, tol, worst_rak, None if ok else wit_rak))
    prof = phi_f_profile(sp_, om, rec.g, list(s_grid), budget=pairs, rng_seed=seed)
    mono = float(np.min(prof[:-1] - prof[1:])) if len(prof) > 1 else 0.0
    cap = factor - float(np.max(prof))
    rep.add(CheckRecord("phi_profile", "phi_g is nonincreasing in s and below the Rakotch factor",
                        mono >= 0 and cap >= -tol, len(prof), tol, min(mono, cap),
                        None if (mono >= 0 and cap >= -tol) else {"s_grid": list(s_grid), "phi": prof.tolist()},
                        details={"s_grid": list(s_grid), "phi": prof.tolist()}))
    return rep


# ---------------------------------------------------------------------------
# pointwise metric
# ---------------------------------------------------------------------------

def _random_map(space, rng, x0):
    c = space.to_point(sample_points(space, rng, 1, x0, 4.0)[0])
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return Constant(c)
    if kind == 1:
        return blend(Identity(), Constant(c), float(rng.random()))
    from .funcspace import BallClamp

    return BallClamp(c, float(0.5 + 2 * rng.random()))


def verify_dTheta(space: Space, theta: DenseSequence | None = None, trials: int = 1000, N: int = 40,
                  seed: int = 0, K: int = 64, tol: float = 1e-12) -> VerificationReport:
    """Metric axioms for ``d_Theta`` on random map triples and convergence along ``f_k = (1 - 1/k) f + (1/k) c``."""
    theta = DenseSequence.rational(space) if theta is None else theta
    rep = VerificationReport(f"dtheta:{space.model_tag}", seed=seed, budgets={"trials": trials, "N": N, "K": K})
    rng = chunk_rng(seed, 0, stream=50)
    x0 = space.base_point
    worst_id = worst_sym = worst_tri = math.inf
    wid = wsym = wtri = None
    with _Timer() as tm:
        for i in range(trials):
            f, g, h = (_random_map(space, rng, x0) for _ in range(3))
            ff = metric_dTheta(space, theta, f, f, N)
            fg = metric_dTheta(space, theta, f, g, N)
            gf = metric_dTheta(space, theta, g, f, N)
            gh = metric_dTheta(space, theta, g, h, N)
            fh = metric_dTheta(space, theta, f, h, N)
            m = -ff.lo
            if m < worst_id:
                worst_id, wid = m, {"trial": i}
            m = -abs(fg.lo - gf.lo)
            if m < worst_sym:
                worst_sym, wsym = m, {"trial": i, "d_fg": fg.lo, "d_gf": gf.lo}
            m = fg.hi + gh.hi - fh.lo
            if m < worst_tri:
                worst_tri, wtri = m, {"trial": i, "d_fg": fg.hi, "d_gh": gh.hi, "d_fh": fh.lo}
    rep.add(CheckRecord("identity", "d_Theta(f, f) lies in [0, 2^-N]", worst_id >= 0, trials, 0.0, worst_id,
                        None if worst_id >= 0 else wid, seconds=tm.seconds))
    rep.add(CheckRecord("symmetry", "d_Theta(f, g) = d_Theta(g, f) exactly", worst_sym >= 0, trials, 0.0, worst_sym,
                        None if worst_sym >= 0 else wsym))
    rep.add(CheckRecord("triangle", "d_Theta(f, h) <= d_Theta(f, g) + d_Theta(g, h)", worst_tri >= -tol, trials, tol,
                        worst_tri, None if worst_tri >= -tol else wtri))

    with _Timer() as tm:
        f = _random_map(space, rng, x0)
        while isinstance(f, Constant):
            f = _random_map(space, rng, x0)
        c = space.to_point(sample_points(space, rng, 1, x0, 4.0)[0])
        encs = [metric_dTheta(space, theta, blend(f, Constant(c), 1.0 / k), f, N) for k in range(1, K + 1)]
        lo = np.array([e.lo for e in encs])
        width = max(e.width for e in encs)
        dec = float(np.min(lo[:-1] - lo[1:]))
        P = sample_points(space, rng, 256, x0, 8.0)
        FP = evaluate(space, f, P)
        pw = np.array([float(np.max(np.atleast_1d(space.dist(evaluate(space, blend(f, Constant(c), 1.0 / k), P), FP))))
                       for k in range(1, K + 1)])
        pw_dec = float(np.min(pw[:-1] - pw[1:]))
        # rho(f_k x, f x) = rho(f x, c) / k, so the unclipped series bounds d_Theta(f_k, f) by B / k
        T = theta.points(N)
        B = float(np.sum(2.0 ** -np.arange(1, N + 1) * np.atleast_1d(space.dist(evaluate(space, f, T),
                                                                              space.as_array(c)))))
        rate = float(np.min(B / np.arange(1, K + 1) + 1e-12 - lo))
    ok = dec > 0 and width <= 2.0 ** -N and rate >= 0
    rep.add(CheckRecord("blend_convergence", "d_Theta(f_k, f) decreases to 0 at rate 1/k", ok, K, 0.0,
                        min(dec, 2.0 ** -N - width, rate), None if ok else {"d": lo.tolist(), "width": width, "B": B},
                        details={"first": float(lo[0]), "last": float(lo[-1]), "width": width, "B": B},
                        seconds=tm.seconds))
    ok = pw_dec >= -1e-12 and pw[-1] <= pw[0] / K + 1e-9
    rep.add(CheckRecord("pointwise_convergence", "f_k(x) -> f(x) at sampled points, monotonically", ok, K * 256, 1e-12,
                        pw_dec, None if ok else {"sup_gap": pw.tolist()}))
    return rep


# ---------------------------------------------------------------------------
# negative controls
# ---------------------------------------------------------------------------

def halved_slide(h: RegionPiecewise) -> RegionPiecewise:
    """Copy of ``h`` whose slide pieces use half the denominator."""
    bands = []
    for b in h.bands:
        p = b.piece
        if isinstance(p, Slide):
            p = Slide(p.a, p.b, p.offset, p.denom / 2.0, p.omega)
        bands.append(Band(b.lo, b.hi, p))
    return RegionPiecewise(h.z0, tuple(bands), h.right_closed)


def run_negative_controls(seed: int = 0, trials: int = 20000) -> VerificationReport:
    """Five deliberately broken inputs; each must produce a failing check with a witness."""
    from .constructions import porosity_center, step1_unbounded
    from .funcspace import BallClamp
    from .geometry import Euclidean

    rep = VerificationReport("negative_controls", seed=seed, budgets={"trials": trials})
    line = Euclidean(1)

    with _Timer() as tm:
        sub = verify_space(ReparametrizedSpace(line), trials=trials, seed=seed, expect_fail=True)
    c = sub.get("segment_parametrization")
    c.check_id, c.seconds = "bad_geodesic_parametrization", tm.seconds
    rep.add(c)

    rec = step1_unbounded(line, Modulus.linear(1.0), Identity(), 1.0, 0.5, 0.5)
    with _Timer() as tm:
        sub = verify_step1(rec, pairs=trials, budget=2048, seed=seed, expect_fail=True, N=8, mesh=0.01,
                           h_override=halved_slide(rec.h))
    c = sub.get("h_in_C_omega")
    c.check_id, c.seconds = "halved_slide_denominator", tm.seconds
    rep.add(c)

    with _Timer() as tm:
        sub = verify_step2(rec, n_neighbors=3, budget=256, seed=seed, eta_scale=10.0)
    c = sub.get("triangle_chain")
    c.check_id, c.seconds = "eta_inflated", tm.seconds
    rep.add(c)

    prec = porosity_center(line, Modulus.linear(1.0), BallClamp(line.base_point, 1.0), 1.0, 1.0)
    with _Timer() as tm:
        sub = verify_porosity(prec, n_samples=3, pairs=512, seed=seed, alpha_scale=10.0)
    c = sub.get("rakotch_chain")
    c.check_id, c.seconds = "alpha_inflated", tm.seconds
    rep.add(c)

    bad = Modulus.piecewise([(1.0, 0.5), (2.0, 2.0)], validate=False)
    with _Timer() as tm:
        sub = verify_modulus(bad, trials=trials, seed=seed, scale=4.0, expect_fail=True)
    c = sub.get("concavity")
    c.check_id, c.seconds = "non_concave_modulus", tm.seconds
    rep.add(c)
    return rep
