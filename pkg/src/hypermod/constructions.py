"""Explicit perturbations: the retraction, the Step-1 maps, the Step-2 radius, porosity centres."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError, InfeasibleError, MisuseError
from .funcspace import (
    Band,
    Constant,
    DenseSequence,
    ExprPiece,
    MapExpr,
    RegionPiecewise,
    RetractionParams,
    RetractPrecompose,
    Slide,
    apply_retraction,
    blend,
    canonical_json,
    chunk_rng,
    content_hash,
    evaluate,
    image_ball,
    map_from_json,
    map_to_json,
    sample_points,
)
from .geometry import Point, Space, make_space
from .moduli import Modulus, find_M, find_sprime, modulus_from_config

__all__ = [
    "RetractionParams",
    "ConstructionRecord",
    "retraction_eval",
    "choose_p",
    "step1_unbounded",
    "step1_bounded",
    "step1",
    "step2_q",
    "step2_eta",
    "image_diameter_bound",
    "porosity_center",
    "phi_f_profile",
    "phi_f_estimate",
    "choose_p_pointwise",
]


def retraction_eval(space: Space, phi: RetractionParams, x: Point) -> Point:
    return space.to_point(apply_retraction(space, phi, space.as_array(x))[0])


@dataclass
class ConstructionRecord:
    """Every scalar, point and map chosen by a construction, enough to replay it."""

    kind: str
    space: Space
    omega: Modulus
    f: MapExpr
    scalars: dict
    points: dict
    h: MapExpr | None = None
    g: MapExpr | None = None
    maps: dict = field(default_factory=dict)
    seed: int = 0
    budgets: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def point(self, name: str) -> np.ndarray:
        return self.space.as_array(self.points[name])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "space": self.space.describe(),
            "modulus": self.omega.to_json(),
            "f": map_to_json(self.f),
            "scalars": {k: _num(v) for k, v in sorted(self.scalars.items())},
            "points": {k: v.to_json() for k, v in sorted(self.points.items())},
            "h": None if self.h is None else map_to_json(self.h),
            "g": None if self.g is None else map_to_json(self.g),
            "maps": {k: map_to_json(v) for k, v in sorted(self.maps.items())},
            "hashes": {
                k: content_hash(v)
                for k, v in sorted({"f": self.f, "h": self.h, "g": self.g, **self.maps}.items())
                if v is not None
            },
            "seed": self.seed,
            "budgets": dict(sorted(self.budgets.items())),
            "diagnostics": {k: _num(v) for k, v in sorted(self.diagnostics.items())},
        }

    def dumps(self) -> str:
        return canonical_json(self.to_json())

    @classmethod
    def from_json(cls, data: dict) -> "ConstructionRecord":
        space = make_space(data["space"])
        return cls(
            kind=data["kind"],
            space=space,
            omega=modulus_from_config(data["modulus"]),
            f=map_from_json(data["f"]),
            scalars={k: float(v) for k, v in data["scalars"].items()},
            points={k: Point.from_json(v) for k, v in data["points"].items()},
            h=None if data["h"] is None else map_from_json(data["h"]),
            g=None if data["g"] is None else map_from_json(data["g"]),
            maps={k: map_from_json(v) for k, v in data.get("maps", {}).items()},
            seed=int(data.get("seed", 0)),
            budgets=dict(data.get("budgets", {})),
            diagnostics=dict(data.get("diagnostics", {})),
        )


def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# shared scalar choices
# ---------------------------------------------------------------------------

def choose_p(eps: float) -> int:
    """Smallest positive integer ``p`` with ``sum_{n > p} 2^-n = 2^-p < eps / 2``."""
    if not eps > 0:
        raise DomainError("epsilon must be positive")
    p = 1
    while 2.0 ** -p >= eps / 2.0:
        p += 1
    return p


def _check_common(s, mu, eps):
    s, mu, eps = float(s), float(mu), float(eps)
    if not s > 0:
        raise DomainError("s must be positive")
    if not 0 < mu < 1:
        raise DomainError("mu must lie in (0, 1)")
    if not eps > 0:
        raise DomainError("epsilon must be positive")
    return s, mu, eps


def _far_point(space, x0, d):
    return space.to_point(np.atleast_2d(space.ray_point(space.as_array(x0), space.default_direction(), d))[0])


def _toward(space, z0, x0, s):
    d = float(space.dist(space.as_array(z0)[0], space.as_array(x0)[0]))
    if d <= s:
        raise ConstructionError("z0 is too close to x0 to place y0", {"rho_z0_x0": d, "s": s})
    return space.to_point(np.atleast_2d(space.combine(space.as_array(z0), space.as_array(x0), s / d))[0])


def step2_q(space: Space, x0: Point, *pts: Point) -> int:
    """Smallest integer ``q`` with every given point in the open ball ``B(x0, q)``."""
    X0 = space.as_array(x0)[0]
    far = max(float(space.dist(X0, space.as_array(p)[0])) for p in pts)
    return int(math.floor(far)) + 1


def step2_eta(omega_s: float, mu: float, q: int) -> float:
    """``eta = 2^-q min(1, omega(s) mu / 4)``; takes the value ``omega(s)`` directly."""
    if q < 1:
        raise DomainError("q must be a positive integer")
    return math.ldexp(min(1.0, omega_s * mu / 4.0), -int(q))


def _record_step2(space, rec, omega_s, mu):
    q = step2_q(space, rec.points["x0"], rec.points["y0"], rec.points["z0"])
    rec.scalars["q"] = float(q)
    rec.scalars["eta"] = step2_eta(omega_s, mu, q)
    rec.scalars["eta_log2"] = -q + math.log2(min(1.0, omega_s * mu / 4.0))


# ---------------------------------------------------------------------------
# Step 1
# ---------------------------------------------------------------------------

def step1_unbounded(space: Space, omega: Modulus, f: MapExpr, s: float, mu: float, eps: float,
                    x0: Point | None = None, t_safety: float = 0.99) -> ConstructionRecord:
    """Perturbation ``h`` of ``f`` with ``d(f, h) < eps`` and ``rho(h y0, h z0) = omega(s)``, for unbounded ``omega``.

    ``t`` is the largest value allowed by ``t <= mu / 4`` and
    ``omega(p) t < eps / 2`` (the latter with a ``t_safety`` factor).  A large
    ``t`` keeps ``M`` and ``R``, hence ``rho(z0, x0)``, small.
    """
    s, mu, eps = _check_common(s, mu, eps)
    if omega.bounded:
        raise MisuseError("step1_unbounded needs an unbounded modulus")
    x0 = space.base_point if x0 is None else x0
    p = choose_p(eps)
    t = min(mu / 4.0, t_safety * eps / (2.0 * float(omega(p))), 0.49)
    ws = float(omega(s))
    try:
        M = find_M(omega, ws, t / 2.0)
    except InfeasibleError as exc:
        raise MisuseError(f"modulus behaves as bounded: {exc}") from None
    R = (2.0 - t) * (M + s) / t
    z0 = _far_point(space, x0, p + R + 1.0)
    fx0 = space.to_point(evaluate(space, f, space.as_array(x0))[0])
    fz0 = evaluate(space, f, space.as_array(z0))[0]
    w0 = space.to_point(np.atleast_2d(space.combine(fz0, space.as_array(fx0)[0], t))[0])
    e0 = space.to_point(np.atleast_2d(space.ray_point(space.as_array(w0), space.default_direction(), ws))[0])
    phi = RetractionParams(z0, M + s, R)
    g = blend(RetractPrecompose(f, phi), Constant(fx0), t)
    h = RegionPiecewise(
        z0,
        (
            Band(0.0, s, Slide(w0, e0, s, ws, omega)),
            Band(s, math.inf, ExprPiece(g)),
        ),
        right_closed=False,
    )
    y0 = _toward(space, z0, x0, s)
    rec = ConstructionRecord(
        kind="step1_unbounded",
        space=space,
        omega=omega,
        f=f,
        scalars={"p": float(p), "t": t, "mu": mu, "s": s, "eps": eps, "M": M, "R": R,
                 "delta": M + s, "omega_s": ws},
        points={"x0": x0, "z0": z0, "y0": y0, "w0": w0, "e0": e0, "f_x0": fx0},
        h=h,
        g=g,
    )
    _record_step2(space, rec, ws, mu)
    return rec


def _image_sample(space, g1, x0, z0, reach, n, rng):
    """Points of ``g1(X)`` from balls of doubling radius around ``x0`` and ``z0``."""
    levels = max(1, int(math.ceil(math.log2(max(reach, 1.0)))) + 1)
    radii = 2.0 ** np.arange(levels)
    per = max(1, n // (2 * levels))
    pre = []
    for c in (x0, z0):
        for r in radii:
            pre.append(sample_points(space, rng, per, c, float(r)))
    pre = np.vstack(pre)
    return pre, evaluate(space, g1, pre)


def _phi_hat(space, image, x_rows):
    x_rows = np.atleast_2d(x_rows)
    return np.array([float(np.max(np.atleast_1d(space.dist(x, image)))) for x in x_rows])


def step1_bounded(space: Space, omega: Modulus, f: MapExpr, s: float, mu: float, eps: float,
                  x0: Point | None = None, search_budget: int = 20000, rng_seed=0,
                  guard: float = 0.5) -> ConstructionRecord:
    """Perturbation ``h`` of ``f`` for bounded ``omega`` with sup ``Omega``.

    ``phi(x) = sup rho(x, g1(X))`` is replaced by its maximum over a sampled
    image of ``g1``.  ``e0`` is located on a ray from ``w0`` by doubling and
    bisection on that estimate, then checked against an independent image
    sample; ``w1`` is the sampled image point farthest from ``e0``.
    """
    s, mu, eps = _check_common(s, mu, eps)
    if not omega.bounded:
        raise MisuseError("step1_bounded needs a bounded modulus")
    x0 = space.base_point if x0 is None else x0
    Om = omega.sup
    p = choose_p(eps)
    t = min(mu / 4.0, eps / (2.0 * Om))
    sp = find_sprime(omega, t, guard)
    M = s + 3.0 * sp
    R = M / t
    ws = float(omega(s))
    z0 = _far_point(space, x0, p + R + 1.0)
    fx0 = space.to_point(evaluate(space, f, space.as_array(x0))[0])
    g1 = blend(f, Constant(fx0), t)
    w0 = space.to_point(evaluate(space, g1, space.as_array(z0))[0])

    target = (1.0 - t) * Om
    tolerance = t * Om / 4.0
    reach = 2.0 * (p + R + 1.0)
    pre, image = _image_sample(space, g1, x0, z0, reach, search_budget, chunk_rng(rng_seed, 0, stream=10))
    _, image_check = _image_sample(space, g1, x0, z0, reach, search_budget, chunk_rng(rng_seed, 0, stream=11))

    W0 = space.as_array(w0)
    direction = space.default_direction()

    def along(d):
        return np.atleast_2d(space.ray_point(W0, direction, float(d)))[0]

    def phi_at(d):
        return float(_phi_hat(space, image, along(d))[0])

    diag = {"phi_target": target, "phi_tolerance": tolerance, "image_samples": int(image.shape[0])}
    lo, hi = 0.0, 0.0
    if phi_at(0.0) < target:
        hi = max(target / 8.0, 1e-6)
        for _ in range(200):
            if phi_at(hi) >= target:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise ConstructionError("phi estimate never reaches its target along the ray", diag)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if phi_at(mid) >= target:
                hi = mid
            else:
                lo = mid
    e0_row = along(hi)
    phi_e0 = float(_phi_hat(space, image, e0_row)[0])
    phi_check = float(_phi_hat(space, image_check, e0_row)[0])
    diag.update({"phi_e0": phi_e0, "phi_e0_check": phi_check, "e0_ray_distance": hi})
    if abs(phi_check - target) > tolerance or abs(phi_e0 - target) > tolerance:
        raise ConstructionError("phi(e0) could not be pinned within tolerance", diag)
    e0 = space.to_point(e0_row)

    gaps = np.atleast_1d(space.dist(e0_row, image))
    j = int(np.argmax(gaps))
    diag["w1_gap"] = float(gaps[j])
    if not gaps[j] > (1.0 - 2.0 * t) * Om:
        raise ConstructionError("no sampled image point is far enough from e0", diag)
    w1_pre = space.to_point(pre[j])
    w1 = space.to_point(evaluate(space, g1, pre[j][None, :])[0])
    w2 = space.to_point(np.atleast_2d(space.combine(space.as_array(w1), space.as_array(e0), ws / Om))[0])

    phi = RetractionParams(z0, M, R)
    g2 = RetractPrecompose(g1, phi)
    ws_p = float(omega(sp))
    h = RegionPiecewise(
        z0,
        (
            Band(0.0, s, Slide(w1, w2, s, ws, omega)),
            Band(s, s + sp, ExprPiece(Constant(w1))),
            Band(s + sp, s + 2.0 * sp, Slide(w0, w1, s + 2.0 * sp, ws_p, omega)),
            Band(s + 2.0 * sp, math.inf, ExprPiece(g2)),
        ),
        right_closed=True,
    )
    y0 = _toward(space, z0, x0, s)
    rec = ConstructionRecord(
        kind="step1_bounded",
        space=space,
        omega=omega,
        f=f,
        scalars={"p": float(p), "t": t, "mu": mu, "s": s, "eps": eps, "M": M, "R": R, "s_prime": sp,
                 "Omega": Om, "omega_s": ws, "omega_s_prime": ws_p, "guard": guard},
        points={"x0": x0, "z0": z0, "y0": y0, "w0": w0, "e0": e0, "w1": w1, "w1_preimage": w1_pre,
                "w2": w2, "f_x0": fx0},
        h=h,
        g=g2,
        maps={"g1": g1},
        seed=int(rng_seed),
        budgets={"search_budget": int(search_budget)},
        diagnostics=diag,
    )
    _record_step2(space, rec, ws, mu)
    return rec


def step1(space, omega, f, s, mu, eps, x0=None, search_budget=20000, rng_seed=0):
    """Dispatch on whether ``omega`` is bounded."""
    if omega.bounded:
        return step1_bounded(space, omega, f, s, mu, eps, x0, search_budget, rng_seed)
    return step1_unbounded(space, omega, f, s, mu, eps, x0)


# ---------------------------------------------------------------------------
# porosity
# ---------------------------------------------------------------------------

def image_diameter_bound(space: Space, f: MapExpr, omega: Modulus | None = None) -> float | None:
    """Upper bound on ``sup rho(f x, f y)``: twice an image-ball radius, capped by ``sup omega``."""
    ball = image_ball(space, f)
    cands = []
    if ball is not None:
        cands.append(2.0 * ball[1])
    if omega is not None and omega.bounded:
        cands.append(omega.sup)
    return min(cands) if cands else None


def porosity_center(space: Space, omega: Modulus, f: MapExpr, s: float, eps: float,
                    x0: Point | None = None, budget: int = 4096, rng_seed=0) -> ConstructionRecord:
    """Centre ``g`` and ratio ``alpha`` with ``B(g, alpha eps)`` inside ``B(f, eps)`` and inside ``R(s)``.

    ``Omega`` is replaced by a certified upper bound on the diameter of
    ``f(X)``; every inequality of the argument survives this replacement.
    The sampled diameter is kept as a diagnostic.
    """
    s, eps = float(s), float(eps)
    if not s > 0 or not eps > 0:
        raise DomainError("s and epsilon must be positive")
    x0 = space.base_point if x0 is None else x0
    Om = image_diameter_bound(space, f, omega)
    if Om is None:
        raise MisuseError("f has no certified bounded image; porosity needs bounded maps")
    rng = chunk_rng(rng_seed, 0, stream=12)
    P = sample_points(space, rng, budget, x0, 16.0)
    F = evaluate(space, f, P)
    F0 = evaluate(space, f, space.as_array(x0))[0]
    om_lo = float(np.max(np.atleast_1d(space.dist(F0, F))))
    ws = float(omega(s))
    fx0 = space.to_point(F0)
    if Om == 0.0:
        eps0 = ws / 4.0
        if eps > eps0:
            raise DomainError(f"epsilon {eps} exceeds eps0 = {eps0}")
        g, gamma, alpha = f, 0.0, 1.0
        rakotch = 0.5
    else:
        eps0 = 2.0 * Om
        if eps > eps0:
            raise DomainError(f"epsilon {eps} exceeds eps0 = {eps0}")
        gamma = eps / (2.0 * Om)
        g = blend(f, Constant(fx0), gamma)
        alpha = min(0.5, ws / (8.0 * Om))
        rakotch = 1.0 - gamma / 2.0
    return ConstructionRecord(
        kind="porosity",
        space=space,
        omega=omega,
        f=f,
        scalars={"s": s, "eps": eps, "Omega": Om, "eps0": eps0, "gamma": gamma, "alpha": alpha, "omega_s": ws,
                 "rakotch": rakotch},
        points={"x0": x0, "f_x0": fx0},
        g=g,
        seed=int(rng_seed),
        budgets={"budget": int(budget)},
        diagnostics={"Omega_sampled": om_lo},
    )


def phi_f_profile(space: Space, omega: Modulus, f: MapExpr, s_grid, budget: int = 20000, rng_seed=0,
                  centers=None, radius: float = 16.0) -> np.ndarray:
    """Lower bounds on ``phi_f(s)`` for each ``s`` in ``s_grid`` from one shared pair pool.

    Because the pool does not depend on ``s``, the profile is nonincreasing.
    """
    rng = chunk_rng(rng_seed, 0, stream=13)
    X = sample_points(space, rng, budget, centers, radius)
    u = rng.random(budget)
    d = np.exp(np.log(1e-3) + (np.log(2.0 * radius) - np.log(1e-3)) * u)
    Y = np.atleast_2d(space.ray_point(X, space.random_directions(rng, budget), d))
    rho = np.atleast_1d(space.dist(X, Y))
    img = np.atleast_1d(space.dist(evaluate(space, f, X), evaluate(space, f, Y)))
    w = np.asarray(omega(rho), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w > 0, img / np.where(w > 0, w, 1.0), 0.0)
    out = []
    for s in np.atleast_1d(np.asarray(s_grid, dtype=float)):
        if not s > 0:
            raise DomainError("s must be positive")
        sel = rho >= s
        out.append(float(np.max(ratio[sel])) if np.any(sel) else 0.0)
    return np.array(out)


def phi_f_estimate(space: Space, omega: Modulus, f: MapExpr, s: float, budget: int = 20000, rng_seed=0,
                   **kwargs) -> float:
    return float(phi_f_profile(space, omega, f, [s], budget, rng_seed, **kwargs)[0])


# ---------------------------------------------------------------------------
# pointwise topology
# ---------------------------------------------------------------------------

def choose_p_pointwise(theta: DenseSequence, x0: Point, eps: float, p_max: int, N: int | None = None) -> int:
    """Smallest ``p <= p_max`` whose certified bound on ``sum_{rho(theta_n, x0) >= p} 2^-n`` is below ``eps / 2``.

    Terms ``n <= N`` are summed explicitly and the rest bounded by ``2^-N``;
    ``N`` is at least 64 and large enough that ``2^-N < eps / 4``.
    """
    if not eps > 0:
        raise DomainError("epsilon must be positive")
    need = int(math.ceil(math.log2(4.0 / eps))) + 1
    N = max(need, 64) if N is None else max(int(N), need)
    if theta.kind == "explicit":
        N = min(N, theta.explicit.shape[0])
        if 2.0 ** -N >= eps / 4.0:
            raise InfeasibleError("explicit sequence too short to certify the tail")
    space = theta.space
    T = theta.points(N)
    r = np.atleast_1d(space.dist(space.as_array(x0), T))
    w = 2.0 ** -np.arange(1, N + 1)
    tail = 2.0 ** -N
    for p in range(1, int(p_max) + 1):
        if float(np.sum(w[r >= p])) + tail < eps / 2.0:
            return p
    raise InfeasibleError(f"no p <= {p_max} meets the tail bound for epsilon {eps}")
