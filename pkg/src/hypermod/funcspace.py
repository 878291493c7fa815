"""Self-maps of a space as expression trees, their moduli, and function-space metrics.

Maps are immutable trees of :class:`MapExpr` nodes evaluated on batches of
points.  Supremum-type quantities are never computed exactly: lower bounds come
from seeded sampling plus hill-climbing, upper bounds from nets and the
equicontinuity that membership in ``C_omega`` provides.  Results are returned
as :class:`Enclosure` intervals.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, HypermodError, InfeasibleError, MisuseError
from .geometry import Point, Space
from .moduli import Modulus, modulus_from_config, smallest_argument_reaching


# ---------------------------------------------------------------------------
# map algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RetractionParams:
    """Radial retraction onto the complement of ``B(z0, delta)``, identity outside ``B(z0, r)``."""

    z0: Point
    delta: float
    r: float

    def __post_init__(self):
        if not 0 < self.delta < self.r:
            raise DomainError("retraction needs 0 < delta < r")

    @property
    def lipschitz(self) -> float:
        return self.r / (self.r - self.delta)


class MapExpr:
    """Base class of map expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Constant(MapExpr):
    c: Point


@dataclass(frozen=True)
class Identity(MapExpr):
    pass


@dataclass(frozen=True)
class GeodesicBlend(MapExpr):
    """``x -> (1 - t) m1(x) (+) t m2(x)``."""

    m1: MapExpr
    m2: MapExpr
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise DomainError("blend parameter must lie in [0, 1]")


@dataclass(frozen=True)
class RetractPrecompose(MapExpr):
    """``m o Phi`` for the radial retraction ``Phi``."""

    m: MapExpr
    phi: RetractionParams


@dataclass(frozen=True)
class BallClamp(MapExpr):
    """Nearest-point projection onto the closed ball ``B(center, radius)``."""

    center: Point
    radius: float


@dataclass(frozen=True)
class Dilate(MapExpr):
    """``x -> center + factor * (x - center)``; euclidean, or star tree about the hub."""

    center: Point
    factor: float


@dataclass(frozen=True)
class ExprPiece:
    m: MapExpr


@dataclass(frozen=True)
class Slide:
    """``x -> (1 - q) a (+) q b`` with ``q = omega(offset - rho(x, z0)) / denom`` clipped to [0, 1]."""

    a: Point
    b: Point
    offset: float
    denom: float
    omega: Modulus

    def __post_init__(self):
        if not self.denom > 0:
            raise DomainError("slide denominator must be positive")


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    piece: object


@dataclass(frozen=True)
class RegionPiecewise(MapExpr):
    """Piecewise map selected by the distance to ``z0``.

    Bands partition ``[0, inf)``; they are ``[lo, hi)`` when ``right_closed``
    is false and ``(lo, hi]`` (the first one ``[0, hi]``) when it is true.
    """

    z0: Point
    bands: tuple
    right_closed: bool = False

    def __post_init__(self):
        if not self.bands:
            raise DomainError("region_piecewise needs at least one band")
        if self.bands[0].lo != 0.0 or not math.isinf(self.bands[-1].hi):
            raise DomainError("bands must cover [0, inf)")
        for a, b in zip(self.bands, self.bands[1:]):
            if a.hi != b.lo or not a.lo <= a.hi:
                raise DomainError("bands must be contiguous and ordered")

    @property
    def edges(self) -> np.ndarray:
        return np.array([b.hi for b in self.bands[:-1]], dtype=float)


def blend(m1: MapExpr, m2: MapExpr, t: float) -> GeodesicBlend:
    return GeodesicBlend(m1, m2, float(t))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def apply_retraction(space: Space, phi: RetractionParams, X: np.ndarray) -> np.ndarray:
    """Batch radial retraction.

    ``x`` is kept when ``rho(x, z0) >= r``, sent to ``z0`` when
    ``rho(x, z0) <= delta``, and otherwise moved along ``[z0, x]`` to distance
    ``r (rho - delta) / (r - delta)`` from ``z0``.
    """
    Z = space.as_array(phi.z0)
    rho = np.atleast_1d(space.dist(Z, X))
    target = phi.r * (rho - phi.delta) / (phi.r - phi.delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.clip(np.where(rho > 0, target / np.where(rho > 0, rho, 1.0), 0.0), 0.0, 1.0)
    moved = np.atleast_2d(space.combine(np.broadcast_to(Z, X.shape), X, lam))
    out = np.where((rho >= phi.r)[:, None], X, moved)
    out = np.where((rho <= phi.delta)[:, None], np.broadcast_to(Z, X.shape), out)
    return out


def _eval_piece(space, piece, X, rho):
    if isinstance(piece, ExprPiece):
        return evaluate(space, piece.m, X)
    if isinstance(piece, Slide):
        q = np.asarray(piece.omega(np.maximum(piece.offset - rho, 0.0)), dtype=float) / piece.denom
        q = np.clip(np.atleast_1d(q), 0.0, 1.0)
        A = space.as_array(piece.a)
        B = space.as_array(piece.b)
        n = X.shape[0]
        return np.atleast_2d(space.combine(np.broadcast_to(A, (n, A.shape[1])), np.broadcast_to(B, (n, B.shape[1])), q))
    if isinstance(piece, MapExpr):
        return evaluate(space, piece, X)
    raise HypermodError(f"unknown piece {piece!r}")


def evaluate(space: Space, m: MapExpr, X) -> np.ndarray:
    """Evaluate ``m`` on the rows of ``X``; returns an ``(n, k)`` array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if isinstance(m, Identity):
        return X
    if isinstance(m, Constant):
        return np.repeat(space.as_array(m.c), n, axis=0)
    if isinstance(m, GeodesicBlend):
        if m.t == 0.0:
            return evaluate(space, m.m1, X)
        return np.atleast_2d(space.combine(evaluate(space, m.m1, X), evaluate(space, m.m2, X), np.full(n, m.t)))
    if isinstance(m, RetractPrecompose):
        return evaluate(space, m.m, apply_retraction(space, m.phi, X))
    if isinstance(m, BallClamp):
        return space.clamp_to_ball(m.center, X, m.radius)
    if isinstance(m, Dilate):
        C = space.as_array(m.center)
        if space.model_tag == "euclidean":
            return C + m.factor * (X - C)
        if space.model_tag == "star_tree":
            if C[0, 1] != 0.0:
                raise MisuseError("star tree dilation is only defined about the hub")
            out = X.copy()
            out[:, 1] = m.factor * X[:, 1]
            out[out[:, 1] <= 0.0, 0] = 0.0
            return out
        raise MisuseError(f"dilation is not available on {space.model_tag}")
    if isinstance(m, RegionPiecewise):
        rho = np.atleast_1d(space.dist(space.as_array(m.z0), X))
        side = "left" if m.right_closed else "right"
        idx = np.searchsorted(m.edges, rho, side=side)
        out = np.empty_like(X)
        filled = np.zeros(n, dtype=bool)
        for k, band in enumerate(m.bands):
            mask = idx == k
            if np.any(mask):
                out[mask] = _eval_piece(space, band.piece, X[mask], rho[mask])
                filled |= mask
        if not np.all(filled):
            raise HypermodError("band lookup failed")
        return out
    raise HypermodError(f"unknown map node {m!r}")


def eval_map(space: Space, m: MapExpr, x: Point) -> Point:
    return space.to_point(evaluate(space, m, space.as_array(x))[0])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def map_to_json(m) -> dict:
    if isinstance(m, Identity):
        return {"node": "identity"}
    if isinstance(m, Constant):
        return {"node": "constant", "point": m.c.to_json()}
    if isinstance(m, GeodesicBlend):
        return {"node": "blend", "t": m.t, "children": [map_to_json(m.m1), map_to_json(m.m2)]}
    if isinstance(m, RetractPrecompose):
        return {
            "node": "retract",
            "params": {"z0": m.phi.z0.to_json(), "delta": m.phi.delta, "r": m.phi.r},
            "children": [map_to_json(m.m)],
        }
    if isinstance(m, BallClamp):
        return {"node": "clamp", "center": m.center.to_json(), "radius": m.radius}
    if isinstance(m, Dilate):
        return {"node": "dilate", "center": m.center.to_json(), "factor": m.factor}
    if isinstance(m, RegionPiecewise):
        return {
            "node": "piecewise",
            "z0": m.z0.to_json(),
            "right_closed": m.right_closed,
            "bands": [
                {"lo": b.lo, "hi": None if math.isinf(b.hi) else b.hi, "piece": _piece_to_json(b.piece)}
                for b in m.bands
            ],
        }
    raise HypermodError(f"cannot serialize {m!r}")


def _piece_to_json(piece) -> dict:
    if isinstance(piece, Slide):
        return {
            "piece": "slide",
            "a": piece.a.to_json(),
            "b": piece.b.to_json(),
            "offset": piece.offset,
            "denom": piece.denom,
            "modulus": piece.omega.to_json(),
        }
    if isinstance(piece, ExprPiece):
        return {"piece": "expr", "map": map_to_json(piece.m)}
    return {"piece": "expr", "map": map_to_json(piece)}


def map_from_json(data: dict) -> MapExpr:
    kind = data.get("node")
    if kind == "identity":
        return Identity()
    if kind == "constant":
        return Constant(Point.from_json(data["point"]))
    if kind == "blend":
        a, b = data["children"]
        return GeodesicBlend(map_from_json(a), map_from_json(b), float(data["t"]))
    if kind == "retract":
        p = data["params"]
        return RetractPrecompose(
            map_from_json(data["children"][0]),
            RetractionParams(Point.from_json(p["z0"]), float(p["delta"]), float(p["r"])),
        )
    if kind == "clamp":
        return BallClamp(Point.from_json(data["center"]), float(data["radius"]))
    if kind == "dilate":
        return Dilate(Point.from_json(data["center"]), float(data["factor"]))
    if kind == "piecewise":
        bands = []
        for b in data["bands"]:
            hi = math.inf if b["hi"] is None else float(b["hi"])
            bands.append(Band(float(b["lo"]), hi, _piece_from_json(b["piece"])))
        return RegionPiecewise(Point.from_json(data["z0"]), tuple(bands), bool(data.get("right_closed", False)))
    raise DomainError(f"unknown map node {kind!r}")


def _piece_from_json(data: dict):
    if data["piece"] == "slide":
        return Slide(
            Point.from_json(data["a"]),
            Point.from_json(data["b"]),
            float(data["offset"]),
            float(data["denom"]),
            modulus_from_config(data["modulus"]),
        )
    return ExprPiece(map_from_json(data["map"]))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_hash(m: MapExpr) -> str:
    return hashlib.sha256(canonical_json(map_to_json(m)).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# enclosures, structural bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Enclosure:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= value <= self.hi + tol

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


def image_ball(space: Space, m: MapExpr):
    """``(center_row, radius)`` with ``m(X)`` inside the closed ball, or ``None`` if unknown."""
    return _image_ball(space, m)


def _image_ball(space, m):
    if isinstance(m, Constant):
        return space.as_array(m.c)[0], 0.0
    if isinstance(m, BallClamp):
        return space.as_array(m.center)[0], m.radius
    if isinstance(m, RetractPrecompose):
        return _image_ball(space, m.m)
    if isinstance(m, GeodesicBlend):
        a = _image_ball(space, m.m1)
        b = _image_ball(space, m.m2)
        if a is None or b is None:
            return None
        c = np.atleast_2d(space.combine(a[0], b[0], m.t))[0]
        return c, (1.0 - m.t) * a[1] + m.t * b[1]
    if isinstance(m, RegionPiecewise):
        balls = []
        for band in m.bands:
            piece = band.piece
            if isinstance(piece, Slide):
                A = space.as_array(piece.a)[0]
                balls.append((A, float(space.dist(A, space.as_array(piece.b)[0]))))
            else:
                inner = piece.m if isinstance(piece, ExprPiece) else piece
                ball = _image_ball(space, inner)
                if ball is None:
                    return None
                balls.append(ball)
        ref = balls[0][0]
        return ref, max(float(space.dist(ref, c)) + r for c, r in balls)
    return None


def displacement_bound(space: Space, a: MapExpr, b: MapExpr, omega: Modulus | None = None,
                       anchor: Point | None = None):
    """Certified upper bound on ``sup_x rho(a(x), b(x))`` from the expression structure.

    Returns ``None`` when no finite bound follows.  When ``omega`` is given
    and bounded, both maps are assumed to lie in ``C_omega`` and the bound
    ``rho(a(x0), b(x0)) + 2 sup(omega)`` is also used.
    """
    memo: dict = {}
    best = _disp(space, a, b, memo)
    if omega is not None and omega.bounded:
        x0 = space.as_array(anchor if anchor is not None else space.base_point)
        gap = float(space.dist(evaluate(space, a, x0)[0], evaluate(space, b, x0)[0]))
        alt = gap + 2.0 * omega.sup
        best = alt if best is None else min(best, alt)
    return best


def _disp(space, a, b, memo):
    key = (id(a), id(b))
    if key in memo:
        return memo[key]
    memo[key] = None  # guards against cycles
    cands = []
    if a == b:
        memo[key] = 0.0
        return 0.0
    if isinstance(a, Constant) and isinstance(b, Constant):
        cands.append(float(space.dist(space.as_array(a.c)[0], space.as_array(b.c)[0])))
    for x, y in ((a, b), (b, a)):
        if isinstance(x, GeodesicBlend):
            u = x.t
            if x.m1 == y:
                d12 = _disp(space, x.m1, x.m2, memo)
                if d12 is not None:
                    cands.append(u * d12)
            if x.m2 == y:
                d12 = _disp(space, x.m1, x.m2, memo)
                if d12 is not None:
                    cands.append((1.0 - u) * d12)
            d1 = _disp(space, x.m1, y, memo) if x.m1 != y else 0.0
            d2 = _disp(space, x.m2, y, memo) if x.m2 != y else 0.0
            if d1 is not None and d2 is not None:
                cands.append((1.0 - u) * d1 + u * d2)
            d12 = _disp(space, x.m1, x.m2, memo)
            if d12 is not None and d1 is not None:
                cands.append(u * d12 + d1)
    if isinstance(a, GeodesicBlend) and isinstance(b, GeodesicBlend) and a.t == b.t:
        d1 = _disp(space, a.m1, b.m1, memo)
        d2 = _disp(space, a.m2, b.m2, memo)
        if d1 is not None and d2 is not None:
            cands.append((1.0 - a.t) * d1 + a.t * d2)
    if isinstance(a, RetractPrecompose) and isinstance(b, RetractPrecompose) and a.phi == b.phi:
        d = _disp(space, a.m, b.m, memo)
        if d is not None:
            cands.append(d)
    ba = _image_ball(space, a)
    bb = _image_ball(space, b)
    if ba is not None and bb is not None:
        cands.append(float(space.dist(ba[0], bb[0])) + ba[1] + bb[1])
    out = min(cands) if cands else None
    memo[key] = out
    return out


# ---------------------------------------------------------------------------
# seeded sampling machinery
# ---------------------------------------------------------------------------

def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("HYPERMOD_THREADS", "1")))
    except ValueError:
        return 1


def run_chunks(fn: Callable[[int], object], n_chunks: int, workers: int | None = None) -> list:
    """Run ``fn(0..n_chunks-1)``; results come back in chunk order whatever the worker count."""
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or n_chunks <= 1:
        return [fn(c) for c in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))


def chunk_rng(seed, chunk: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, stream, chunk])


def _centers(space, centers):
    if centers is None:
        return space.as_array(space.base_point)
    return space.as_array(centers if not isinstance(centers, np.ndarray) else np.atleast_2d(centers))


def sample_points(space, rng, n, centers, radius):
    C = _centers(space, centers)
    pick = rng.integers(0, C.shape[0], n)
    d = radius * space._radial_law(rng.random(n))
    return np.atleast_2d(space.ray_point(C[pick], space.random_directions(rng, n), d))


def _distance_law(rng, n, max_dist, min_dist=0.0):
    """Mixture of exact ``max_dist``, uniform, and log-uniform distances in ``[min_dist, max_dist]``."""
    u = rng.random(n)
    kind = rng.integers(0, 3, n)
    lo = max(min_dist, 1e-9 * max_dist)
    logu = np.exp(np.log(lo) + (np.log(max_dist) - np.log(lo)) * u) if max_dist > lo else np.full(n, max_dist)
    d = np.where(kind == 0, max_dist, np.where(kind == 1, min_dist + (max_dist - min_dist) * u, logu))
    return np.clip(d, min_dist, max_dist)


def hill_climb(space, objective, X, Y, rng, steps=40, sigma=None, project=None):
    """Greedy local search maximizing ``objective(X, Y)`` row-wise.

    Each step proposes small geodesic moves of both endpoints; a proposal is
    kept only if it strictly improves the row's value, so the first-found
    maximum wins ties.  Per-row step sizes grow on success and shrink on
    failure.
    """
    X = X.copy()
    Y = Y.copy()
    best = objective(X, Y)
    n = X.shape[0]
    if sigma is None:
        sigma = np.maximum(0.1 * np.atleast_1d(space.dist(X, Y)), 1e-3)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (n,)).copy()
    sigma_cap = 100.0 * max(float(np.max(sigma)), 1e-3)
    for _ in range(steps):
        which = rng.integers(0, 3, n)  # 0: move x, 1: move y, 2: both
        X2 = np.atleast_2d(space.ray_point(X, space.random_directions(rng, n), sigma * rng.random(n)))
        Y2 = np.atleast_2d(space.ray_point(Y, space.random_directions(rng, n), sigma * rng.random(n)))
        X2 = np.where((which == 1)[:, None], X, X2)
        Y2 = np.where((which == 0)[:, None], Y, Y2)
        if project is not None:
            X2, Y2 = project(X2, Y2)
        val = objective(X2, Y2)
        better = val > best
        X[better] = X2[better]
        Y[better] = Y2[better]
        best = np.where(better, val, best)
        sigma = np.minimum(np.where(better, sigma * 1.5, sigma * 0.6), sigma_cap)
    return X, Y, best


def _reduce_max(results):
    """First-found maximum over ``(value, payload)`` pairs in chunk order."""
    best = None
    for r in results:
        if r is None:
            continue
        if best is None or r[0] > best[0]:
            best = r
    return best


# ---------------------------------------------------------------------------
# modulus of continuity
# ---------------------------------------------------------------------------

@dataclass
class LowerBound:
    value: float
    x: np.ndarray | None
    y: np.ndarray | None
    pairs: int


def mod_lower_witness(space: Space, m: MapExpr, s: float, budget: int, rng_seed=0, centers=None,
                      radius: float | None = None, seed_pairs=None, chunk: int = 4096,
                      refine: bool = True, workers: int | None = None) -> LowerBound:
    """Certified lower bound on ``omega_m(s)`` with its witness pair.

    ``budget`` random pairs (rounded up to whole chunks) are drawn around
    ``centers``; the best pairs of each chunk are refined by hill-climbing
    under the constraint ``rho(x, y) <= s``.  Chunks are seeded by index, so
    the result does not depend on ``workers`` and is monotone in ``budget``.
    """
    if not s > 0:
        raise DomainError("s must be positive")
    if budget < 1:
        raise DomainError("budget must be at least 1")
    radius = max(4.0 * s, 4.0) if radius is None else radius
    n_chunks = int(math.ceil(budget / chunk))
    s_in = s * (1.0 - 1e-12)

    def value(X, Y):
        rho = np.atleast_1d(space.dist(X, Y))
        v = np.atleast_1d(space.dist(evaluate(space, m, X), evaluate(space, m, Y)))
        return np.where(rho <= s, v, -np.inf)

    def project(X, Y):
        rho = np.atleast_1d(space.dist(X, Y))
        over = rho > s_in
        if np.any(over):
            lam = np.where(over, s_in / np.where(rho > 0, rho, 1.0), 1.0)
            Y = np.atleast_2d(space.combine(X, Y, np.clip(lam, 0.0, 1.0)))
        return X, Y

    def run(c):
        rng = chunk_rng(rng_seed, c, stream=1)
        X = sample_points(space, rng, chunk, centers, radius)
        d = _distance_law(rng, chunk, s_in)
        Y = np.atleast_2d(space.ray_point(X, space.random_directions(rng, chunk), d))
        X, Y = project(X, Y)
        vals = value(X, Y)
        if refine:
            k = min(32, chunk)
            top = np.argsort(-vals, kind="stable")[:k]
            Xr, Yr, vr = hill_climb(space, value, X[top], Y[top], rng, project=project)
            X = np.vstack([X, Xr])
            Y = np.vstack([Y, Yr])
            vals = np.concatenate([vals, vr])
        i = int(np.argmax(vals))
        return float(vals[i]), (X[i], Y[i])

    results = []
    if seed_pairs is not None:
        SX = space.as_array([p for p, _ in seed_pairs])
        SY = space.as_array([q for _, q in seed_pairs])
        sv = value(SX, SY)
        i = int(np.argmax(sv))
        results.append((float(sv[i]), (SX[i], SY[i])))
    results.extend(run_chunks(run, n_chunks, workers))
    best = _reduce_max(results)
    if best is None or not np.isfinite(best[0]):
        return LowerBound(0.0, None, None, n_chunks * chunk)
    return LowerBound(max(best[0], 0.0), best[1][0], best[1][1], n_chunks * chunk)


def mod_lower(space: Space, m: MapExpr, s: float, budget: int, rng_seed=0, **kwargs) -> float:
    return mod_lower_witness(space, m, s, budget, rng_seed, **kwargs).value


@dataclass
class FalsificationResult:
    passed: bool
    worst_margin: float
    witness: dict | None
    pairs: int
    tol: float

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "pairs": self.pairs,
            "tol": self.tol,
        }


def pair_margins(space: Space, m: MapExpr, omega: Modulus, X, Y, factor: float = 1.0) -> np.ndarray:
    """``factor * omega(rho(x, y)) - rho(m(x), m(y))`` per pair (negative means violation)."""
    rho = np.atleast_1d(space.dist(X, Y))
    img = np.atleast_1d(space.dist(evaluate(space, m, X), evaluate(space, m, Y)))
    with np.errstate(invalid="ignore"):
        out = factor * np.asarray(omega(rho)) - img
    return np.where(np.isnan(out), np.inf, out)


def _witness(space, m, omega, x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    fx = evaluate(space, m, x[None, :])[0]
    fy = evaluate(space, m, y[None, :])[0]
    rho = float(space.dist(x, y))
    return {
        "x": x.tolist(),
        "y": y.tolist(),
        "rho_xy": rho,
        "rho_mx_my": float(space.dist(fx, fy)),
        "omega_rho": float(omega(rho)),
    }


def check_in_C_omega(space: Space, m: MapExpr, omega: Modulus, budget: int, rng_seed=0, tol: float = 1e-7,
                     centers=None, radius: float | None = None, max_dist: float | None = None,
                     pairs=None, factor: float = 1.0, min_dist: float = 0.0, chunk: int = 4096,
                     refine: bool = True, workers: int | None = None) -> FalsificationResult:
    """Search for ``x, y`` with ``rho(m(x), m(y)) > factor * omega(rho(x, y)) + tol``.

    Random pairs around ``centers`` at distances spread over all scales up to
    ``max_dist`` are tried, plus any explicit ``pairs = (X, Y)``; the worst
    pairs are refined by hill-climbing.  Only pairs with
    ``rho(x, y) >= min_dist`` count.  A pass means no violation was found.
    """
    radius = 8.0 if radius is None else radius
    max_dist = 2.0 * radius if max_dist is None else max_dist
    n_chunks = int(math.ceil(budget / chunk)) if budget > 0 else 0

    def violation(X, Y):
        v = -pair_margins(space, m, omega, X, Y, factor)
        if min_dist > 0:
            v = np.where(np.atleast_1d(space.dist(X, Y)) >= min_dist, v, -np.inf)
        return v

    def run(c):
        rng = chunk_rng(rng_seed, c, stream=2)
        X = sample_points(space, rng, chunk, centers, radius)
        d = _distance_law(rng, chunk, max_dist, min_dist)
        Y = np.atleast_2d(space.ray_point(X, space.random_directions(rng, chunk), d))
        v = violation(X, Y)
        if refine:
            top = np.argsort(-v, kind="stable")[: min(32, chunk)]
            Xr, Yr, vr = hill_climb(space, violation, X[top], Y[top], rng)
            X = np.vstack([X, Xr])
            Y = np.vstack([Y, Yr])
            v = np.concatenate([v, vr])
        i = int(np.argmax(v))
        return float(v[i]), (X[i], Y[i])

    results = []
    total = n_chunks * chunk
    if pairs is not None:
        PX, PY = (np.atleast_2d(np.asarray(a, dtype=float)) for a in pairs)
        v = violation(PX, PY)
        total += PX.shape[0]
        i = int(np.argmax(v))
        results.append((float(v[i]), (PX[i], PY[i])))
        if refine:
            rng = chunk_rng(rng_seed, 0, stream=3)
            top = np.argsort(-v, kind="stable")[: min(64, v.size)]
            Xr, Yr, vr = hill_climb(space, violation, PX[top], PY[top], rng)
            j = int(np.argmax(vr))
            results.append((float(vr[j]), (Xr[j], Yr[j])))
    results.extend(run_chunks(run, n_chunks, workers))
    worst = _reduce_max(results)
    if worst is None:
        return FalsificationResult(True, math.inf, None, 0, tol)
    margin = -worst[0]
    witness = _witness(space, m, omega, *worst[1])
    return FalsificationResult(bool(margin >= -tol), margin, witness, total, tol)


def stratified_pairs(space: Space, z0, edges: Sequence[float], per_pair: int, rng: np.random.Generator,
                     close_scale: float | None = None):
    """Pairs covering every ordered pair of distance bands around ``z0``.

    ``edges`` are increasing radii ``0 = e0 < e1 < ... < ek``; band ``i`` is
    ``[e_i, e_{i+1}]``.  For each ordered ``(i, j)`` exactly ``per_pair`` pairs
    are emitted: a third radially aligned (same direction from ``z0``), a
    third in independent directions, and a third with ``y`` a short step
    from a point of band ``j`` (only when ``i == j``; otherwise aligned).
    Some radii sit exactly on band edges.  Returns ``X, Y, bi, bj``.
    """
    Z = space.as_array(z0)
    edges = np.asarray(edges, dtype=float)
    k = edges.size - 1
    if k < 1 or per_pair < 1:
        raise DomainError("need at least one band and one pair per band pair")
    close_scale = 0.05 * float(np.min(np.diff(edges))) if close_scale is None else close_scale

    def radii(band, n):
        lo, hi = edges[band], edges[band + 1]
        r = lo + (hi - lo) * rng.random(n)
        snap = rng.random(n)
        r = np.where(snap < 0.1, lo, np.where(snap < 0.2, hi, r))
        return r

    Xs, Ys, BI, BJ = [], [], [], []
    for i in range(k):
        for j in range(k):
            n = per_pair
            rx = radii(i, n)
            ry = radii(j, n)
            dx = space.random_directions(rng, n)
            dy = space.random_directions(rng, n)
            mode = np.arange(n) % 3
            aligned = (mode == 0) | ((mode == 2) & (i != j))
            if dx.ndim == 2:
                dy = np.where(aligned[:, None], dx, dy)
            else:
                dy = np.where(aligned, dx, dy)
            X = np.atleast_2d(space.ray_point(Z, dx, rx))
            Y = np.atleast_2d(space.ray_point(Z, dy, ry))
            if i == j:
                close = mode == 2
                if np.any(close):
                    nc = int(close.sum())
                    step = close_scale * rng.random(nc)
                    Yc = np.atleast_2d(space.ray_point(X[close], space.random_directions(rng, nc), step))
                    Y[close] = Yc
            Xs.append(X)
            Ys.append(Y)
            BI.append(np.full(n, i))
            BJ.append(np.full(n, j))
    return np.vstack(Xs), np.vstack(Ys), np.concatenate(BI), np.concatenate(BJ)


# ---------------------------------------------------------------------------
# function-space metrics
# ---------------------------------------------------------------------------

def _clipped_gap(space, m1, m2, X):
    return np.minimum(1.0, np.atleast_1d(space.dist(evaluate(space, m1, X), evaluate(space, m2, X))))


def metric_d(space: Space, m1: MapExpr, m2: MapExpr, x0: Point, N: int, mesh: float, omega: Modulus,
             samples: int = 0, rng_seed=0) -> Enclosure:
    """Enclosure of ``d(m1, m2) = sum_n 2^-n sup_{B(x0, n)} min(1, rho(m1 x, m2 x))``.

    For every ``n <= N`` the ball is replaced by a net of covering radius
    ``mesh`` inside it (net points outside the ball are projected onto it).
    Because both maps are in ``C_omega`` the clipped gap is
    ``2 omega``-continuous, so the net maximum plus ``2 omega(mesh)`` bounds
    the per-ball supremum from above.  The tail beyond ``N`` contributes
    ``[0, 2^-N]``.
    """
    if N < 1 or not mesh > 0:
        raise DomainError("need N >= 1 and mesh > 0")
    tail = 2.0 ** -N
    if m1 == m2:
        return Enclosure(0.0, tail)
    X0 = space.as_array(x0)
    base = space.net(X0, float(N), mesh)
    rho_base = np.atleast_1d(space.dist(X0, base))
    F_base = _clipped_gap(space, m1, m2, base)
    slack = 2.0 * float(omega(mesh))
    extra = None
    if samples > 0:
        rng = chunk_rng(rng_seed, 0, stream=4)
        extra = sample_points(space, rng, samples, X0, float(N))
        rho_extra = np.atleast_1d(space.dist(X0, extra))
        F_extra = _clipped_gap(space, m1, m2, extra)
    lo = 0.0
    hi = 0.0
    for n in range(1, N + 1):
        inside = rho_base <= n
        ring = (rho_base > n) & (rho_base <= n + mesh)
        net_max = float(F_base[inside].max()) if np.any(inside) else 0.0
        if np.any(ring):
            proj = space.clamp_to_ball(X0, base[ring], float(n))
            net_max = max(net_max, float(_clipped_gap(space, m1, m2, proj).max()))
        lower = net_max
        if extra is not None:
            sel = rho_extra <= n
            if np.any(sel):
                lower = max(lower, float(F_extra[sel].max()))
        w = 2.0 ** -n
        lo += w * lower
        hi += w * min(1.0, net_max + slack)
    return Enclosure(lo, hi + tail)


def saturation_radius(omega: Modulus, level: float = 0.999) -> float:
    if not omega.bounded:
        return 8.0
    return max(8.0, 2.0 * smallest_argument_reaching(omega, level * omega.sup))


def metric_dinf(space: Space, m1: MapExpr, m2: MapExpr, budget: int, mesh: float, omega: Modulus,
                rng_seed=0, radius: float | None = None, centers=None) -> Enclosure:
    """Enclosure of ``d_inf(m1, m2) = sup_x rho(m1 x, m2 x)``.

    The upper end is the structural displacement bound (see
    :func:`displacement_bound`), which holds on all of ``X``.  The lower end
    is the largest gap seen on a net of ``B(x0, R)`` (when it has at most
    ``budget`` points) and on ``budget`` random points of balls of radius up
    to ``R``, where ``R`` defaults to the radius at which ``omega`` has
    saturated.  Raises :class:`InfeasibleError` when no finite upper bound
    exists, i.e. the displacement may be unbounded.
    """
    hi = displacement_bound(space, m1, m2, omega)
    if hi is None:
        raise InfeasibleError("maps have unbounded (or uncertifiable) displacement")
    if hi == 0.0:
        return Enclosure(0.0, 0.0)
    R = saturation_radius(omega) if radius is None else radius
    X0 = space.as_array(space.base_point)
    lo = 0.0
    try:
        net = space.net(X0, R, mesh)
    except MisuseError:
        net = None
    if net is not None and net.shape[0] <= max(budget, 1):
        lo = float(np.max(np.atleast_1d(space.dist(evaluate(space, m1, net), evaluate(space, m2, net)))))
    if budget > 0:
        rng = chunk_rng(rng_seed, 0, stream=5)
        cs = X0 if centers is None else centers
        pts = sample_points(space, rng, budget, cs, R)
        lo = max(lo, float(np.max(np.atleast_1d(space.dist(evaluate(space, m1, pts), evaluate(space, m2, pts))))))
    return Enclosure(min(lo, hi), hi)


@dataclass
class DenseSequence:
    """Enumeration ``theta_1, theta_2, ...`` of a countable dense subset.

    ``rational`` sequences list dyadic-rational points level by level: level
    ``L`` adds the points with coordinates in ``2^-L Z`` and size at most
    ``L``, ordered by distance to the origin.  ``from_points`` wraps an
    explicit finite list (handy for tests; it is not dense).
    """

    space: Space
    kind: str = "rational"
    explicit: np.ndarray | None = None
    _cache: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def rational(cls, space: Space) -> "DenseSequence":
        return cls(space, "rational")

    @classmethod
    def from_points(cls, space: Space, points) -> "DenseSequence":
        return cls(space, "explicit", space.as_array(points))

    def points(self, n: int) -> np.ndarray:
        if self.kind == "explicit":
            if n > self.explicit.shape[0]:
                raise InfeasibleError("explicit sequence is too short")
            return self.explicit[:n]
        if self._cache is None or self._cache.shape[0] < n:
            self._cache = self._enumerate(n)
        return self._cache[:n]

    def _level(self, L: int) -> np.ndarray:
        sp = self.space
        h = 2.0 ** -L
        ticks = np.arange(-L * 2 ** L, L * 2 ** L + 1) * h
        pos = ticks[ticks > 0]
        if sp.model_tag == "euclidean":
            d = sp.dimension
            if d == 1:
                pts = ticks[:, None]
            else:
                grids = np.meshgrid(*([ticks] * d), indexing="ij")
                pts = np.stack([g.ravel() for g in grids], axis=1)
        elif sp.model_tag == "poincare_half_plane":
            gx, gy = np.meshgrid(ticks, pos, indexing="ij")
            pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        else:
            n_rays = L if sp.n_rays is None else min(L + 1, sp.n_rays)
            rays = np.arange(n_rays, dtype=float)
            gr, go = np.meshgrid(rays, pos, indexing="ij")
            pts = np.vstack([[0.0, 0.0], np.stack([gr.ravel(), go.ravel()], axis=1)])
        origin = sp.as_array(sp.default_base())
        r = np.atleast_1d(sp.dist(origin, pts))
        order = np.lexsort(tuple(pts[:, k] for k in range(pts.shape[1] - 1, -1, -1)) + (r,))
        return pts[order]

    def _enumerate(self, n: int) -> np.ndarray:
        seen = set()
        out = []
        L = 1
        while len(out) < n:
            for row in self._level(L):
                key = tuple(row)
                if key not in seen:
                    seen.add(key)
                    out.append(row)
            L += 1
            if L > 40:
                raise InfeasibleError("enumeration depth exceeded")
        return np.array(out[: max(n, len(out))])


def metric_dTheta(space: Space, theta: DenseSequence, m1: MapExpr, m2: MapExpr, N: int) -> Enclosure:
    """``sum_{n <= N} 2^-n min(1, rho(m1 theta_n, m2 theta_n))`` plus the tail interval ``[0, 2^-N]``."""
    if N < 1:
        raise DomainError("N must be at least 1")
    T = theta.points(N)
    gaps = np.minimum(1.0, np.atleast_1d(space.dist(evaluate(space, m1, T), evaluate(space, m2, T))))
    weights = 2.0 ** -np.arange(1, N + 1)
    lo = float(np.sum(weights * gaps))
    return Enclosure(lo, lo + 2.0 ** -N)
