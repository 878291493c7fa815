"""Unbounded hyperbolic metric spaces with a coherent system of geodesics.

Three models are provided:

* ``euclidean`` -- R^d with affine segments.
* ``poincare_half_plane`` -- the upper half-plane with curvature -1; geodesic
  combinations are computed in the Cayley chart centred at the start point,
  where geodesics through the centre are straight radii.
* ``star_tree`` -- a star of isometric rays glued at a hub; points are
  ``(ray_index, offset)`` and segments between different rays pass through
  the hub.

All batch methods on :class:`Space` take arrays of shape ``(n, k)`` (or a
single ``(k,)`` row, which is broadcast) and are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import kernels
from .errors import DomainError, MisuseError

MODEL_TAGS = ("euclidean", "poincare_half_plane", "star_tree")


@dataclass(frozen=True)
class Point:
    model_tag: str
    coords: tuple

    def to_json(self) -> dict:
        return {"model": self.model_tag, "coords": [float(c) for c in self.coords]}

    @classmethod
    def from_json(cls, data: dict) -> "Point":
        return cls(data["model"], tuple(float(c) for c in data["coords"]))


@dataclass(frozen=True)
class Ray:
    """Geodesic ray ``d -> ray_point(space, ray, d)`` leaving ``origin``.

    ``direction`` is a unit vector (euclidean), a tangent angle in radians with
    ``pi/2`` pointing straight up (half-plane) or a ray index (star tree).
    """

    origin: Point
    direction: tuple


def _as_rows(arr) -> tuple[np.ndarray, bool]:
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        return a[None, :], True
    return a, False


class Space:
    """Base class; concrete models override the batch kernels."""

    model_tag: str = ""
    coord_dim: int = 0

    def __init__(self, base_point=None):
        if base_point is None:
            base_point = self.default_base()
        self.base_point = self.point(*base_point.coords) if isinstance(base_point, Point) else self.point(*base_point)

    # -- conversion ------------------------------------------------------
    def default_base(self) -> Point:
        raise NotImplementedError

    def point(self, *coords) -> Point:
        row = self.validate(np.asarray(coords, dtype=float)[None, :])[0]
        return Point(self.model_tag, tuple(float(c) for c in row))

    def to_point(self, row) -> Point:
        return Point(self.model_tag, tuple(float(c) for c in np.asarray(row, dtype=float)))

    def as_array(self, pts) -> np.ndarray:
        """Return ``pts`` (a Point, a list of Points or an array) as validated rows."""
        if isinstance(pts, Point):
            if pts.model_tag != self.model_tag:
                raise DomainError(f"point of model {pts.model_tag!r} used in {self.model_tag!r}")
            return self.validate(np.asarray(pts.coords, dtype=float)[None, :])
        if isinstance(pts, (list, tuple)) and pts and isinstance(pts[0], Point):
            return np.vstack([self.as_array(p) for p in pts])
        a, _ = _as_rows(pts)
        return self.validate(a)

    def validate(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.coord_dim:
            raise DomainError(f"{self.model_tag} points need {self.coord_dim} coordinates, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise DomainError("non-finite coordinates")
        return rows

    # -- batch kernels ---------------------------------------------------
    def _broadcast(self, P, Q):
        P, p1 = _as_rows(P)
        Q, q1 = _as_rows(Q)
        n = max(P.shape[0], Q.shape[0])
        P = np.ascontiguousarray(np.broadcast_to(P, (n, self.coord_dim)))
        Q = np.ascontiguousarray(np.broadcast_to(Q, (n, self.coord_dim)))
        return P, Q, n, p1 and q1

    def dist(self, P, Q) -> np.ndarray:
        P, Q, n, single = self._broadcast(P, Q)
        out = self._dist(P, Q)
        return out[0] if single else out

    def combine(self, P, Q, t) -> np.ndarray:
        """``(1-t) P (+) t Q``: the point at fraction ``t`` along the geodesic P -> Q."""
        P, p1 = _as_rows(P)
        Q, q1 = _as_rows(Q)
        T = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(T < 0.0) or np.any(T > 1.0) or not np.all(np.isfinite(T)):
            raise DomainError("combination parameter must lie in [0, 1]")
        n = max(P.shape[0], Q.shape[0], T.shape[0])
        P = np.ascontiguousarray(np.broadcast_to(P, (n, self.coord_dim)))
        Q = np.ascontiguousarray(np.broadcast_to(Q, (n, self.coord_dim)))
        T = np.ascontiguousarray(np.broadcast_to(T, (n,)))
        out = self._combine(P, Q, T)
        return out[0] if p1 and q1 and n == 1 and np.ndim(t) == 0 else out

    def ray_point(self, origin, direction, d) -> np.ndarray:
        O, single = _as_rows(origin)
        Dd = np.atleast_1d(np.asarray(d, dtype=float))
        if np.any(Dd < 0.0):
            raise DomainError("ray parameter must be nonnegative")
        dirs = self._direction_rows(direction)
        n = max(O.shape[0], Dd.shape[0], dirs.shape[0])
        O = np.ascontiguousarray(np.broadcast_to(O, (n, self.coord_dim)))
        Dd = np.ascontiguousarray(np.broadcast_to(Dd, (n,)))
        dirs = np.ascontiguousarray(np.broadcast_to(dirs, (n,) + dirs.shape[1:]))
        out = self._ray(O, dirs, Dd)
        return out[0] if single and n == 1 else out

    # model hooks
    def _dist(self, P, Q):
        raise NotImplementedError

    def _combine(self, P, Q, T):
        raise NotImplementedError

    def _ray(self, O, dirs, D):
        raise NotImplementedError

    def _direction_rows(self, direction):
        raise NotImplementedError

    def random_directions(self, rng: np.random.Generator, n: int):
        raise NotImplementedError

    def default_direction(self):
        raise NotImplementedError

    def ray_from(self, origin, direction=None) -> Ray:
        if direction is None:
            direction = self.default_direction()
        origin = origin if isinstance(origin, Point) else self.to_point(origin)
        return Ray(origin, tuple(np.atleast_1d(np.asarray(direction, dtype=float)).tolist()))

    # -- sampling and nets -----------------------------------------------
    def _radial_law(self, u: np.ndarray) -> np.ndarray:
        return u

    def sample_ball(self, center, radius: float, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` points of the closed ball ``B(center, radius)``.

        Points are ``ray_point(center, u, radius * law(U))`` with a uniformly
        random direction ``u``; every open sub-ball is hit with positive
        probability.
        """
        if radius < 0:
            raise DomainError("radius must be nonnegative")
        C = self.as_array(center)
        if radius == 0:
            return np.repeat(C, n, axis=0)
        d = radius * self._radial_law(rng.random(n))
        pts = self.ray_point(C, self.random_directions(rng, n), d)
        return np.atleast_2d(pts)

    def clamp_to_ball(self, center, P, radius: float) -> np.ndarray:
        """Nearest-point projection of ``P`` onto the closed ball ``B(center, radius)``."""
        C = self.as_array(center)
        P, _ = _as_rows(P)
        r = self.dist(C, P)
        r = np.atleast_1d(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(r > radius, radius / np.where(r > 0, r, 1.0), 1.0)
        out = self.combine(np.broadcast_to(C, P.shape), P, lam)
        out = np.atleast_2d(out)
        return np.where((r <= radius)[:, None], P, out)

    def net(self, center, radius: float, mesh: float) -> np.ndarray:
        """Finite set whose ``mesh``-neighbourhood covers ``B(center, radius)``."""
        raise NotImplementedError

    def describe(self) -> dict:
        return {"model": self.model_tag, "base_point": list(self.base_point.coords)}

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class Euclidean(Space):
    model_tag = "euclidean"

    def __init__(self, dimension: int = 1, base_point=None):
        if int(dimension) < 1:
            raise DomainError("dimension must be at least 1")
        self.dimension = int(dimension)
        self.coord_dim = self.dimension
        super().__init__(base_point)

    def default_base(self):
        return Point(self.model_tag, (0.0,) * self.dimension)

    def _dist(self, P, Q):
        return kernels.euclid_dist(P, Q)

    def _combine(self, P, Q, T):
        return kernels.euclid_combine(P, Q, T)

    def _ray(self, O, dirs, D):
        return kernels.euclid_ray(O, dirs, D)

    def _direction_rows(self, direction):
        U, _ = _as_rows(direction)
        if U.shape[1] != self.dimension:
            raise DomainError("direction dimension mismatch")
        norms = np.linalg.norm(U, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise DomainError("zero direction vector")
        return U / norms

    def random_directions(self, rng, n):
        g = rng.standard_normal((n, self.dimension))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def default_direction(self):
        return np.eye(self.dimension)[0]

    def _radial_law(self, u):
        return u ** (1.0 / self.dimension)

    def net(self, center, radius, mesh):
        C = self.as_array(center)[0]
        d = self.dimension
        h = 2.0 * mesh / math.sqrt(d)
        k = int(math.ceil((radius + mesh) / h))
        ticks = np.arange(-k, k + 1) * h
        if d == 1:
            return C + ticks[:, None]
        if (2 * k + 1) ** d > 5_000_000:
            raise MisuseError("net too large; increase mesh")
        grids = np.meshgrid(*([ticks] * d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts = pts[np.linalg.norm(pts, axis=1) <= radius + mesh]
        return C + pts

    def describe(self):
        return {"model": self.model_tag, "dimension": self.dimension, "base_point": list(self.base_point.coords)}


class PoincareHalfPlane(Space):
    model_tag = "poincare_half_plane"
    coord_dim = 2

    def default_base(self):
        return Point(self.model_tag, (0.0, 1.0))

    def validate(self, rows):
        rows = super().validate(rows)
        if np.any(rows[:, 1] <= 0.0):
            raise DomainError("half-plane points need a strictly positive second coordinate")
        return rows

    def _dist(self, P, Q):
        return kernels.hp_dist(P, Q)

    def _combine(self, P, Q, T):
        return kernels.hp_combine(P, Q, T)

    def _ray(self, O, dirs, D):
        return kernels.hp_ray(O, dirs, D)

    def _direction_rows(self, direction):
        return np.atleast_1d(np.asarray(direction, dtype=float)).reshape(-1)

    def random_directions(self, rng, n):
        return rng.uniform(0.0, 2.0 * math.pi, n)

    def default_direction(self):
        return math.pi / 2.0

    def net(self, center, radius, mesh):
        C = self.as_array(center)
        rings = [C]
        n_rings = int(math.ceil(radius / mesh))
        total = 1
        for k in range(1, n_rings + 1):
            r = k * mesh
            m = max(1, int(math.ceil(2.0 * math.pi * math.sinh(r) / mesh)))
            total += m
            if total > 5_000_000:
                raise MisuseError("net too large; increase mesh or reduce radius")
            angles = 2.0 * math.pi * np.arange(m) / m
            rings.append(np.atleast_2d(self.ray_point(C, angles, np.full(m, r))))
        return np.vstack(rings)


class StarTree(Space):
    """Star of rays glued at a hub.

    ``n_rays`` fixes the number of rays; ``None`` allows every nonnegative
    index (samplers then draw ray indices from a geometric law and nets are
    unavailable).
    """

    model_tag = "star_tree"
    coord_dim = 2

    def __init__(self, n_rays: int | None = 3, base_point=None):
        if n_rays is not None and int(n_rays) < 2:
            raise DomainError("a star tree needs at least two rays")
        self.n_rays = None if n_rays is None else int(n_rays)
        super().__init__(base_point)

    def default_base(self):
        return Point(self.model_tag, (0.0, 0.0))

    def validate(self, rows):
        rows = super().validate(rows)
        ray, off = rows[:, 0], rows[:, 1]
        if np.any(off < 0.0):
            raise DomainError("star tree offsets must be nonnegative")
        if np.any(ray < 0.0) or np.any(ray != np.floor(ray)):
            raise DomainError("star tree ray indices must be nonnegative integers")
        if self.n_rays is not None and np.any(ray >= self.n_rays):
            raise DomainError(f"ray index out of range for {self.n_rays} rays")
        rows = rows.copy()
        rows[off == 0.0, 0] = 0.0
        return rows

    def _dist(self, P, Q):
        return kernels.star_dist(P, Q)

    def _combine(self, P, Q, T):
        return kernels.star_combine(P, Q, T)

    def _ray(self, O, dirs, D):
        return kernels.star_ray(O, dirs, D)

    def _direction_rows(self, direction):
        J = np.atleast_1d(np.asarray(direction, dtype=float)).reshape(-1)
        if np.any(J < 0) or np.any(J != np.floor(J)):
            raise DomainError("star tree directions are ray indices")
        if self.n_rays is not None and np.any(J >= self.n_rays):
            raise DomainError("ray index out of range")
        return J

    def random_directions(self, rng, n):
        if self.n_rays is None:
            return (rng.geometric(0.5, n) - 1).astype(float)
        return rng.integers(0, self.n_rays, n).astype(float)

    def default_direction(self):
        return 1.0

    def net(self, center, radius, mesh):
        if self.n_rays is None:
            raise MisuseError("nets need a finite number of rays")
        C = self.as_array(center)
        steps = np.arange(0, int(math.ceil(radius / (2.0 * mesh))) + 1) * 2.0 * mesh
        chunks = [np.atleast_2d(self.ray_point(C, np.full(steps.size, float(j)), steps)) for j in range(self.n_rays)]
        return np.unique(np.vstack(chunks), axis=0)

    def describe(self):
        return {"model": self.model_tag, "n_rays": self.n_rays, "base_point": list(self.base_point.coords)}


# -- functional API on Point values -----------------------------------------

def dist(space: Space, p: Point, q: Point) -> float:
    return float(space.dist(space.as_array(p), space.as_array(q))[0])


def combine(space: Space, p: Point, q: Point, t: float) -> Point:
    if not 0.0 <= t <= 1.0:
        raise DomainError("combination parameter must lie in [0, 1]")
    row = space.combine(space.as_array(p), space.as_array(q), np.array([t]))
    return space.to_point(np.atleast_2d(row)[0])


def ray_point(space: Space, ray: Ray, d: float) -> Point:
    if d < 0:
        raise DomainError("ray parameter must be nonnegative")
    direction = ray.direction if space.model_tag == "euclidean" else ray.direction[0]
    row = space.ray_point(space.as_array(ray.origin), direction, np.array([d]))
    return space.to_point(np.atleast_2d(row)[0])


def sample_ball(space: Space, center: Point, radius: float, rng_seed) -> Point:
    rng = np.random.default_rng(rng_seed)
    return space.to_point(space.sample_ball(center, radius, rng, 1)[0])


def make_space(spec: dict[str, Any] | None = None, **overrides) -> Space:
    """Build a space from a config mapping (``model``, ``dimension``, ``base_point``, ``n_rays``)."""
    spec = dict(spec or {})
    spec.update({k: v for k, v in overrides.items() if v is not None})
    model = spec.get("model", "euclidean")
    base = spec.get("base_point")
    if model == "euclidean":
        return Euclidean(spec.get("dimension", len(base) if base else 1), base)
    if model == "poincare_half_plane":
        return PoincareHalfPlane(base)
    if model == "star_tree":
        n_rays = spec.get("n_rays", 3)
        if n_rays in ("countable", "inf", "infinite"):
            n_rays = None
        return StarTree(n_rays, base)
    raise DomainError(f"unknown model {model!r}; expected one of {MODEL_TAGS}")
