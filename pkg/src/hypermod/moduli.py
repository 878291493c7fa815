"""Concave moduli of continuity and the scalar searches built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, InfeasibleError, MisuseError

VARIANTS = ("linear", "power", "truncated_linear", "bounded_exp", "piecewise_linear_concave")

_MAX_DOUBLINGS = 2000
_BISECTIONS = 64


@dataclass(frozen=True)
class Modulus:
    """A concave, nondecreasing, nonzero function with ``omega(0) = 0``.

    Use the classmethod constructors; they validate parameters.  ``params``
    holds the variant's numbers (for the piecewise variant, a tuple of
    ``(s, omega(s))`` nodes starting at the origin).
    """

    variant: str
    params: tuple
    sup: float

    # -- constructors ----------------------------------------------------
    @classmethod
    def linear(cls, c: float = 1.0) -> "Modulus":
        if not c > 0:
            raise DomainError("linear modulus needs c > 0")
        return cls("linear", (float(c),), math.inf)

    @classmethod
    def power(cls, c: float, alpha: float) -> "Modulus":
        if not c > 0 or not 0 < alpha <= 1:
            raise DomainError("power modulus needs c > 0 and alpha in (0, 1]")
        return cls("power", (float(c), float(alpha)), math.inf)

    @classmethod
    def truncated_linear(cls, c: float, omega_sup: float) -> "Modulus":
        if not c > 0 or not omega_sup > 0:
            raise DomainError("truncated_linear needs c > 0 and a positive cap")
        return cls("truncated_linear", (float(c), float(omega_sup)), float(omega_sup))

    @classmethod
    def bounded_exp(cls, omega_sup: float, tau: float) -> "Modulus":
        if not omega_sup > 0 or not tau > 0:
            raise DomainError("bounded_exp needs a positive cap and tau > 0")
        return cls("bounded_exp", (float(omega_sup), float(tau)), float(omega_sup))

    @classmethod
    def piecewise(cls, nodes, validate: bool = True) -> "Modulus":
        """Piecewise-linear modulus through ``nodes``; the last slope continues to infinity.

        With ``validate=False`` no concavity checks are made, which is only
        useful for building deliberately broken inputs.
        """
        pts = sorted((float(s), float(w)) for s, w in nodes)
        if not pts or pts[0] != (0.0, 0.0):
            if pts and pts[0][0] == 0.0:
                raise DomainError("piecewise modulus must vanish at 0")
            pts.insert(0, (0.0, 0.0))
        if len(pts) < 2:
            raise DomainError("piecewise modulus needs at least one node besides the origin")
        s = np.array([p[0] for p in pts])
        w = np.array([p[1] for p in pts])
        if np.any(np.diff(s) <= 0):
            raise DomainError("piecewise nodes need distinct abscissae")
        slopes = np.diff(w) / np.diff(s)
        if validate:
            if slopes[0] <= 0:
                raise DomainError("modulus must be nonzero near 0")
            if np.any(slopes < 0):
                raise DomainError("modulus must be nondecreasing")
            if np.any(np.diff(slopes) > 1e-12 * np.maximum(1.0, np.abs(slopes[:-1]))):
                raise DomainError("modulus must be concave (slopes nonincreasing)")
            # merge nodes between equal slopes
            keep = [0]
            for i in range(1, len(pts) - 1):
                if not math.isclose(slopes[i - 1], slopes[i], rel_tol=1e-12, abs_tol=0.0):
                    keep.append(i)
            keep.append(len(pts) - 1)
            pts = [pts[i] for i in keep]
            slopes = np.diff([p[1] for p in pts]) / np.diff([p[0] for p in pts])
        sup = pts[-1][1] if slopes[-1] == 0 else math.inf
        return cls("piecewise_linear_concave", tuple(pts), float(sup))

    # -- evaluation ------------------------------------------------------
    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        v = self.variant
        p = self.params
        if v == "linear":
            out = p[0] * s
        elif v == "power":
            out = p[0] * np.power(s, p[1])
        elif v == "truncated_linear":
            out = np.minimum(p[0] * s, p[1])
        elif v == "bounded_exp":
            out = -p[0] * np.expm1(-s / p[1])
        else:
            xs = np.array([q[0] for q in p])
            ys = np.array([q[1] for q in p])
            last_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            out = np.where(s <= xs[-1], np.interp(s, xs, ys), ys[-1] + last_slope * (s - xs[-1]))
        return out if out.ndim else float(out)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        v, p = self.variant, self.params
        if v == "linear":
            return {"variant": v, "c": p[0]}
        if v == "power":
            return {"variant": v, "c": p[0], "alpha": p[1]}
        if v == "truncated_linear":
            return {"variant": v, "c": p[0], "Omega": p[1]}
        if v == "bounded_exp":
            return {"variant": v, "Omega": p[0], "tau": p[1]}
        return {"variant": v, "nodes": [list(q) for q in p]}

    @classmethod
    def from_json(cls, data: dict) -> "Modulus":
        return modulus_from_config(data)


def _parse_nodes(nodes):
    if isinstance(nodes, str):
        rows = [r for r in nodes.replace(";", "\n").splitlines() if r.strip()]
        return [tuple(float(x) for x in r.split(",")) for r in rows]
    return [tuple(float(x) for x in r) for r in nodes]


def modulus_from_config(spec: dict, validate: bool = True) -> Modulus:
    """Build a modulus from ``{"variant": name, ...parameters}``."""
    spec = dict(spec)
    v = spec.get("variant")
    try:
        if v == "linear":
            return Modulus.linear(spec.get("c", 1.0))
        if v == "power":
            return Modulus.power(spec.get("c", 1.0), spec["alpha"])
        if v == "truncated_linear":
            return Modulus.truncated_linear(spec.get("c", 1.0), spec["Omega"])
        if v == "bounded_exp":
            return Modulus.bounded_exp(spec["Omega"], spec.get("tau", 1.0))
        if v == "piecewise_linear_concave":
            return Modulus.piecewise(_parse_nodes(spec["nodes"]), validate=validate)
    except KeyError as exc:
        raise ConfigError(f"modulus {v!r} is missing parameter {exc.args[0]!r}") from None
    raise ConfigError(f"unknown modulus variant {v!r}; expected one of {VARIANTS}")


def eval_modulus(omega: Modulus, s):
    if np.any(np.asarray(s) < 0):
        raise DomainError("moduli are defined on [0, inf)")
    return omega(s)


def check_concavity_scaling(omega: Modulus, lam: float, s: float) -> bool:
    """Whether ``omega(lam * s) <= lam * omega(s)``, which concavity guarantees for lam >= 1."""
    if lam < 1:
        raise DomainError("scaling factor must be at least 1")
    if s < 0:
        raise DomainError("moduli are defined on [0, inf)")
    rhs = lam * omega(s)
    return bool(omega(lam * s) <= rhs + 1e-12 * max(1.0, abs(rhs)))


def smallest_argument_reaching(omega: Modulus, target: float) -> float:
    """An ``s`` with ``omega(s) >= target``, within one bisection step of the smallest.

    Doubling from 1 brackets the level, then 64 bisection steps shrink the
    bracket; the upper end, which always satisfies the inequality, is returned.
    """
    if target <= 0:
        return 0.0
    hi = 1.0
    for _ in range(_MAX_DOUBLINGS):
        if omega(hi) >= target:
            break
        hi *= 2.0
    else:
        raise InfeasibleError(f"modulus never reaches {target!r}")
    lo = 0.0 if hi == 1.0 else hi / 2.0
    for _ in range(_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if omega(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def find_M(omega: Modulus, k: float, lam: float) -> float:
    """``M > 0`` with ``omega(M) >= k / lam``.

    For nondecreasing ``omega`` this yields
    ``omega(M + s) >= k + (1 - lam) * omega(s)`` for every ``s >= 0``.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    target = k / lam
    if omega.sup < target or (omega.variant == "bounded_exp" and omega.sup <= target):
        raise InfeasibleError(f"bounded modulus (sup {omega.sup}) never reaches k/lambda = {target}")
    return smallest_argument_reaching(omega, target)


def find_sprime(omega: Modulus, t: float, guard: float = 0.5) -> float:
    """``s' > 0`` with ``omega(s') >= (1 - guard * t) * sup(omega)`` for bounded ``omega``."""
    if not omega.bounded:
        raise MisuseError("find_sprime needs a bounded modulus")
    if not 0 < t < 1:
        raise DomainError("t must lie in (0, 1)")
    if not 0 < guard <= 1:
        raise DomainError("guard must lie in (0, 1]")
    return smallest_argument_reaching(omega, (1.0 - guard * t) * omega.sup)
