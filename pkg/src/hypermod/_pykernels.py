"""Pure numpy implementations of the batched geometry kernels.

Every function takes C-contiguous float64 arrays of a common leading length
``n`` and returns freshly allocated arrays.  The Cython module ``_ckernels``
exports the same names with the same semantics; :mod:`hypermod.kernels`
picks one of the two at import time.
"""

import numpy as np

BACKEND = "python"


# -- euclidean -------------------------------------------------------------

def euclid_dist(P, Q):
    return np.sqrt(np.sum((Q - P) ** 2, axis=1))


def euclid_combine(P, Q, T):
    return P + T[:, None] * (Q - P)


def euclid_ray(O, U, D):
    return O + D[:, None] * U


# -- upper half-plane ------------------------------------------------------

def hp_dist(P, Q):
    dx = Q[:, 0] - P[:, 0]
    dy = Q[:, 1] - P[:, 1]
    return 2.0 * np.arcsinh(np.hypot(dx, dy) / (2.0 * np.sqrt(P[:, 1] * Q[:, 1])))


def _hp_shoot(x1, y1, er, ei, omr, a):
    # Cayley chart centred at (x1, y1): the disk point u = tau * (er + i ei)
    # is pulled back via z = x1 + i y1 (1 + u) / (1 - u).
    tau = np.tanh(0.5 * a)
    one_minus_tau = 2.0 / (np.exp(a) + 1.0)
    one_minus_tau_er = one_minus_tau + tau * omr
    ui = tau * ei
    den = one_minus_tau_er ** 2 + ui ** 2
    sech = 1.0 / np.cosh(0.5 * a)
    x = x1 - 2.0 * y1 * ui / den
    y = y1 * sech * sech / den
    return x, y


def hp_combine(P, Q, T):
    T = np.asarray(T, dtype=float)
    swap = T > 0.5
    A = np.where(swap[:, None], Q, P)
    B = np.where(swap[:, None], P, Q)
    t = np.where(swap, 1.0 - T, T)
    x1, y1 = A[:, 0], A[:, 1]
    x2, y2 = B[:, 0], B[:, 1]
    dx = x2 - x1
    dy = y2 - y1
    D = 2.0 * np.arcsinh(np.hypot(dx, dy) / (2.0 * np.sqrt(y1 * y2)))
    re = dx * dx + dy * (y1 + y2)
    im = -2.0 * y1 * dx
    nv = np.hypot(re, im)
    degenerate = nv == 0.0
    nv_safe = np.where(degenerate, 1.0, nv)
    er = np.where(degenerate, 1.0, re / nv_safe)
    ei = np.where(degenerate, 0.0, im / nv_safe)
    with np.errstate(divide="ignore", invalid="ignore"):
        omr_pos = im * im / (nv_safe * (nv_safe + re))
    omr = np.where(re > 0.0, omr_pos, 1.0 - er)
    omr = np.where(degenerate, 0.0, omr)
    x, y = _hp_shoot(x1, y1, er, ei, omr, t * D)
    out = np.empty_like(P)
    out[:, 0] = np.where(degenerate, x1, x)
    out[:, 1] = np.where(degenerate, y1, y)
    return out


def hp_ray(O, A, D):
    sa = np.sin(A)
    ca = np.cos(A)
    er = sa
    ei = -ca
    with np.errstate(divide="ignore", invalid="ignore"):
        omr_pos = ca * ca / (1.0 + sa)
    omr = np.where(sa > 0.0, omr_pos, 1.0 - sa)
    x, y = _hp_shoot(O[:, 0], O[:, 1], er, ei, omr, D)
    out = np.empty_like(O)
    out[:, 0] = x
    out[:, 1] = y
    return out


# -- star tree -------------------------------------------------------------

def _canon(ray, off):
    out = np.empty((ray.shape[0], 2))
    hub = off <= 0.0
    out[:, 0] = np.where(hub, 0.0, ray)
    out[:, 1] = np.where(hub, 0.0, off)
    return out


def star_dist(P, Q):
    same = P[:, 0] == Q[:, 0]
    return np.where(same, np.abs(P[:, 1] - Q[:, 1]), P[:, 1] + Q[:, 1])


def star_combine(P, Q, T):
    r1, a = P[:, 0], P[:, 1]
    r2, b = Q[:, 0], Q[:, 1]
    same = r1 == r2
    w = T * (a + b)
    before_hub = w < a
    ray = np.where(same, r1, np.where(before_hub, r1, r2))
    off = np.where(same, a + T * (b - a), np.where(before_hub, a - w, w - a))
    return _canon(ray, off)


def star_ray(O, J, D):
    r, a = O[:, 0], O[:, 1]
    at_hub = a == 0.0
    outward = r == J
    inward = D < a
    ray = np.where(at_hub | outward, J, np.where(inward, r, J))
    off = np.where(at_hub, D, np.where(outward, a + D, np.where(inward, a - D, D - a)))
    return _canon(ray, off)
