"""Brillouin-zone quadratures with singular points on the dispersion surface.

Both routines integrate over one period in k and split the zone into
windows centred on the roots of ``dispersion(k) = energy`` plus regular
arcs between them. Inside a window nodes are mirrored about the root, so
the odd part of a simple pole cancels node by node.
"""

from __future__ import annotations

import math

import numpy as np

from .bath import (BathModel, degenerate_wavevectors, dispersion, dispersion_difference,
                   dispersion_slope)
from .errors import BandEdgeError, QuadratureError, SingularIntegrandError

MAX_PANEL = math.pi / 8
REMOVABLE_WINDOW = 1e-4


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panels(a, b, max_len=MAX_PANEL):
    m = max(1, int(math.ceil((b - a) / max_len)))
    edges = np.linspace(a, b, m + 1)
    return list(zip(edges[:-1], edges[1:]))


def _layout(roots, period):
    """Window half-widths and the regular arcs left between windows."""
    r = np.sort(roots)
    if r.size == 1:
        half = np.array([period / 4])
    else:
        gaps = np.diff(np.concatenate([r, [r[0] + period]]))
        left = np.roll(gaps, 1)
        half = 0.5 * np.minimum(gaps, left)
        half = np.minimum(half, period / 8)
    arcs = []
    for i in range(r.size):
        start = r[i] + half[i]
        nxt = r[(i + 1) % r.size] + (period if i == r.size - 1 else 0.0)
        end = nxt - half[(i + 1) % r.size]
        if end - start > 1e-14:
            arcs.append((start, end))
    return r, half, arcs


def _regular(fun, arcs, n):
    x, w = _gl(n)
    total = 0.0
    for a, b in arcs:
        for pa, pb in _panels(a, b):
            mid, rad = 0.5 * (pa + pb), 0.5 * (pb - pa)
            total = total + rad * np.dot(w, fun(mid + rad * x))
    return total


def zone_principal_value(bath: BathModel, numerator, energy: float, tol: float = 1e-13,
                         fail_tol: float = 1e-8, n_start: int = 16, n_max: int = 256):
    """PV of the integral of ``numerator(k) / (dispersion(k) - energy)`` over one zone.

    ``numerator`` must be vectorised and smooth. Gauss-Legendre orders are
    doubled until two successive estimates agree to ``tol``; if the last
    change still exceeds ``fail_tol`` a :class:`QuadratureError` is raised.
    """
    period = 2 * math.pi / bath.x0
    roots = degenerate_wavevectors(bath, energy)
    if roots.size and np.any(np.abs(dispersion_slope(bath, roots)) < 1e-9):
        raise BandEdgeError(f"energy {energy} sits on a band extremum")

    def fun(k):
        return numerator(k) / (dispersion(bath, k) - energy)

    if roots.size == 0:
        arcs = [(-math.pi / bath.x0, math.pi / bath.x0)]
        r = half = np.empty(0)
    else:
        r, half, arcs = _layout(roots, period)

    def estimate(n):
        total = _regular(fun, arcs, n)
        x, w = _gl(n)
        for kj, hw in zip(r, half):
            u = 0.5 * hw * (x + 1)
            kp, km = kj + u, kj - u
            paired = (numerator(kp) / dispersion_difference(bath, kp, kj)
                      + numerator(km) / dispersion_difference(bath, km, kj))
            total = total + 0.5 * hw * np.dot(w, paired)
        return total

    prev = estimate(n_start)
    n = n_start
    change = math.inf
    while n < n_max:
        n *= 2
        cur = estimate(n)
        change = abs(cur - prev)
        prev = cur
        if change <= tol * max(1.0, abs(cur)):
            return cur
    if change > fail_tol:
        raise QuadratureError(f"principal value unstable on refinement (change {change:.3e})")
    return prev


def zone_removable(bath: BathModel, numerator, energy: float, curvature, tol: float = 1e-13,
                   window: float = REMOVABLE_WINDOW, n_start: int = 16, n_max: int = 256,
                   zero_tol: float = 1e-8):
    """Integral of ``numerator(k) / (energy - dispersion(k))**2`` over one zone.

    The numerator must vanish to second order at every root ``k_j`` of
    ``dispersion(k) = energy``; ``curvature(k_j)`` returns its second
    derivative there. A window of half-width ``window`` around each root is
    replaced by its Taylor limit ``curvature / (2 slope**2)``.
    """
    period = 2 * math.pi / bath.x0
    roots = degenerate_wavevectors(bath, energy)
    slopes = dispersion_slope(bath, roots) if roots.size else np.empty(0)
    if roots.size and np.any(np.abs(slopes) < 1e-9):
        raise BandEdgeError(f"energy {energy} sits on a band extremum")
    if roots.size and np.any(np.abs(numerator(roots)) > zero_tol):
        raise SingularIntegrandError(
            f"numerator does not vanish at the resonant wavevectors of energy {energy}")

    def fun(k):
        return numerator(k) / (energy - dispersion(bath, k)) ** 2

    if roots.size == 0:
        arcs = [(-math.pi / bath.x0, math.pi / bath.x0)]
        r = half = np.empty(0)
        limits = np.empty(0)
    else:
        r, half, arcs = _layout(roots, period)
        order = np.argsort(roots)
        limits = curvature(r) / (2 * slopes[order] ** 2)

    def estimate(n):
        total = _regular(fun, arcs, n)
        x, w = _gl(n)
        for kj, hw, lim in zip(r, half, limits):
            inner = min(window, 0.5 * hw)
            u = inner + 0.5 * (hw - inner) * (x + 1)
            kp, km = kj + u, kj - u
            paired = (numerator(kp) / dispersion_difference(bath, kp, kj) ** 2
                      + numerator(km) / dispersion_difference(bath, km, kj) ** 2)
            total += 0.5 * (hw - inner) * np.dot(w, paired)
            total += 2 * inner * lim
        return total

    prev = estimate(n_start)
    n = n_start
    change = math.inf
    while n < n_max:
        n *= 2
        cur = estimate(n)
        change = abs(cur - prev)
        prev = cur
        if change <= tol * max(1.0, abs(cur)):
            return cur
    if change > 1e-8:
        raise QuadratureError(f"weight integral unstable on refinement (change {change:.3e})")
    return prev
