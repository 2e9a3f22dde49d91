"""Bound state in the continuum of the emitter pair plus bath.

A bound state with energy ``e0`` inside the band exists when the
symmetric (``plus``) or antisymmetric (``minus``) emitter combination
decouples from every bath mode resonant with ``e0``. Its emitter weight
``|C|^2`` fixes the decoherence-free steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .bath import (BathModel, band_edges, degenerate_wavevectors, dispersion, group_velocity_inverse,
                   in_band, spectral_density)
from .emitters import EmitterPair, ground_projector, projector, psi_minus, psi_plus
from .errors import BandEdgeError, QuadratureError, ValidationError
from .quadrature import zone_principal_value, zone_removable

PLUS, MINUS = "plus", "minus"
INTEGER_TOL = 1e-9
CRITERION_TOL = 1e-8


@dataclass(frozen=True)
class DfsReport:
    exists: bool
    branch_sign: str | None = None
    l: int | None = None
    e0: float | None = None
    weight_c2: float = 0.0
    method: str = ""
    note: str = ""
    candidates: tuple = field(default=(), repr=False)

    @property
    def steady_population(self) -> float:
        return self.weight_c2**2 / 2 if self.exists else 0.0

    @property
    def steady_concurrence(self) -> float:
        return self.weight_c2**2 / 2 if self.exists else 0.0

    def as_dict(self) -> dict:
        return {
            "exists": self.exists,
            "branch_sign": self.branch_sign,
            "l": self.l,
            "e0": self.e0,
            "weight_c2": self.weight_c2 if self.exists else None,
            "steady_population": self.steady_population,
            "steady_concurrence": self.steady_concurrence,
            "method": self.method,
            "note": self.note,
        }


def branch_for_parity(l: int) -> str:
    return PLUS if l % 2 else MINUS


def interference_factor(sign: str, R: float):
    """``k -> 1 + cos(kR)`` (plus) or ``1 - cos(kR)`` (minus), written without cancellation."""
    if sign == PLUS:
        return lambda k: 2 * np.cos(0.5 * k * R) ** 2
    if sign == MINUS:
        return lambda k: 2 * np.sin(0.5 * k * R) ** 2
    raise ValidationError(f"unknown branch sign {sign!r}")


def closed_form_weight(bath: BathModel, em: EmitterPair) -> float:
    """Nearest-neighbour emitter weight ``[1 + g^2 |dm| / (4 xi^2 - (omega0 - omega_c)^2)]^-1``."""
    denom = 4 * bath.xi**2 - (em.omega0 - bath.omega_c) ** 2
    if denom <= 0:
        raise BandEdgeError(f"omega0={em.omega0} is not inside the band")
    return 1.0 / (1.0 + em.g**2 * abs(em.separation) / denom)


def _closed_form(bath: BathModel, em: EmitterPair, tol: float) -> DfsReport:
    if not in_band(bath, em.omega0):
        return DfsReport(False, method="closed", note="omega0 outside the open band")
    x = (em.omega0 - bath.omega_c) / (2 * bath.xi)
    ratio = abs(em.separation) * math.acos(x) / math.pi
    l = int(round(ratio))
    if abs(ratio - l) > tol * max(1.0, ratio):
        return DfsReport(False, method="closed", note=f"k R / pi = {ratio:.12g} is not an integer")
    return DfsReport(True, branch_for_parity(l), l, em.omega0, closed_form_weight(bath, em),
                     method="closed")


def eigenvalue_residual(bath: BathModel, em: EmitterPair, energy: float, sign: str) -> float:
    """Real part of ``E - omega0 - sum_k g_k^2 (1 +/- cos kR) / (E - omega_k)`` in the continuum."""
    pref = em.g**2 * bath.x0 / (2 * math.pi)
    h = interference_factor(sign, em.separation * bath.x0)
    return energy - em.omega0 + pref * zone_principal_value(bath, h, energy)


def _scan_energies(bath: BathModel, n: int, margin: float):
    lo, hi = band_edges(bath)
    width = hi - lo
    grid = np.linspace(lo + margin * width, hi - margin * width, n)
    # interior van Hove energies of multi-branch dispersions
    crit = [dispersion(bath, 0.0), dispersion(bath, math.pi / bath.x0)]
    keep = np.ones(n, dtype=bool)
    for c in crit:
        if lo < c < hi:
            keep &= np.abs(grid - c) > margin * width
    return grid[keep]


def _generic(bath: BathModel, em: EmitterPair, n_scan: int, margin: float, tol: float) -> DfsReport:
    if not in_band(bath, em.omega0):
        return DfsReport(False, method="generic", note="omega0 outside the open band")
    R = em.separation * bath.x0
    energies = _scan_energies(bath, n_scan, margin)
    passing, rejected = [], []
    for sign in (PLUS, MINUS):

        def resid(e, sign=sign):
            return eigenvalue_residual(bath, em, e, sign)

        vals = []
        for e in energies:
            try:
                vals.append(resid(e))
            except (BandEdgeError, QuadratureError):
                vals.append(np.nan)
        vals = np.array(vals)
        for i in range(len(energies) - 1):
            a, b = vals[i], vals[i + 1]
            if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
                continue
            if a == 0:
                root = energies[i]
            else:
                try:
                    root = optimize.brentq(resid, energies[i], energies[i + 1], xtol=1e-13, rtol=1e-15)
                except (BandEdgeError, QuadratureError):
                    continue
            try:
                if abs(resid(root)) > 1e-9:
                    continue  # sign change across a divergence, not a root
            except (BandEdgeError, QuadratureError):
                continue
            ks = degenerate_wavevectors(bath, root)
            ratios = ks * R / math.pi
            h = interference_factor(sign, R)(ks)
            ok = ks.size > 0 and bool(np.all(h < CRITERION_TOL))
            entry = (sign, float(root), tuple(float(r) for r in ratios))
            (passing if ok else rejected).append(entry)

    if not passing:
        return DfsReport(False, method="generic", candidates=tuple(rejected),
                         note=f"{len(rejected)} real root(s) of the eigenvalue equation, none decoupled")
    # prefer the candidate whose branch agrees with the parity of l
    chosen = None
    for sign, root, ratios in passing:
        pos = [r for r in ratios if r >= 0] or [abs(r) for r in ratios]
        l = int(round(min(pos)))
        if branch_for_parity(l) == sign and abs(min(pos) - l) <= tol * max(1.0, l) + 1e-6:
            chosen = (sign, root, l)
            break
    if chosen is None:
        return DfsReport(False, method="generic", candidates=tuple(passing + rejected),
                         note="decoupled root has inconsistent parity")
    sign, root, l = chosen
    weight = weight_integral(bath, em, root, sign)
    others = tuple(c for c in passing + rejected if c[1] != root)
    return DfsReport(True, sign, l, root, weight, method="generic", candidates=others)


def bic_solve(bath: BathModel, em: EmitterPair, method: str = "auto", tol: float = INTEGER_TOL,
              n_scan: int = 401, margin: float = 1e-3) -> DfsReport:
    """Find the bound state in the continuum, if any.

    ``method="closed"`` uses the exact nearest-neighbour result
    (``e0 = omega0``); ``"generic"`` root-finds the principal-value
    eigenvalue equation on a scan of the band and keeps roots whose
    interference factor vanishes at every resonant wavevector. ``"auto"``
    picks ``closed`` for nearest-neighbour baths.
    """
    if method == "auto":
        method = "closed" if bath.is_nearest_neighbor else "generic"
    if method == "closed":
        if not bath.is_nearest_neighbor:
            raise ValidationError("closed-form solution only applies to nearest-neighbour baths")
        return _closed_form(bath, em, tol)
    if method == "generic":
        return _generic(bath, em, n_scan, margin, tol)
    raise ValidationError(f"unknown method {method!r}")


def weight_integral(bath: BathModel, em: EmitterPair, e0: float, sign: str) -> float:
    """Emitter weight from normalisation of the bound state, by quadrature.

    Raises :class:`SingularIntegrandError` when the interference factor does
    not vanish at the resonant wavevectors of ``e0``.
    """
    R = em.separation * bath.x0
    h = interference_factor(sign, R)
    s = 1.0 if sign == PLUS else -1.0

    def curvature(k):
        return -s * R**2 * np.cos(k * R)

    pref = em.g**2 * bath.x0 / (2 * math.pi)
    integral = zone_removable(bath, h, e0, curvature)
    return 1.0 / (1.0 + pref * integral)


def asymptotic_weight(bath: BathModel, e0: float, separation_R: float, g: float) -> float:
    """Large-separation weight ``[J(e0) pi |dk/domega| R]^-1``."""
    if separation_R <= 0:
        raise ValidationError("separation must be positive")
    alpha = group_velocity_inverse(bath, e0)
    return 1.0 / (spectral_density(bath, e0, g) * math.pi * alpha * separation_R)


def dfs_density_matrix(report: DfsReport) -> np.ndarray:
    """``|C|^2 |Psi_+-><Psi_+-| + (1 - |C|^2) |0,0><0,0|`` in the sector basis."""
    if not report.exists:
        raise ValidationError("no bound state: the decoherence-free state does not exist")
    ket = psi_plus() if report.branch_sign == PLUS else psi_minus()
    c2 = report.weight_c2
    return c2 * projector(ket) + (1 - c2) * ground_projector()
