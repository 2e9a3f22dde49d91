"""One-dimensional coupled-cavity-array environments.

Natural units throughout: the bare cavity frequency ``omega_c`` and the
lattice spacing ``x0`` are both 1 unless stated otherwise, and hbar = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import BandEdgeError, ValidationError

# Zone scan resolution for root isolation, in units of 1/x0.
SCAN_STEP = math.pi / 512
ROOT_TOL = 1e-12
# a tangential root is only located to ~sqrt(tol / curvature) in k
TANGENT_MERGE = 1e-6


class BathKind(str, enum.Enum):
    NEAREST_NEIGHBOR = "nn"
    NEXT_NEAREST_NEIGHBOR = "nnn"


@dataclass(frozen=True)
class BathModel:
    """Periodic tight-binding array of ``n_modes`` cavities.

    ``xi`` is the nearest-neighbour hopping and ``xi_prime`` the
    next-nearest-neighbour hopping (zero for the nearest-neighbour kind).
    ``xi_prime`` is signed: a negative value flips the curvature of the
    ``cos(2k)`` term.
    """

    kind: BathKind = BathKind.NEAREST_NEIGHBOR
    xi: float = 0.2
    xi_prime: float = 0.0
    n_modes: int = 1201
    omega_c: float = 1.0
    x0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BathKind(self.kind))
        if int(self.n_modes) != self.n_modes or self.n_modes < 3 or self.n_modes % 2 == 0:
            raise ValidationError(f"n_modes must be an odd integer >= 3, got {self.n_modes}")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        if not self.xi > 0:
            raise ValidationError(f"xi must be positive, got {self.xi}")
        if self.kind is BathKind.NEAREST_NEIGHBOR and self.xi_prime != 0:
            raise ValidationError("a nearest-neighbour bath has xi_prime == 0")
        if not (self.x0 > 0 and math.isfinite(self.omega_c)):
            raise ValidationError("x0 must be positive and omega_c finite")

    @classmethod
    def nearest_neighbor(cls, xi=0.2, n_modes=1201, omega_c=1.0, x0=1.0):
        return cls(BathKind.NEAREST_NEIGHBOR, xi, 0.0, n_modes, omega_c, x0)

    @classmethod
    def next_nearest_neighbor(cls, xi=0.2, xi_prime=0.18, n_modes=1201, omega_c=1.0, x0=1.0):
        return cls(BathKind.NEXT_NEAREST_NEIGHBOR, xi, xi_prime, n_modes, omega_c, x0)

    @property
    def is_nearest_neighbor(self) -> bool:
        return self.kind is BathKind.NEAREST_NEIGHBOR

    def with_modes(self, n_modes: int) -> "BathModel":
        return BathModel(self.kind, self.xi, self.xi_prime, n_modes, self.omega_c, self.x0)


@dataclass(frozen=True)
class ModeGrid:
    wavevectors: np.ndarray
    frequencies: np.ndarray
    coupling_scale: float

    def __len__(self):
        return len(self.wavevectors)


def _reduce_to_zone(k, x0):
    """Map wavevectors into (-pi/x0, pi/x0]."""
    period = 2 * math.pi / x0
    k = np.asarray(k, dtype=float)
    red = k - period * np.floor((k + math.pi / x0) / period)
    # floor maps -pi/x0 to itself; send it to +pi/x0
    return np.where(red <= -math.pi / x0, red + period, red)


def dispersion(bath: BathModel, k):
    """Mode frequency ``omega_c + 2 xi cos(k x0) + 2 xi' cos(2 k x0)``."""
    kx = np.asarray(k, dtype=float) * bath.x0
    w = bath.omega_c + 2 * bath.xi * np.cos(kx)
    if bath.xi_prime:
        w = w + 2 * bath.xi_prime * np.cos(2 * kx)
    return w if w.ndim else float(w)


def dispersion_slope(bath: BathModel, k):
    """Derivative d(omega)/dk."""
    kx = np.asarray(k, dtype=float) * bath.x0
    d = -2 * bath.xi * bath.x0 * np.sin(kx)
    if bath.xi_prime:
        d = d - 4 * bath.xi_prime * bath.x0 * np.sin(2 * kx)
    return d if d.ndim else float(d)


def dispersion_difference(bath: BathModel, k, k_ref):
    """``dispersion(k) - dispersion(k_ref)`` without cancellation near ``k_ref``."""
    k = np.asarray(k, dtype=float)
    s = (k + k_ref) * bath.x0
    d = (k - k_ref) * bath.x0
    out = -4 * bath.xi * np.sin(0.5 * s) * np.sin(0.5 * d)
    if bath.xi_prime:
        out = out - 4 * bath.xi_prime * np.sin(s) * np.sin(d)
    return out if out.ndim else float(out)


def band_edges(bath: BathModel) -> tuple[float, float]:
    """Exact (lower, upper) edges of the continuum band."""
    candidates = [0.0, math.pi / bath.x0]
    if bath.xi_prime:
        c = -bath.xi / (4 * bath.xi_prime)
        if abs(c) <= 1:
            candidates.append(math.acos(c) / bath.x0)
    values = [dispersion(bath, k) for k in candidates]
    return min(values), max(values)


def in_band(bath: BathModel, omega: float, closed: bool = False) -> bool:
    lo, hi = band_edges(bath)
    return lo <= omega <= hi if closed else lo < omega < hi


def mode_grid(bath: BathModel, g: float) -> ModeGrid:
    """Plane-wave modes of the periodic array with per-mode coupling g/sqrt(N)."""
    if g < 0:
        raise ValidationError(f"coupling g must be non-negative, got {g}")
    n = bath.n_modes
    half = (n - 1) // 2
    idx = np.arange(-half, half + 1)
    k = 2 * np.pi * idx / (n * bath.x0)
    return ModeGrid(k, dispersion(bath, k), g / math.sqrt(n))


def _newton_polish(bath, k, omega, steps=3):
    best, fbest = k, abs(dispersion(bath, k) - omega)
    for _ in range(steps):
        slope = dispersion_slope(bath, best)
        if slope == 0:
            break
        cand = best - (dispersion(bath, best) - omega) / slope
        fc = abs(dispersion(bath, cand) - omega)
        if fc >= fbest:
            break
        best, fbest = cand, fc
    return best


def degenerate_wavevectors(bath: BathModel, omega: float, tol: float = ROOT_TOL) -> np.ndarray:
    """All k in the first zone with ``dispersion(k) == omega``.

    Roots are isolated on the continuum dispersion by a uniform scan of the
    zone followed by bisection of every sign change. Tangential roots (band
    extrema) are picked up by a bounded minimisation of ``|f|`` around local
    extrema of the scan.
    """
    if not in_band(bath, omega, closed=True):
        return np.empty(0)
    x0 = bath.x0
    n_scan = int(round(2 * math.pi / SCAN_STEP))
    ks = np.linspace(-math.pi / x0, math.pi / x0, n_scan + 1)
    f = dispersion(bath, ks) - omega

    def fun(k):
        return dispersion(bath, k) - omega

    roots = []
    bracketed = np.zeros(n_scan + 1, dtype=bool)
    on_node = np.abs(f) <= tol
    for i in np.flatnonzero(on_node):
        roots.append(ks[i])
        bracketed[i] = True
    change = np.flatnonzero((f[:-1] * f[1:] < 0) & ~on_node[:-1] & ~on_node[1:])
    for i in change:
        r = optimize.bisect(fun, ks[i], ks[i + 1], xtol=tol / 4, rtol=4 * np.finfo(float).eps)
        roots.append(_newton_polish(bath, r, omega))
        bracketed[i] = bracketed[i + 1] = True

    # tangencies strictly between scan nodes
    df = np.diff(f)
    extrema = np.flatnonzero(df[:-1] * df[1:] < 0) + 1
    for i in extrema:
        if bracketed[i - 1] or bracketed[i] or bracketed[i + 1]:
            continue
        if abs(f[i]) > 0.05 * abs(df[i - 1]) + tol:
            continue  # too far from zero for a tangency in this cell pair
        res = optimize.minimize_scalar(lambda k: abs(fun(k)), bounds=(ks[i - 1], ks[i + 1]),
                                       method="bounded", options={"xatol": 1e-13})
        if abs(res.fun) <= tol:
            roots.append(res.x)

    if not roots:
        return np.empty(0)
    roots = np.sort(_reduce_to_zone(np.array(roots), x0))
    unique = [roots[0]]
    for r in roots[1:]:
        if r - unique[-1] > TANGENT_MERGE:
            unique.append(r)
    # -pi and +pi are the same point
    if (len(unique) > 1 and abs(unique[0] + math.pi / x0) < TANGENT_MERGE
            and abs(unique[-1] - math.pi / x0) < TANGENT_MERGE):
        unique = unique[1:]
    return np.array(unique)


def _check_open_band(bath: BathModel, omega: float):
    if not in_band(bath, omega) or (
            bath.is_nearest_neighbor and 4 * bath.xi**2 - (omega - bath.omega_c) ** 2 <= 0):
        raise BandEdgeError(f"omega={omega} is at or outside the band edge")


def _branch_slopes(bath: BathModel, omega: float) -> tuple[np.ndarray, np.ndarray]:
    _check_open_band(bath, omega)
    ks = degenerate_wavevectors(bath, omega)
    slopes = np.abs(dispersion_slope(bath, ks))
    if ks.size == 0 or np.any(slopes < 1e-9):
        raise BandEdgeError(f"van Hove singularity at omega={omega}")
    return ks, slopes


def spectral_density(bath: BathModel, omega: float, g: float) -> float:
    """Continuum spectral density J(omega) = sum_k g_k^2 delta(omega - omega_k).

    Summed over every branch of the dispersion crossing ``omega``. Raises
    :class:`BandEdgeError` where the density of states diverges.
    """
    if bath.is_nearest_neighbor:
        _check_open_band(bath, omega)
        return g**2 / (math.pi * math.sqrt(4 * bath.xi**2 - (omega - bath.omega_c) ** 2))
    _, slopes = _branch_slopes(bath, omega)
    return float(np.sum(g**2 * bath.x0 / (2 * math.pi * slopes)))


def group_velocity_inverse(bath: BathModel, omega: float) -> float:
    """|dk/domega| on the principal (smallest |k|) branch at ``omega``."""
    if bath.is_nearest_neighbor:
        _check_open_band(bath, omega)
        return 1.0 / (bath.x0 * math.sqrt(4 * bath.xi**2 - (omega - bath.omega_c) ** 2))
    ks, slopes = _branch_slopes(bath, omega)
    return float(1.0 / slopes[np.argmin(np.abs(ks))])
