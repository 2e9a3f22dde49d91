"""Exact non-Markovian dynamics of the emitter amplitudes.

The amplitudes obey a two-component Volterra integro-differential equation
with the bath memory kernel as convolution kernel. It is integrated in a
frame rotating at ``omega0`` with trapezoidal quadrature of the memory
integral and one predictor-corrector pass per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bath import BathModel, dispersion_slope, mode_grid
from .boundstate import MINUS, PLUS, DfsReport, bic_solve, dfs_density_matrix
from .emitters import EmitterPair, ground_projector, sector_ket
from .errors import PoleProximityError, StepSizeError, ValidationError

DEFAULT_STEP = 0.02
STEP_TOL = 1e-6
REVIVAL_FRACTION = 0.4
PROBE_HORIZON = 200.0
_CHUNK = 2048


@dataclass
class MemoryKernel:
    """Bath correlation functions sampled on a uniform grid.

    ``f_same`` and ``f_cross`` are stored in the frame rotating at
    ``omega0``, i.e. multiplied by ``exp(i omega0 t)``.
    """

    t: np.ndarray
    f_same: np.ndarray
    f_cross: np.ndarray
    omega0: float

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    def lab_frame(self) -> tuple[np.ndarray, np.ndarray]:
        phase = np.exp(-1j * self.omega0 * self.t)
        return self.f_same * phase, self.f_cross * phase


@dataclass
class Trajectory:
    t: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def population(self) -> np.ndarray:
        return np.abs(self.alpha1) ** 2 + np.abs(self.alpha2) ** 2

    @property
    def concurrence(self) -> np.ndarray:
        return 2 * np.abs(self.alpha1 * self.alpha2)


@dataclass(frozen=True)
class PoleAnalysis:
    found: bool
    pole_energy: float | None = None
    residue1: complex = 0j
    residue2: complex = 0j
    branch_sign: str | None = None
    refinement_change: float = 0.0
    probed: tuple = ()


def _uniform_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValidationError("time grid needs at least two samples")
    if t[0] != 0:
        raise ValidationError("time grid must start at t = 0")
    h = t[1] - t[0]
    if h <= 0 or np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, h):
        raise ValidationError("time grid must be uniform with positive step")
    return t


def memory_kernel(bath: BathModel, em: EmitterPair, t_grid) -> MemoryKernel:
    """Mode sums ``(g^2/N) sum_k exp(-i (omega_k - omega0) t + i k dm x0)``.

    Modes ``+k`` and ``-k`` are summed as pairs so that the cross kernel is
    an exactly even function of the separation.
    """
    t = _uniform_grid(t_grid)
    grid = mode_grid(bath, em.g)
    n = bath.n_modes
    half = (n - 1) // 2
    k = grid.wavevectors[half:]  # k >= 0
    detuning = grid.frequencies[half:] - em.omega0
    mult = np.full(k.size, 2.0)
    mult[0] = 1.0
    w_same = mult * grid.coupling_scale**2
    w_cross = w_same * np.cos(k * em.separation * bath.x0)
    f_same = np.empty(t.size, dtype=complex)
    f_cross = np.empty(t.size, dtype=complex)
    for a in range(0, t.size, _CHUNK):
        b = min(a + _CHUNK, t.size)
        ph = np.exp(-1j * np.outer(t[a:b], detuning))
        f_same[a:b] = ph @ w_same
        f_cross[a:b] = ph @ w_cross
    return MemoryKernel(t, f_same, f_cross, em.omega0)


def _volterra_coupled(k_same, k_cross, y0, h):
    """Trapezoidal PECE for y' = -int_0^t K(t - s) y(s) ds with K = [[a, b], [b, a]]."""
    T = k_same.size
    ra, rb = k_same[::-1].copy(), k_cross[::-1].copy()
    y1 = np.zeros(T, dtype=complex)
    y2 = np.zeros(T, dtype=complex)
    y1[0], y2[0] = y0
    a0, b0 = k_same[0], k_cross[0]
    z1 = z2 = 0j
    hh = 0.5 * h
    for n in range(T - 1):
        lo, hi = T - 1 - n, T - 1
        # history part of z_{n+1}: trapezoid end weight at s = 0, interior weights 1
        s1 = hh * (k_same[n + 1] * y1[0] + k_cross[n + 1] * y2[0])
        s2 = hh * (k_cross[n + 1] * y1[0] + k_same[n + 1] * y2[0])
        if n:
            s1 += h * (np.dot(ra[lo:hi], y1[1:n + 1]) + np.dot(rb[lo:hi], y2[1:n + 1]))
            s2 += h * (np.dot(rb[lo:hi], y1[1:n + 1]) + np.dot(ra[lo:hi], y2[1:n + 1]))
        # predictor
        p1 = y1[n] - h * z1
        p2 = y2[n] - h * z2
        # corrector
        q1 = s1 + hh * (a0 * p1 + b0 * p2)
        q2 = s2 + hh * (b0 * p1 + a0 * p2)
        y1[n + 1] = y1[n] - hh * (z1 + q1)
        y2[n + 1] = y2[n] - hh * (z2 + q2)
        z1 = s1 + hh * (a0 * y1[n + 1] + b0 * y2[n + 1])
        z2 = s2 + hh * (b0 * y1[n + 1] + a0 * y2[n + 1])
    return y1, y2


def _volterra_scalar(kern, y0, h):
    """Scalar version of :func:`_volterra_coupled`."""
    T = kern.size
    rk = kern[::-1].copy()
    y = np.zeros(T, dtype=complex)
    y[0] = y0
    k0 = kern[0]
    z = 0j
    hh = 0.5 * h
    for n in range(T - 1):
        s = hh * kern[n + 1] * y[0]
        if n:
            s += h * np.dot(rk[T - 1 - n:T - 1], y[1:n + 1])
        p = y[n] - h * z
        y[n + 1] = y[n] - hh * (z + s + hh * k0 * p)
        z = s + hh * k0 * y[n + 1]
    return y


def _integrate(k_same, k_cross, h, method):
    if method == "coupled":
        return _volterra_coupled(k_same, k_cross, (1.0 + 0j, 0j), h)
    if method == "decoupled":
        r = 1 / math.sqrt(2)
        yp = _volterra_scalar(k_same + k_cross, r, h)
        ym = _volterra_scalar(k_same - k_cross, r, h)
        return r * (yp + ym), r * (yp - ym)
    raise ValidationError(f"unknown solver method {method!r}")


def step_error_estimate(kernel: MemoryKernel, method: str = "decoupled",
                        probe_horizon: float = PROBE_HORIZON) -> float:
    """Per-step discretisation error from comparing steps ``h`` and ``2h``.

    Richardson: for a second-order scheme ``|y_h - y_2h| / 3`` estimates the
    error of ``y_h``; dividing by the number of steps gives the per-step figure.
    """
    h = kernel.step
    n = min(kernel.t.size, int(round(probe_horizon / h)) + 1)
    n -= (n - 1) % 2
    if n < 5:
        return 0.0
    fa, fb = kernel.f_same[:n], kernel.f_cross[:n]
    fine = _integrate(fa, fb, h, method)
    coarse = _integrate(fa[::2], fb[::2], 2 * h, method)
    err = max(np.max(np.abs(fine[i][::2] - coarse[i])) for i in range(2)) / 3
    return float(err / (n - 1))


def solve_amplitudes(kernel: MemoryKernel, em: EmitterPair, method: str = "coupled",
                     check_step: bool = True, step_tol: float = STEP_TOL) -> Trajectory:
    """Integrate the amplitude equations from ``alpha1 = 1, alpha2 = 0``.

    ``method="coupled"`` integrates the two-component system directly;
    ``"decoupled"`` integrates the symmetric and antisymmetric combinations
    as two scalar equations with kernels ``f_same +- f_cross``. Returned
    amplitudes are in the lab frame.
    """
    if abs(kernel.omega0 - em.omega0) > 1e-15:
        raise ValidationError("kernel was built for a different emitter frequency")
    h = kernel.step
    est = None
    if check_step:
        est = step_error_estimate(kernel, method)
        if est > step_tol:
            raise StepSizeError(f"step {h} too coarse: per-step error estimate {est:.2e}")
    y1, y2 = _integrate(kernel.f_same, kernel.f_cross, h, method)
    phase = np.exp(-1j * em.omega0 * kernel.t)
    meta = {"method": method, "step": h}
    if est is not None:
        meta["step_error_estimate"] = est
    return Trajectory(kernel.t.copy(), y1 * phase, y2 * phase, meta)


def max_group_velocity(bath: BathModel) -> float:
    k = np.linspace(0, math.pi / bath.x0, 4097)
    return float(np.max(np.abs(dispersion_slope(bath, k))))


def revival_horizon(bath: BathModel, fraction: float = REVIVAL_FRACTION) -> float:
    """Default horizon cap: a fraction of the time for radiation to circle the ring."""
    return fraction * bath.n_modes * bath.x0 / max_group_velocity(bath)


def simulate(bath: BathModel, em: EmitterPair, horizon: float | None = None,
             step: float = DEFAULT_STEP, method: str = "coupled", max_halvings: int = 6,
             step_tol: float = STEP_TOL) -> Trajectory:
    """Build the kernel and solve, halving the step until the step test passes.

    Without an explicit horizon the run stops at :func:`revival_horizon`.
    Longer runs proceed but carry ``revival_risk = True`` in the metadata.
    """
    cap = revival_horizon(bath)
    if horizon is None:
        horizon = cap
    if horizon <= 0 or step <= 0:
        raise ValidationError("horizon and step must be positive")
    for _ in range(max_halvings + 1):
        n = int(round(horizon / step))
        t = step * np.arange(n + 1)
        kernel = memory_kernel(bath, em, t)
        try:
            traj = solve_amplitudes(kernel, em, method, check_step=True, step_tol=step_tol)
        except StepSizeError:
            step /= 2
            continue
        traj.metadata.update(horizon=float(t[-1]), revival_horizon=cap,
                             revival_risk=bool(t[-1] > cap))
        return traj
    raise StepSizeError(f"step test still failing after {max_halvings} halvings")


def observables(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Excited-state population and concurrence ``2 |alpha1 alpha2|``."""
    return traj.population, traj.concurrence


def window_statistics(series, fraction: float = 0.1) -> dict:
    """Mean and spread over the final ``fraction`` of a series, plus drift from the window before."""
    x = np.asarray(series, dtype=float)
    w = max(1, int(round(fraction * x.size)))
    last = x[-w:]
    prev = x[-2 * w:-w] if x.size >= 2 * w else last
    return {"mean": float(last.mean()), "std": float(last.std()),
            "drift": float(abs(last.mean() - prev.mean()))}


def _mode_sums(bath: BathModel, em: EmitterPair, s):
    grid = mode_grid(bath, em.g)
    s = np.asarray(s, dtype=complex)
    den = s[..., None] + 1j * grid.frequencies
    if np.min(np.abs(den)) < 1e-12:
        raise PoleProximityError("s coincides with a bath mode frequency")
    c2 = grid.coupling_scale**2
    f11 = c2 * np.sum(1 / den, axis=-1)
    f12 = c2 * np.sum(np.cos(grid.wavevectors * em.separation * bath.x0) / den, axis=-1)
    return f11, f12


def laplace_amplitude(bath: BathModel, em: EmitterPair, s):
    """Laplace transforms of ``alpha1`` and ``alpha2`` from the discrete mode sums."""
    f11, f12 = _mode_sums(bath, em, s)
    s = np.asarray(s, dtype=complex)
    base = s + 1j * em.omega0 + f11
    d_plus, d_minus = base + f12, base - f12
    if min(np.min(np.abs(d_plus)), np.min(np.abs(d_minus)), np.min(np.abs(base))) < 1e-12:
        raise PoleProximityError("s is within 1e-12 of a pole of the resolvent")
    a1 = 0.5 / d_plus + 0.5 / d_minus
    a2 = -f12 / base * a1
    if a1.ndim == 0:
        return complex(a1), complex(a2)
    return a1, a2


def _contour(bath, em, energy, radius, nodes):
    theta = 2 * np.pi * np.arange(nodes) / nodes
    ring = radius * np.exp(1j * theta)
    a1, a2 = laplace_amplitude(bath, em, -1j * energy + ring)
    return ring, a1, a2


def contour_residues(bath: BathModel, em: EmitterPair, energy: float, radius: float = 1e-6,
                     nodes: int = 64) -> tuple[complex, complex]:
    """Residues of both Laplace amplitudes at ``s = -i energy`` by a trapezoidal circle."""
    ring, a1, a2 = _contour(bath, em, energy, radius, nodes)
    return complex(np.mean(a1 * ring)), complex(np.mean(a2 * ring))


def contour_pole_energy(bath: BathModel, em: EmitterPair, energy: float, radius: float = 1e-6,
                        nodes: int = 64) -> float:
    """Pole location inside the circle from the ratio of first to zeroth contour moments."""
    ring, a1, _ = _contour(bath, em, energy, radius, nodes)
    shift = np.mean(a1 * ring**2) / np.mean(a1 * ring)
    return float(energy - (1j * shift).real)


def pole_order_fit(bath: BathModel, em: EmitterPair, energy: float, eps=None) -> float:
    """Slope of ``log |alpha1(s)|`` against ``log eps`` for ``s = -i energy (1 + eps)``.

    A simple pole gives a slope of -1.
    """
    if eps is None:
        eps = np.logspace(-10, -7, 7)
    eps = np.asarray(eps, dtype=float)
    a1, _ = laplace_amplitude(bath, em, -1j * energy * (1 + eps))
    return float(np.polyfit(np.log(eps), np.log(np.abs(a1)), 1)[0])


def pole_residues(bath: BathModel, em: EmitterPair, report: DfsReport | None = None,
                  radius: float = 1e-6, nodes: int = 64, threshold: float | None = None) -> PoleAnalysis:
    """Residues of the Laplace amplitudes at the bound-state pole.

    When no bound state is predicted, every real root of the eigenvalue
    equation is probed instead; the absence verdict holds only if none of
    them carries a residue above ``threshold`` (default ``10 * 2 / N``).
    """
    if report is None:
        report = bic_solve(bath, em)
    if threshold is None:
        threshold = 10 * 2 / bath.n_modes
    if not report.exists:
        probed = []
        for cand in report.candidates:
            energy = cand[1]
            try:
                z1, _ = contour_residues(bath, em, energy, radius, nodes)
            except PoleProximityError:
                z1 = complex("nan")
            probed.append((energy, z1))
        found = [p for p in probed if np.isfinite(p[1]) and abs(p[1]) > threshold]
        if found:
            e, z = max(found, key=lambda p: abs(p[1]))
            return PoleAnalysis(True, e, z, probed=tuple(probed))
        return PoleAnalysis(False, probed=tuple(probed))
    z1, z2 = contour_residues(bath, em, report.e0, radius, nodes)
    z1b, z2b = contour_residues(bath, em, report.e0, radius, 2 * nodes)
    change = max(abs(z1 - z1b), abs(z2 - z2b))
    found = abs(z1) > threshold
    energy = contour_pole_energy(bath, em, report.e0, radius, nodes) if found else report.e0
    return PoleAnalysis(found, energy, z1, z2, report.branch_sign, change)


def steady_state_prediction(report: DfsReport):
    """Long-time reduced state and its population and concurrence.

    Returns ``(rho_inf, population, concurrence)``; without a bound state
    the emitters end in the ground state.
    """
    if not report.exists:
        return ground_projector(), 0.0, 0.0
    c2 = report.weight_c2
    rho = 0.5 * c2 * dfs_density_matrix(report) + (1 - 0.5 * c2) * ground_projector()
    return rho, c2**2 / 2, c2**2 / 2


def initial_state():
    """Sector ket of the initial condition: emitter 1 excited, bath empty."""
    return sector_ket(1, 0)


__all__ = [
    "MemoryKernel", "Trajectory", "PoleAnalysis", "memory_kernel", "solve_amplitudes",
    "simulate", "observables", "window_statistics", "laplace_amplitude", "contour_residues",
    "pole_order_fit", "pole_residues", "contour_pole_energy", "steady_state_prediction", "revival_horizon",
    "step_error_estimate", "PLUS", "MINUS",
]
