"""Born-Markov description of the emitter pair.

Collective decay matrix, environment-induced frequency shifts, the
Markovian decoherence-free-state criterion, and Lindblad propagation in
the single-excitation sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bath import BathModel, degenerate_wavevectors, dispersion_slope, in_band
from .emitters import (EXC1, EXC2, GROUND, EmitterPair, check_density_matrix, projector,
                       psi_minus, psi_plus)
from .errors import BandEdgeError, PositivityError, StepSizeError, ValidationError
from .quadrature import zone_principal_value

INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class MarkovianRates:
    """Decay matrix ``gamma`` and coherent shift matrix ``omega_shift`` (both 2x2, real)."""

    gamma: np.ndarray
    omega_shift: np.ndarray
    note: str = ""


@dataclass(frozen=True)
class BmaDfsReport:
    exists: bool
    l: int | None
    sign: str | None
    ratios: tuple = ()
    projector: np.ndarray | None = field(default=None, repr=False)


def decay_matrix(bath: BathModel, em: EmitterPair) -> np.ndarray:
    """Collective decay matrix from the continuum density of states.

    Each resonant wavevector ``k_b`` of ``omega0`` contributes
    ``g^2 x0 / |d omega/dk| * cos(k_b R)``. Out-of-band emitters have no
    resonant modes and get a zero matrix.
    """
    if not in_band(bath, em.omega0):
        if in_band(bath, em.omega0, closed=True):
            raise BandEdgeError(f"omega0={em.omega0} sits on a band edge")
        return np.zeros((2, 2))
    ks = degenerate_wavevectors(bath, em.omega0)
    slopes = np.abs(dispersion_slope(bath, ks))
    if np.any(slopes < 1e-9):
        raise BandEdgeError(f"van Hove singularity at omega0={em.omega0}")
    weights = em.g**2 * bath.x0 / slopes
    R = em.separation * bath.x0
    g11 = float(np.sum(weights))
    g12 = float(np.sum(weights * np.cos(ks * R)))
    return np.array([[g11, g12], [g12, g11]])


def lamb_shifts(bath: BathModel, em: EmitterPair, tol: float = 1e-12) -> np.ndarray:
    """Frequency shifts (diagonal) and exchange coupling (off-diagonal).

    Principal value of ``sum_k g_k^2 cos(k R_ij) / (omega_k - omega0)`` in the
    continuum limit, computed with mirrored nodes around each resonant k.
    """
    if em.g == 0:
        return np.zeros((2, 2))
    pref = em.g**2 * bath.x0 / (2 * math.pi)
    R = em.separation * bath.x0

    def shift(r):
        return pref * zone_principal_value(bath, lambda k: np.cos(k * r), em.omega0, tol=tol)

    s11 = shift(0.0)
    s12 = shift(R) if R else s11
    return np.array([[s11, s12], [s12, s11]])


def markovian_rates(bath: BathModel, em: EmitterPair) -> MarkovianRates:
    note = "" if in_band(bath, em.omega0, closed=True) else "no resonant modes"
    return MarkovianRates(decay_matrix(bath, em), lamb_shifts(bath, em), note)


def bma_dfs_criterion(bath: BathModel, em: EmitterPair, tol: float = INTEGER_TOL) -> BmaDfsReport:
    """Markovian DFS criterion ``k(omega0) R = l pi`` at every resonant wavevector.

    All resonant wavevectors must give integer ratios of the same parity;
    odd ``l`` selects the symmetric state, even ``l`` the antisymmetric one.
    """
    if not in_band(bath, em.omega0):
        return BmaDfsReport(False, None, None)
    ks = degenerate_wavevectors(bath, em.omega0)
    ratios = ks * em.separation * bath.x0 / math.pi
    nearest = np.round(ratios)
    ok = bool(np.all(np.abs(ratios - nearest) <= tol * np.maximum(1.0, np.abs(ratios))))
    parities = {int(abs(n)) % 2 for n in nearest}
    if not ok or len(parities) != 1:
        return BmaDfsReport(False, None, None, tuple(ratios))
    pos = ks[ks > 0]
    l = int(abs(round(pos.min() * em.separation * bath.x0 / math.pi)))
    sign = "+" if l % 2 else "-"
    ket = psi_plus() if sign == "+" else psi_minus()
    return BmaDfsReport(True, l, sign, tuple(ratios), projector(ket))


def _lowering_ops():
    o1 = np.zeros((3, 3), dtype=complex)
    o2 = np.zeros((3, 3), dtype=complex)
    o1[GROUND, EXC1] = 1
    o2[GROUND, EXC2] = 1
    return o1, o2


def generator_parts(rates: MarkovianRates, em: EmitterPair):
    """Effective sector Hamiltonian and lowering operators."""
    o = _lowering_ops()
    om = rates.omega_shift
    h = np.zeros((3, 3), dtype=complex)
    h[EXC1, EXC1] = em.omega0 + om[0, 0]
    h[EXC2, EXC2] = em.omega0 + om[1, 1]
    h[EXC1, EXC2] = om[0, 1]
    h[EXC2, EXC1] = np.conj(om[1, 0])
    return h, o


def lindblad_apply(rates: MarkovianRates, em: EmitterPair, rho) -> np.ndarray:
    """Action of the Markovian generator on a sector density matrix."""
    h, o = generator_parts(rates, em)
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (h @ rho - rho @ h)
    gam = rates.gamma
    for i in range(2):
        for j in range(2):
            if gam[i, j] == 0:
                continue
            oj, oi_d = o[j], o[i].conj().T
            anti = oi_d @ oj
            out += 0.5 * gam[i, j] * (2 * oj @ rho @ oi_d - anti @ rho - rho @ anti)
    return out


def generator_matrix(rates: MarkovianRates, em: EmitterPair) -> np.ndarray:
    """9x9 superoperator acting on row-major flattened sector matrices."""
    cols = []
    for n in range(9):
        e = np.zeros(9, dtype=complex)
        e[n] = 1
        cols.append(lindblad_apply(rates, em, e.reshape(3, 3)).ravel())
    return np.array(cols).T


def lindblad_propagate(rates: MarkovianRates, em: EmitterPair, rho0, t_grid,
                       max_step: float = 0.05, positivity_tol: float = 1e-8):
    """Fourth-order Runge-Kutta propagation sampled on a uniform ``t_grid``.

    Grid intervals longer than ``max_step`` are split into equal substeps.
    Raises :class:`PositivityError` if an eigenvalue drops below
    ``-positivity_tol``.
    """
    check_density_matrix(rho0, atol=1e-8)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValidationError("t_grid must be a non-empty 1D array")
    if t.size > 1:
        dt = np.diff(t)
        if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * max(1.0, abs(dt[0])):
            raise ValidationError("t_grid must be uniform and increasing")
    L = generator_matrix(rates, em)
    y = np.asarray(rho0, dtype=complex).ravel()
    out = [y.reshape(3, 3).copy()]
    if t.size == 1:
        return out
    h_grid = t[1] - t[0]
    sub = max(1, int(math.ceil(h_grid / max_step - 1e-12)))
    h = h_grid / sub
    if h * max(1.0, np.abs(np.linalg.eigvals(L)).max()) > 2.5:
        raise StepSizeError(f"RK4 step {h} is outside the stability region")
    for _ in range(t.size - 1):
        for _ in range(sub):
            k1 = L @ y
            k2 = L @ (y + 0.5 * h * k1)
            k3 = L @ (y + 0.5 * h * k2)
            k4 = L @ (y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = y.reshape(3, 3)
        rho_h = 0.5 * (rho + rho.conj().T)
        if np.linalg.eigvalsh(rho_h).min() < -positivity_tol:
            raise PositivityError("density matrix lost positivity; reduce the step")
        out.append(rho.copy())
    return out
