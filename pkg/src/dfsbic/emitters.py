"""Emitter pair description and single-excitation sector states.

Sector basis ordering is ``(|0,0>, |1,0>, |0,1>)``: the joint ground state
followed by one excitation on emitter 1 or on emitter 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

GROUND, EXC1, EXC2 = 0, 1, 2


@dataclass(frozen=True)
class EmitterPair:
    """Two identical emitters of frequency ``omega0`` at cavity sites ``site1``, ``site2``."""

    omega0: float = 1.0
    g: float = 0.05
    site1: int = 1
    site2: int = 1

    def __post_init__(self):
        if self.g < 0:
            raise ValidationError(f"coupling g must be non-negative, got {self.g}")
        for s in (self.site1, self.site2):
            if int(s) != s:
                raise ValidationError(f"sites must be integers, got {s}")

    @classmethod
    def with_separation(cls, separation: int, omega0=1.0, g=0.05, site2=1):
        return cls(omega0, g, site2 + separation, site2)

    @property
    def separation(self) -> int:
        return int(self.site1 - self.site2)


def sector_ket(c1, c2, c0=0.0) -> np.ndarray:
    return np.array([c0, c1, c2], dtype=complex)


def psi_plus() -> np.ndarray:
    return sector_ket(1, 1) / np.sqrt(2)


def psi_minus() -> np.ndarray:
    return sector_ket(1, -1) / np.sqrt(2)


def projector(ket) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def ground_projector() -> np.ndarray:
    return projector(sector_ket(0, 0, 1))


def check_density_matrix(rho, atol=1e-10):
    """Raise ValidationError unless ``rho`` is a 3x3 Hermitian, unit-trace, PSD matrix."""
    rho = np.asarray(rho)
    if rho.shape != (3, 3):
        raise ValidationError(f"sector density matrix must be 3x3, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValidationError(f"density matrix trace is {np.trace(rho).real}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValidationError("density matrix is not positive semidefinite")


def excited_population(rho) -> float:
    return float(np.real(rho[EXC1, EXC1] + rho[EXC2, EXC2]))


def sector_to_two_qubit(rho) -> np.ndarray:
    """Embed a sector matrix into the 4x4 two-qubit space ordered |00>,|01>,|10>,|11>.

    Qubit ordering is (emitter 1, emitter 2), so ``|1,0>`` maps to index 2.
    """
    rho4 = np.zeros((4, 4), dtype=complex)
    idx = [0, 2, 1]
    for a in range(3):
        for b in range(3):
            rho4[idx[a], idx[b]] = rho[a, b]
    return rho4


def wootters_concurrence(rho4) -> float:
    """Wootters concurrence of an arbitrary two-qubit density matrix."""
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    rho4 = np.asarray(rho4, dtype=complex)
    rtilde = yy @ rho4.conj() @ yy
    ev = np.linalg.eigvals(rho4 @ rtilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def sector_concurrence(rho) -> float:
    return wootters_concurrence(sector_to_two_qubit(rho))
