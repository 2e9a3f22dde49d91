"""Brute-force reference: the full single-excitation Hamiltonian in the site basis.

Basis order is emitter 1, emitter 2, then cavity sites 1..N. Sites are
numbered from 1 and the cavity ring is periodic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bath import BathModel, dispersion, in_band
from .dynamics import Trajectory
from .emitters import EmitterPair
from .errors import DfsBicError, ValidationError

N_EMITTERS = 2
UNITARITY_TOL = 1e-10
# localized states occupy a small fraction of the ring
LOCALIZATION_FRACTION = 0.1


@dataclass(frozen=True)
class SingleExcitationHamiltonian:
    matrix: np.ndarray
    bath: BathModel
    emitters: EmitterPair

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Eigensystem:
    energies: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class SpectralBic:
    energy: float
    emitter_weight: float
    c1: complex
    c2: complex
    participation: float
    vector: np.ndarray


def cavity_block(bath: BathModel) -> np.ndarray:
    """Banded periodic hopping matrix with ``omega_c`` on the diagonal."""
    n = bath.n_modes
    h = np.diag(np.full(n, bath.omega_c, dtype=float))
    idx = np.arange(n)
    for shift, amp in ((1, bath.xi), (2, bath.xi_prime)):
        if amp == 0 or shift >= n:
            continue
        h[idx, (idx + shift) % n] += amp
        h[(idx + shift) % n, idx] += amp
    return h


def build_hamiltonian(bath: BathModel, em: EmitterPair) -> SingleExcitationHamiltonian:
    n = bath.n_modes
    for m in (em.site1, em.site2):
        if not 1 <= m <= n:
            raise ValidationError(f"emitter site {m} outside 1..{n}")
    dim = n + N_EMITTERS
    h = np.zeros((dim, dim))
    h[N_EMITTERS:, N_EMITTERS:] = cavity_block(bath)
    h[0, 0] = h[1, 1] = em.omega0
    for i, m in enumerate((em.site1, em.site2)):
        col = N_EMITTERS + m - 1
        h[i, col] += em.g
        h[col, i] += em.g
    return SingleExcitationHamiltonian(h, bath, em)


def diagonalize(ham: SingleExcitationHamiltonian) -> Eigensystem:
    h = ham.matrix
    if np.max(np.abs(h - h.conj().T)) > 1e-14 * max(1.0, np.max(np.abs(h))):
        raise ValidationError("Hamiltonian is not Hermitian")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise DfsBicError(f"eigendecomposition failed: {exc}") from exc
    return Eigensystem(w, v)


def evolve_exact(ham: SingleExcitationHamiltonian, t_grid, initial_index: int = 0,
                 keep_bath: bool = False, eig: Eigensystem | None = None, chunk: int = 512):
    """Exact propagation by spectral synthesis.

    Returns a :class:`Trajectory` of the emitter amplitudes and, when
    ``keep_bath`` is set, the cavity amplitudes as a ``(T, N)`` array.
    The total norm is checked at every sample.
    """
    eig = eig or diagonalize(ham)
    t = np.asarray(t_grid, dtype=float)
    w, v = eig.energies, eig.vectors
    coeff = v[initial_index].conj()  # <E|initial>
    a1 = np.empty(t.size, dtype=complex)
    a2 = np.empty(t.size, dtype=complex)
    bath = np.empty((t.size, ham.dim - N_EMITTERS), dtype=complex) if keep_bath else None
    worst = 0.0
    for a in range(0, t.size, chunk):
        b = min(a + chunk, t.size)
        amps = (np.exp(-1j * np.outer(t[a:b], w)) * coeff) @ v.T
        worst = max(worst, float(np.max(np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1))))
        a1[a:b], a2[a:b] = amps[:, 0], amps[:, 1]
        if keep_bath:
            bath[a:b] = amps[:, N_EMITTERS:]
    if worst > UNITARITY_TOL:
        raise DfsBicError(f"norm drift {worst:.2e} exceeds {UNITARITY_TOL}")
    traj = Trajectory(t.copy(), a1, a2, {"method": "oracle", "norm_error": worst})
    return (traj, bath) if keep_bath else traj


def find_bic_spectral(ham: SingleExcitationHamiltonian, eig: Eigensystem | None = None,
                      weight_factor: float = 10.0,
                      localization_fraction: float = LOCALIZATION_FRACTION) -> list[SpectralBic]:
    """In-band eigenstates with a bound emitter weight.

    A state qualifies when its energy is strictly inside the open band, its
    emitter weight exceeds ``weight_factor * 2 / N``, and its participation
    number over the cavity sites is below ``localization_fraction * N``.
    The last filter rejects extended band states that happen to sit close
    to resonance with the emitters.
    """
    eig = eig or diagonalize(ham)
    n = ham.bath.n_modes
    threshold = weight_factor * N_EMITTERS / n
    found = []
    for e, vec in zip(eig.energies, eig.vectors.T):
        if not in_band(ham.bath, e):
            continue
        weight = float(abs(vec[0]) ** 2 + abs(vec[1]) ** 2)
        if weight <= threshold:
            continue
        cav = np.abs(vec[N_EMITTERS:]) ** 2
        norm = cav.sum()
        # a vanishing cavity part (decoupled emitter state) counts as fully localized
        pn = float(norm**2 / np.sum(cav**2)) if norm > 1e-12 else 0.0
        if pn > localization_fraction * n:
            continue
        found.append(SpectralBic(float(e), weight, complex(vec[0]), complex(vec[1]), pn, vec.copy()))
    return found


def mode_amplitudes(ham: SingleExcitationHamiltonian, vec) -> tuple[np.ndarray, np.ndarray]:
    """Cavity part of ``vec`` projected on the plane waves ``exp(i k m x0) / sqrt(N)``."""
    bath = ham.bath
    n = bath.n_modes
    half = (n - 1) // 2
    k = 2 * np.pi * np.arange(-half, half + 1) / (n * bath.x0)
    sites = np.arange(1, n + 1)
    u = np.exp(1j * np.outer(k, sites * bath.x0)) / math.sqrt(n)
    return k, u.conj() @ np.asarray(vec)[N_EMITTERS:]


def predicted_mode_amplitudes(ham: SingleExcitationHamiltonian, bic: SpectralBic) -> np.ndarray:
    """``d_k = g_k (c1 e^{-i k m1 x0} + c2 e^{-i k m2 x0}) / (E - omega_k)``."""
    bath, em = ham.bath, ham.emitters
    k, _ = mode_amplitudes(ham, bic.vector)
    omega = dispersion(bath, k)
    gk = em.g / math.sqrt(bath.n_modes)
    num = bic.c1 * np.exp(-1j * k * em.site1 * bath.x0) + bic.c2 * np.exp(-1j * k * em.site2 * bath.x0)
    return gk * num / (bic.energy - omega)


def dump_spectrum(path, eig: Eigensystem, bics: list[SpectralBic] = ()) -> None:
    """Write energies and emitter weights, plus any bound eigenvectors, as CSV."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "energy", "emitter_weight"])
        weights = np.abs(eig.vectors[0]) ** 2 + np.abs(eig.vectors[1]) ** 2
        for i, (e, wgt) in enumerate(zip(eig.energies, weights)):
            wr.writerow([i, repr(float(e)), repr(float(wgt))])
    for j, bic in enumerate(bics):
        vec_path = path.with_name(f"{path.stem}_bic{j}.csv")
        with vec_path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["component", "re", "im"])
            labels = ["emitter1", "emitter2"] + [f"site{m}" for m in range(1, bic.vector.size - 1)]
            for lab, c in zip(labels, bic.vector):
                wr.writerow([lab, repr(float(c.real)), repr(float(c.imag))])
