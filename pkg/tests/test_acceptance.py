"""Acceptance criteria 1-10 at the reference tolerances.

Each test prints one ``CRITERION n: PASS|FAIL`` line; the lines are also
collected in the ``acceptance criteria`` section of the terminal summary.
The long N = 1201 trajectories are computed once per session in parallel.
"""

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from dfsbic.bath import BathModel
from dfsbic.boundstate import asymptotic_weight, bic_solve, closed_form_weight, weight_integral
from dfsbic.dynamics import (memory_kernel, pole_residues, revival_horizon, simulate, solve_amplitudes,
                             window_statistics)
from dfsbic.emitters import EmitterPair, ground_projector
from dfsbic.markovian import MarkovianRates, bma_dfs_criterion, lindblad_apply, markovian_rates
from dfsbic.oracle import build_hamiltonian, evolve_exact, find_bic_spectral

pytestmark = pytest.mark.slow

G = 0.05
XI = 0.2
HORIZON = 2000.0
STEP = 0.02
TARGET_TOL = 0.01
CENTRE_SWEEP = (1.0, range(6))
OFFSET_SWEEP = (1.2, range(1, 7))
NNN_SIGNS = (0.18, -0.18)
# smallest odd ring whose revival horizon covers the full run for both signs
NNN_MODES = 5201


def em(sep, omega0=1.0):
    return EmitterPair.with_separation(sep, omega0, G)


def _long_run(args):
    xi_prime, omega0, sep = args
    bath = (BathModel.nearest_neighbor() if xi_prime == 0
            else BathModel.next_nearest_neighbor(xi_prime=xi_prime, n_modes=NNN_MODES))
    tr = simulate(bath, em(sep, omega0), horizon=HORIZON, step=STEP, method="decoupled")
    h = tr.metadata["step"]
    c = tr.concurrence
    return args, {
        "population": window_statistics(tr.population)["mean"],
        "concurrence": window_statistics(c)["mean"],
        "c500": float(c[int(round(500 / h))]),
        "c2000": float(c[int(round(2000 / h))]),
        "revival_risk": tr.metadata["revival_risk"],
        "step": h,
    }


@pytest.fixture(scope="module")
def long_runs():
    jobs = [(0.0, omega0, s) for omega0, seps in (CENTRE_SWEEP, OFFSET_SWEEP) for s in seps]
    jobs += [(xp, 1.2, s) for xp in NNN_SIGNS for s in range(1, 7)]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(4, multiprocessing.cpu_count()), mp_context=ctx) as ex:
        return dict(ex.map(_long_run, jobs))


def _sweep_rows(long_runs, omega0, seps):
    nn = BathModel.nearest_neighbor()
    rows = []
    for s in seps:
        r = bic_solve(nn, em(s, omega0))
        target = r.steady_population
        run = long_runs[(0.0, omega0, s)]
        rows.append((s, r.exists, target, run["population"], run["concurrence"]))
    return rows


def _population_ok(rows):
    bad = []
    for s, exists, target, p, _ in rows:
        ok = abs(p - target) < TARGET_TOL if exists else p < TARGET_TOL
        if not ok:
            bad.append(s)
    return bad


def _describe(rows):
    return " ".join(f"dm{s}:P={p:.4f}/{t:.4f}" for s, _, t, p, _ in rows)


def test_criterion_1_band_centre_sweep(long_runs, acceptance):
    rows = _sweep_rows(long_runs, *CENTRE_SWEEP)
    assert [r[1] for r in rows] == [True, False, True, False, True, False]
    bad = _population_ok(rows)
    assert acceptance(1, not bad, _describe(rows)), bad


def test_criterion_2_off_centre_sweep(long_runs, acceptance):
    rows = _sweep_rows(long_runs, *OFFSET_SWEEP)
    assert [r[1] for r in rows] == [False, False, True, False, False, True]
    bad = _population_ok(rows)
    assert acceptance(2, not bad, _describe(rows)), bad


def test_criterion_3_concurrence(long_runs, acceptance):
    rows = _sweep_rows(long_runs, *CENTRE_SWEEP) + _sweep_rows(long_runs, *OFFSET_SWEEP)
    bad = []
    worst = 0.0
    for s, exists, target, p, c in rows:
        p_conv = abs(p - target) < TARGET_TOL
        c_conv = abs(c - target) < TARGET_TOL
        worst = max(worst, abs(c - target))
        if p_conv != c_conv or not c_conv:
            bad.append(s)
    assert acceptance(3, not bad, f"max |C - target| = {worst:.2e} over {len(rows)} runs"), bad


def test_criterion_4_next_nearest(long_runs, acceptance):
    bad, notes = [], []
    for xp in NNN_SIGNS:
        bath = BathModel.next_nearest_neighbor(xi_prime=xp, n_modes=NNN_MODES)
        assert revival_horizon(bath) > HORIZON
        for s in range(1, 7):
            e = em(s, 1.2)
            report = bic_solve(bath, e)
            poles = pole_residues(bath, e, report)
            run = long_runs[(xp, 1.2, s)]
            if (report.exists or poles.found or run["revival_risk"]
                    or not run["c2000"] < run["c500"]):
                bad.append((xp, s))
            notes.append(f"{xp:+.2f}/dm{s}:{run['c500']:.3g}->{run['c2000']:.3g}")
    assert acceptance(4, not bad, f"N={NNN_MODES} C(500)->C(2000) " + " ".join(notes)), bad


def test_criterion_5_oracle_equivalence(acceptance):
    bath = BathModel.nearest_neighbor(n_modes=301)
    t = STEP * np.arange(int(round(300 / STEP)) + 1)
    worst = 0.0
    for s in CENTRE_SWEEP[1]:
        e = em(s)
        tr = solve_amplitudes(memory_kernel(bath, e, t), e)
        ex = evolve_exact(build_hamiltonian(bath, e), t)
        worst = max(worst, np.max(np.abs(tr.alpha1 - ex.alpha1)), np.max(np.abs(tr.alpha2 - ex.alpha2)))
    assert acceptance(5, worst < 1e-3, f"max |alpha_ide - alpha_oracle| = {worst:.2e} (tol 1e-3)")


def test_criterion_6_spectral_bic(acceptance):
    bics = find_bic_spectral(build_hamiltonian(BathModel.nearest_neighbor(), em(2)))
    ok = (len(bics) == 1 and abs(bics[0].energy - 1.0) < 1e-6
          and abs(bics[0].emitter_weight - 0.969697) < 5e-3)
    detail = "; ".join(f"E={b.energy:.12f} weight={b.emitter_weight:.9f}" for b in bics)
    assert acceptance(6, ok, f"{len(bics)} state(s): {detail}")


def test_criterion_7_residue(acceptance):
    nn = BathModel.nearest_neighbor()
    worst, parts = 0.0, []
    for omega0, s in ((1.0, 2), (1.0, 4), (1.2, 3), (1.2, 6)):
        report = bic_solve(nn, em(s, omega0))
        pa = pole_residues(nn, em(s, omega0), report)
        err = abs(pa.residue1 - report.weight_c2 / 2) if pa.found else math.inf
        worst = max(worst, err)
        parts.append(f"dm{s}@{omega0}:{err:.1e}")
    assert acceptance(7, worst < 1e-4, " ".join(parts))


def test_criterion_8_weight_formulas(acceptance):
    nn = BathModel.nearest_neighbor()
    worst_rel, points = 0.0, 0
    for s in range(1, 11):
        for l in range(1, s):  # l = 0 and l = s sit on the band edges
            omega0 = 1 + 2 * XI * math.cos(l * math.pi / s)
            r = bic_solve(nn, em(s, omega0))
            w = weight_integral(nn, em(s, omega0), omega0, r.branch_sign)
            c = closed_form_weight(nn, em(s, omega0))
            worst_rel = max(worst_rel, abs(w - c) / c)
            points += 1
    worst_id = max(abs(1 / asymptotic_weight(nn, 1.0, s, G) - G**2 * s / (4 * XI**2)) for s in range(1, 11))
    ok = worst_rel < 1e-4 and worst_id < 1e-12
    assert acceptance(8, ok, f"{points} points, max rel err {worst_rel:.1e}; asymptotic identity {worst_id:.1e}")


def test_criterion_9_markovian_stationarity(acceptance):
    nn = BathModel.nearest_neighbor()
    worst, checked = 0.0, 0
    e = em(3, 1.2)
    rates = markovian_rates(nn, e)
    crit = bma_dfs_criterion(nn, e)
    assert crit.exists and abs(rates.gamma[0, 1] + rates.gamma[0, 0]) < 1e-12
    # the continuum exchange shift vanishes at criterion points, so a nonzero one is imposed by hand
    synthetic = MarkovianRates(np.array([[0.0125, -0.0125], [-0.0125, 0.0125]]),
                               np.array([[-0.004, 0.0031], [0.0031, -0.004]]))
    for r in (rates, synthetic):
        for c2 in (1.0, 0.5):
            rho = c2 * crit.projector + (1 - c2) * ground_projector()
            worst = max(worst, np.linalg.norm(lindblad_apply(r, e, rho)))
            checked += 1
    assert acceptance(9, worst < 1e-12, f"max ||L rho_dfs|| = {worst:.1e} over {checked} cases, "
                                        f"Omega12 = {synthetic.omega_shift[0, 1]}")


def test_criterion_10_properties(acceptance):
    small = BathModel.nearest_neighbor(n_modes=301)
    parts, ok = [], True

    # unitarity of the exact propagation at full size
    tr = evolve_exact(build_hamiltonian(BathModel.nearest_neighbor(), em(2)), np.linspace(0, HORIZON, 2001))
    norm_err = tr.metadata["norm_error"]
    ok &= norm_err < 1e-10
    parts.append(f"unitarity {norm_err:.1e}")

    # no amplitude on emitter 2 before the fastest wave can arrive
    light = 0.0
    for s in (2, 4, 10):
        arrival = s / (2 * XI)
        t = np.linspace(0, arrival, 401)[:-1]
        light = max(light, np.max(np.abs(evolve_exact(build_hamiltonian(small, em(s)), t).alpha2)))
    ok &= light < 1e-3
    parts.append(f"light cone max|alpha2| {light:.2e}")

    # coupled and decoupled solver paths
    basis = 0.0
    t = STEP * np.arange(int(round(300 / STEP)) + 1)
    for s, omega0 in ((1, 1.0), (2, 1.0), (3, 1.2)):
        k = memory_kernel(small, em(s, omega0), t)
        a = solve_amplitudes(k, em(s, omega0), "coupled")
        b = solve_amplitudes(k, em(s, omega0), "decoupled")
        basis = max(basis, np.max(np.abs(a.alpha1 - b.alpha1)), np.max(np.abs(a.alpha2 - b.alpha2)))
    ok &= basis < 1e-8
    parts.append(f"basis {basis:.1e}")

    # kernels are unchanged by swapping the emitter sites
    sym = True
    for bath in (small, BathModel.next_nearest_neighbor(xi_prime=0.18, n_modes=301)):
        a = memory_kernel(bath, EmitterPair(1.0, G, 5, 2), t[:2001])
        b = memory_kernel(bath, EmitterPair(1.0, G, 2, 5), t[:2001])
        sym &= np.array_equal(a.f_cross, b.f_cross) and np.array_equal(a.f_same, b.f_same)
    ok &= sym
    parts.append(f"reflection {'exact' if sym else 'broken'}")
    assert acceptance(10, bool(ok), ", ".join(parts))
