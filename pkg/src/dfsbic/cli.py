"""Command-line scenario runner.

Exit status: 0 success, 1 an ``oracle-check`` comparison failed, 2 the
scenario could not be parsed, 3 validation failure, 4 numerical failure.
Errors print a single ``dfsbic: error code=<n> kind=<kind> reason=<text>``
line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .boundstate import bic_solve
from .dynamics import (memory_kernel, pole_residues, simulate, solve_amplitudes,
                       steady_state_prediction, window_statistics)
from .emitters import EmitterPair
from .errors import DfsBicError, ValidationError
from .markovian import bma_dfs_criterion, markovian_rates
from .oracle import build_hamiltonian, diagonalize, dump_spectrum, evolve_exact, find_bic_spectral
from .scenario import Scenario, ScenarioParseError, parse_scenario

TRAJECTORY_COLUMNS = ("t", "re_alpha1", "im_alpha1", "re_alpha2", "im_alpha2",
                      "population", "concurrence")
ORACLE_AMPLITUDE_TOL = 1e-3
ORACLE_ENERGY_TOL = 1e-6
ORACLE_WEIGHT_TOL = 5e-3


def _f(x):
    return None if x is None else float(x)


def _cplx(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _compare(predicted, measured):
    return {"predicted": float(predicted), "measured": float(measured),
            "abs_diff": float(abs(predicted - measured))}


def _header(sc: Scenario, pair: EmitterPair) -> dict:
    b = sc.bath
    return {
        "version": __version__,
        "separation": pair.separation,
        "site1": pair.site1,
        "site2": pair.site2,
        "bath": {"kind": b.kind.value, "xi": b.xi, "xi_prime": b.xi_prime,
                 "n_modes": b.n_modes, "omega_c": b.omega_c},
        "emitters": {"omega0": pair.omega0, "g": pair.g},
    }


def _criterion_block(sc, pair, report):
    bma = bma_dfs_criterion(sc.bath, pair)
    return {"markovian": {"exists": bma.exists, "l": bma.l, "sign": bma.sign,
                          "ratios": [float(r) for r in bma.ratios]},
            "exact": report.as_dict()}


def _poles_block(sc, pair, report):
    pa = pole_residues(sc.bath, pair, report)
    return {"found": pa.found, "pole_energy": _f(pa.pole_energy),
            "residue1": _cplx(pa.residue1), "residue2": _cplx(pa.residue2),
            "branch_sign": pa.branch_sign, "refinement_change": pa.refinement_change,
            "probed": [{"energy": float(e), "residue1": _cplx(z)} for e, z in pa.probed]}


def write_trajectory_csv(path, traj, stride=1):
    rows = np.column_stack([traj.t, traj.alpha1.real, traj.alpha1.imag, traj.alpha2.real,
                            traj.alpha2.imag, traj.population, traj.concurrence])[::stride]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            wr.writerow([repr(float(x)) for x in row])


def _dynamics_block(sc, pair, report, out_dir):
    traj = simulate(sc.bath, pair, sc.horizon, sc.step, sc.method, step_tol=sc.tolerances.step_tol)
    name = f"dm{pair.separation}_trajectory.csv"
    write_trajectory_csv(out_dir / name, traj, sc.csv_stride)
    _, p_pred, c_pred = steady_state_prediction(report)
    ps = window_statistics(traj.population, sc.tolerances.window_fraction)
    cs = window_statistics(traj.concurrence, sc.tolerances.window_fraction)
    md = traj.metadata
    return {
        "trajectory_csv": name,
        "horizon": md["horizon"], "step": md["step"], "method": md["method"],
        "step_error_estimate": md.get("step_error_estimate"),
        "revival_horizon": md["revival_horizon"], "revival_risk": md["revival_risk"],
        "population": {**_compare(p_pred, ps["mean"]), "window_std": ps["std"],
                       "window_drift": ps["drift"]},
        "concurrence": {**_compare(c_pred, cs["mean"]), "window_std": cs["std"],
                        "window_drift": cs["drift"]},
        "final_population": float(traj.population[-1]),
        "final_concurrence": float(traj.concurrence[-1]),
        "max_population": float(traj.population.max()),
    }


def _oracle_block(sc, pair, report, out_dir, dump=True):
    tol = sc.tolerances
    ham = build_hamiltonian(sc.bath, pair)
    eig = diagonalize(ham)
    bics = find_bic_spectral(ham, eig, tol.oracle_weight_factor)
    if dump:
        dump_spectrum(out_dir / f"dm{pair.separation}_spectrum.csv", eig, bics)
    expected = 1 if report.exists else 0
    spectral_ok = len(bics) == expected
    if report.exists and bics:
        b0 = bics[0]
        spectral_ok &= abs(b0.energy - report.e0) < ORACLE_ENERGY_TOL
        spectral_ok &= abs(b0.emitter_weight - report.weight_c2) < ORACLE_WEIGHT_TOL
    spectral = {
        "states": [{"energy": s.energy, "emitter_weight": s.emitter_weight,
                    "c1": _cplx(s.c1), "c2": _cplx(s.c2), "participation": s.participation}
                   for s in bics],
        "expected_count": expected,
        "predicted_weight": report.weight_c2 if report.exists else None,
        "pass": bool(spectral_ok),
    }

    small = sc.bath.with_modes(tol.oracle_n_modes)
    if max(pair.site1, pair.site2) > small.n_modes:
        raise ValidationError(f"emitter sites do not fit the oracle ring of {small.n_modes} sites")
    t = sc.step * np.arange(int(round(tol.oracle_horizon / sc.step)) + 1)
    exact = evolve_exact(build_hamiltonian(small, pair), t)
    ide = solve_amplitudes(memory_kernel(small, pair, t), pair, sc.method,
                           step_tol=tol.step_tol)
    d1 = float(np.max(np.abs(ide.alpha1 - exact.alpha1)))
    d2 = float(np.max(np.abs(ide.alpha2 - exact.alpha2)))
    dynamics = {"n_modes": small.n_modes, "horizon": float(t[-1]), "max_abs_diff_alpha1": d1,
                "max_abs_diff_alpha2": d2, "tolerance": ORACLE_AMPLITUDE_TOL,
                "norm_error": exact.metadata["norm_error"],
                "pass": bool(max(d1, d2) < ORACLE_AMPLITUDE_TOL)}
    return {"spectral": spectral, "dynamics": dynamics}


def run_entry(sc: Scenario, verb: str, pair: EmitterPair) -> dict:
    """Everything for one emitter placement; returns the summary dictionary."""
    out_dir = sc.out_dir
    summary = _header(sc, pair)
    report = bic_solve(sc.bath, pair)
    if verb == "criterion":
        summary["criterion"] = _criterion_block(sc, pair, report)
        return summary
    if verb == "oracle-check":
        summary["criterion"] = {"exact": report.as_dict()}
        summary["oracle"] = _oracle_block(sc, pair, report, out_dir)
        _write_json(out_dir / f"dm{pair.separation}_oracle.json", summary)
        return summary
    wanted = sc.outputs
    if "criterion" in wanted:
        summary["criterion"] = _criterion_block(sc, pair, report)
    if "boundstate" in wanted:
        summary["boundstate"] = report.as_dict()
        summary["poles"] = _poles_block(sc, pair, report)
    if "markovian" in wanted:
        rates = markovian_rates(sc.bath, pair)
        summary["markovian"] = {"gamma": rates.gamma.tolist(),
                                "omega_shift": rates.omega_shift.tolist(), "note": rates.note}
    if "dynamics" in wanted:
        summary["dynamics"] = _dynamics_block(sc, pair, report, out_dir)
    if "oracle" in wanted:
        summary["oracle"] = _oracle_block(sc, pair, report, out_dir)
    _write_json(out_dir / f"dm{pair.separation}_summary.json", summary)
    return summary


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def _map(sc, verb, workers):
    job = partial(run_entry, sc, verb)
    if workers <= 1 or len(sc.pairs) == 1:
        return [job(p) for p in sc.pairs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, sc.pairs))


def constants_table(sc: Scenario) -> dict:
    """Analytic steady population per separation next to any measured value on disk."""
    rows = []
    for pair in sc.pairs:
        report = bic_solve(sc.bath, pair)
        _, p_inf, _ = steady_state_prediction(report)
        measured = None
        path = sc.out_dir / f"dm{pair.separation}_summary.json"
        if path.exists():
            dyn = json.loads(path.read_text()).get("dynamics")
            if dyn:
                measured = dyn["population"]["measured"]
        rows.append({"separation": pair.separation, "exists": report.exists, "l": report.l,
                     "branch_sign": report.branch_sign,
                     "weight_c2": report.weight_c2 if report.exists else None,
                     "analytic_population": p_inf, "measured_population": measured,
                     "abs_diff": None if measured is None else abs(measured - p_inf)})
    return {"version": __version__, "omega0": sc.pairs[0].omega0, "rows": rows}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dfsbic", description="Two emitters in a cavity array: "
                                 "decoherence-free states, bound states and exact dynamics.")
    ap.add_argument("--version", action="version", version=f"dfsbic {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, text in (("run", "run every requested output for each separation"),
                       ("constants", "analytic steady populations per separation"),
                       ("oracle-check", "compare against exact diagonalization"),
                       ("criterion", "decoherence-free-state criterion verdicts")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--scenario", required=True, help="scenario INI file")
        p.add_argument("--out", help="output directory (overrides the scenario)")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep entries")
        p.add_argument("--horizon", type=float, help="final time in units of 1/omega_c")
        p.add_argument("--step", type=float, help="time step in units of 1/omega_c")
    return ap


def _fail(code, kind, msg):
    reason = " ".join(str(msg).split())
    print(f"dfsbic: error code={code} kind={kind} reason={reason}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ValidationError("--workers must be >= 1")
        sc = parse_scenario(args.scenario).with_overrides(args.horizon, args.step, args.out)
        sc.out_dir.mkdir(parents=True, exist_ok=True)
        if args.verb == "constants":
            table = constants_table(sc)
            _write_json(sc.out_dir / "constants.json", table)
            print(json.dumps(table, indent=2))
            return 0
        results = _map(sc, args.verb, args.workers)
        if args.verb == "criterion":
            _write_json(sc.out_dir / "criterion.json", results)
            print(json.dumps(results, indent=2))
            return 0
        if args.verb == "oracle-check":
            ok = all(r["oracle"]["spectral"]["pass"] and r["oracle"]["dynamics"]["pass"]
                     for r in results)
            for r in results:
                o = r["oracle"]
                print(f"dm={r['separation']} spectral={'pass' if o['spectral']['pass'] else 'FAIL'} "
                      f"dynamics={'pass' if o['dynamics']['pass'] else 'FAIL'} "
                      f"max_diff={max(o['dynamics']['max_abs_diff_alpha1'], o['dynamics']['max_abs_diff_alpha2']):.3e}")
            return 0 if ok else 1
        for r in results:
            line = f"dm={r['separation']}"
            if "criterion" in r:
                line += f" exists={r['criterion']['exact']['exists']}"
            if "dynamics" in r:
                d = r["dynamics"]
                line += (f" P_pred={d['population']['predicted']:.6f}"
                         f" P_meas={d['population']['measured']:.6f}"
                         f" revival_risk={d['revival_risk']}")
            print(line)
        return 0
    except ScenarioParseError as exc:
        return _fail(2, "parse", exc)
    except ValidationError as exc:
        return _fail(3, "validation", exc)
    except (DfsBicError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(4, "numeric", exc)


if __name__ == "__main__":
    sys.exit(main())
