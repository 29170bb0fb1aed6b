"""Command line front end.

    mptherm simulate          --scenario s.toml --out dir
    mptherm check-reciprocity --scenario a.toml --scenario-b b.toml --out dir
    mptherm check-transform   --scenario a.toml --scenario-b b.toml --out dir
    mptherm check-variational --scenario s.toml --out dir [--seed S]
    mptherm check-energy      --scenario s.toml --out dir
    mptherm check-front       --scenario s.toml --out dir
    mptherm --print-defaults / --print-scenario s.toml

Each check runs at --levels refinement levels (level 1 = the scenario as
written; reciprocity, variational and front halve h and dt per level, the
transform check halves dt and doubles t_end, the energy check halves dt
only) and writes per-level CSVs plus a versioned summary.json.  Exit code
0 iff every check passes at the finest level.  All failures are reported
as single-line JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import DEFAULT_SCENARIO, emit, load_scenario, parse_scenario
from .dynamics import detect_front, run_simulation, theoretical_front_speed
from .energetics import energy_report
from .errors import MpthermError, ValidationError
from .field import Grid1D
from .reciprocity import reciprocity_defect, transform_identity_defect
from .variational import (biot_delta_H, euler_lagrange_residual_mech,
                          euler_lagrange_residual_thermal, random_variation)

_TOL_DEFAULTS = {"reciprocity": 5e-3, "transform": 1e-2, "variational": 1e-2,
                 "energy": 1e-5, "front": 0.1}

_HISTORY_HEADER = ["t", "x", "u1", "u2", "u3", "v1", "v2", "v3",
                   "phi1", "phi2", "phi3", "omega1", "omega2", "omega3",
                   "varphi", "varphidot", "theta", "q1", "q2", "q3"]
_TRACE_HEADER = ["t", "end", "T11n", "T12n", "T13n", "M11n", "M12n", "M13n",
                 "h1n", "q1n", "s1n"]


def _parser():
    p = argparse.ArgumentParser(
        prog="mptherm",
        description="1-D finite-difference simulation and theorem checks for "
                    "micropolar porous thermoelasticity with relaxing heat flux.")
    p.add_argument("--print-defaults", action="store_true",
                   help="print the commented default scenario and exit")
    p.add_argument("--print-scenario", metavar="PATH",
                   help="parse PATH and print the normalized scenario")
    sub = p.add_subparsers(dest="command")
    for name in ("simulate", "check-reciprocity", "check-transform",
                 "check-variational", "check-energy", "check-front"):
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=True)
        sp.add_argument("--scenario-b", default=None)
        sp.add_argument("--out", required=True)
        sp.add_argument("--levels", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        for check, tol in _TOL_DEFAULTS.items():
            sp.add_argument(f"--tol-{check}", type=float, default=tol,
                            dest=f"tol_{check}")
    return p


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_history(outdir, hist):
    rows = []
    x = hist.grid.x
    for k, t in enumerate(hist.times):
        for i in range(x.shape[0]):
            rows.append([t, x[i], *hist.states[k, i, :]])
    _write_csv(outdir / "history.csv", _HISTORY_HEADER, rows)

    rows = []
    for k, t in enumerate(hist.times):
        for w, (which, node) in enumerate((("left", 0), ("right", -1))):
            n1 = Grid1D.NORMALS[which]
            rows.append([t, which, *hist.traces[k, w, :],
                         n1 * hist.s[k, node, 0]])
    _write_csv(outdir / "traces.csv", _TRACE_HEADER, rows)


def _summary_entry(check, level, defect, tol):
    return {"check": check, "level": level, "defect": float(defect),
            "tolerance": float(tol), "pass": bool(defect <= tol)}


def _finish(outdir, command, entries, levels):
    payload = {"schema": 1, "command": command, "checks": entries}
    with open(outdir / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    finest = [e for e in entries if e["level"] == levels]
    return 0 if all(e["pass"] for e in finest) else 1


def _cmd_simulate(args, outdir):
    hist = run_simulation(parse_scenario(args.scenario))
    _write_history(outdir, hist)
    return _finish(outdir, "simulate", [], args.levels)


def _pair(args):
    if args.scenario_b is None:
        raise ValidationError("this check needs --scenario-b",
                              key="scenario-b")
    return parse_scenario(args.scenario), parse_scenario(args.scenario_b)


def _cmd_reciprocity(args, outdir):
    scn_a, scn_b = _pair(args)
    entries = []
    for level in range(1, args.levels + 1):
        fa = 2 ** (level - 1)
        sa, sb = scn_a.refined(fa), scn_b.refined(fa)
        rep = reciprocity_defect(run_simulation(sa), run_simulation(sb))
        rows = [["reciprocity", t, i12, i21, d, ""]
                for t, i12, i21, d in zip(rep.check_times, rep.I_12,
                                          rep.I_21, rep.defects)]
        _write_csv(outdir / f"reciprocity_level{level}.csv",
                   ["check", "t_or_s", "I_12", "I_21", "defect", "bound"], rows)
        entries.append(_summary_entry("reciprocity", level, rep.max_defect,
                                      args.tol_reciprocity))
    return _finish(outdir, "check-reciprocity", entries, args.levels)


def _cmd_transform(args, outdir):
    scn_a, scn_b = _pair(args)
    entries = []
    for level in range(1, args.levels + 1):
        fa = 2 ** (level - 1)
        sa, sb = scn_a.extended(fa), scn_b.extended(fa)
        rep = transform_identity_defect(run_simulation(sa), run_simulation(sb))
        rows = [["transform", s, i12, i21, d, b]
                for s, i12, i21, d, b in zip(rep.s_values, rep.I_12, rep.I_21,
                                             rep.transform_defects,
                                             rep.truncation_bounds)]
        _write_csv(outdir / f"transform_level{level}.csv",
                   ["check", "t_or_s", "I_12", "I_21", "defect", "bound"], rows)
        entries.append(_summary_entry("transform", level,
                                      rep.transform_defects.max(),
                                      args.tol_transform))
    return _finish(outdir, "check-transform", entries, args.levels)


def _cmd_variational(args, outdir):
    scn = parse_scenario(args.scenario)
    entries = []
    for level in range(1, args.levels + 1):
        s = scn.refined(2 ** (level - 1))
        hist = run_simulation(s)
        rows = []
        worst = {"EL_mech": 0.0, "EL_thermal": 0.0, "biot_deltaH": 0.0}
        for k in range(5):
            seed = args.seed + k
            var = random_variation(hist, seed=seed)
            vals = {
                "EL_mech": euler_lagrange_residual_mech(hist, s, var),
                "EL_thermal": euler_lagrange_residual_thermal(hist, s, var),
                "biot_deltaH": biot_delta_H(hist, s, var),
            }
            for check, defect in vals.items():
                worst[check] = max(worst[check], defect)
                rows.append([check, defect, var.norm(), s.grid.h, s.dt, seed])
        _write_csv(outdir / f"variational_level{level}.csv",
                   ["check", "defect", "norm_variation", "resolution_h",
                    "resolution_dt", "seed"], rows)
        for check, defect in worst.items():
            entries.append(_summary_entry(check, level, defect,
                                          args.tol_variational))
    return _finish(outdir, "check-variational", entries, args.levels)


def _cmd_energy(args, outdir):
    scn = parse_scenario(args.scenario)
    entries = []
    for level in range(1, args.levels + 1):
        s = replace(scn, dt=scn.dt / 2 ** (level - 1))
        rep = energy_report(run_simulation(s))
        drift_col = np.where(
            rep.times >= rep.t_on - 1e-12,
            np.abs(rep.mechanical_total - rep.reference) / rep.reference, 0.0)
        rows = [[t, k, f, e, d] for t, k, f, e, d in
                zip(rep.times, rep.kinetic, rep.free, rep.mechanical_total,
                    drift_col)]
        _write_csv(outdir / f"energy_level{level}.csv",
                   ["t", "kinetic", "free", "mechanical_total", "drift"], rows)
        entries.append(_summary_entry("energy", level, rep.drift,
                                      args.tol_energy))
    return _finish(outdir, "check-energy", entries, args.levels)


def _cmd_front(args, outdir):
    scn = parse_scenario(args.scenario)
    entries = []
    for level in range(1, args.levels + 1):
        s = scn.refined(2 ** (level - 1))
        rep = detect_front(run_simulation(s))
        v_ref = theoretical_front_speed(s.material)
        defect = abs(rep.speed - v_ref) / v_ref
        rows = [[t, x] for t, x in zip(rep.times, rep.positions)]
        _write_csv(outdir / f"front_level{level}.csv", ["t", "x_front"], rows)
        entries.append(_summary_entry("front", level, defect, args.tol_front))
    return _finish(outdir, "check-front", entries, args.levels)


_COMMANDS = {"simulate": _cmd_simulate, "check-reciprocity": _cmd_reciprocity,
             "check-transform": _cmd_transform,
             "check-variational": _cmd_variational,
             "check-energy": _cmd_energy, "check-front": _cmd_front}


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        if args.print_defaults:
            sys.stdout.write(DEFAULT_SCENARIO)
            return 0
        if args.print_scenario:
            sys.stdout.write(emit(load_scenario(args.print_scenario)))
            return 0
        if args.command is None:
            parser.error("a command is required (or --print-defaults)")
        if args.levels < 1:
            raise ValidationError("--levels must be >= 1", key="levels")
        for check in _TOL_DEFAULTS:
            if getattr(args, f"tol_{check}") <= 0.0:
                raise ValidationError(f"--tol-{check} must be positive",
                                      key=f"tol-{check}")
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](args, outdir)
    except MpthermError as exc:
        print(json.dumps(exc.to_json_dict()), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
