"""Command-line front end: scans, sweeps, constants, cutoff exports,
operator probes, and amplification experiments with reproducible outputs.

Exit codes: 0 success (separated / feasible), 1 usage or input error,
2 negative verdict (not separated / infeasible), 3 blow-up guard tripped.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from kgpair.bilinear import (
    bernstein_check,
    holder_bound_probe,
    ridge_bound_probe,
    shell_weighted_ratio,
)
from kgpair.cutoffs import CutoffFamily, bound_probe, theta_radial
from kgpair.reporting import (
    curve_csv,
    experiment_csv,
    sweep_csv,
    to_canonical_json,
)
from kgpair.resonance import (
    ConstantsBudget,
    ResonanceReport,
    find_admissible_constants,
    scan_all,
    sweep_speed,
)
from kgpair.simulator import NonlinearityCoefficients, run_resonant_amplification

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_BLOWUP = 3


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; code 2 is reserved for negative verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="kgpair",
        description="Space-time resonance toolkit for two-speed Klein-Gordon pairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("resonances", help="scan one speed and report the resonant structure")
    scan.add_argument("--c", type=float, required=True, help="fast wave speed (not 1)")
    scan.add_argument("--r-max", type=float, default=100.0)
    scan.add_argument("--grid-step", type=float, default=1e-3)
    scan.add_argument("--tau-sep", type=float, default=1e-6)
    scan.add_argument("--output", type=Path, help="write the JSON report here instead of stdout")

    sweep = sub.add_parser("sweep", help="separation verdicts over a range of speeds")
    sweep.add_argument("--from", dest="c_min", type=float, required=True)
    sweep.add_argument("--to", dest="c_max", type=float, required=True)
    sweep.add_argument("--steps", type=int, required=True)
    sweep.add_argument("--r-max", type=float, default=100.0)
    sweep.add_argument("--grid-step", type=float, default=1e-3)
    sweep.add_argument("--tau-sep", type=float, default=1e-6)
    sweep.add_argument("--output", type=Path)

    constants = sub.add_parser("constants", help="search the small-constant budget")
    constants.add_argument("--blowup-exponent", "-A", dest="A", type=float, required=True)
    constants.add_argument("--order", "-n", dest="n", type=int, required=True)
    constants.add_argument("--output", type=Path)

    cutoff = sub.add_parser("cutoff-export", help="evaluate a cutoff on a lattice and emit CSV")
    cutoff.add_argument("--c", type=float, help="speed for an inline scan")
    cutoff.add_argument("--report", type=Path, help="JSON resonance report to reuse")
    cutoff.add_argument(
        "--cutoff",
        required=True,
        choices=["theta", "chi-o", "chi-o-tilde", "chi-r", "chi-s", "chi-t"],
    )
    cutoff.add_argument("--index", help="phase index the family adapts to, e.g. c11+--")
    cutoff.add_argument("--rho", type=float, default=0.1)
    cutoff.add_argument("--points", type=int, default=512)
    cutoff.add_argument("--radius-max", type=float, default=1.0)
    cutoff.add_argument("--line", help="6-D segment 'x0,..,x5:y0,..,y5' in (xi, eta) space")
    cutoff.add_argument("--output", type=Path, default=Path("kgpair-cutoff"))

    probe = sub.add_parser("operator-probe", help="operator-bound measurements")
    probe.add_argument("--seed", type=int, default=0)
    probe.add_argument("--trials", type=int, default=40)
    probe.add_argument("--c", type=float, default=5.0, help="speed for the cutoff symbol probe")
    probe.add_argument("--output", type=Path)

    sim = sub.add_parser("simulate", help="resonant amplification experiment from a config file")
    sim.add_argument("--config", type=Path, required=True)
    sim.add_argument("--output", type=Path, default=Path("kgpair-experiment"))
    return parser


def _emit(text: str, output: Path | None):
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")


def cmd_resonances(args) -> int:
    report = scan_all(args.c, r_max=args.r_max, grid_step=args.grid_step, tau_sep=args.tau_sep)
    _emit(to_canonical_json(report.to_dict()), args.output)
    return EXIT_OK if report.separated else EXIT_NEGATIVE


def cmd_sweep(args) -> int:
    entries = sweep_speed(
        args.c_min,
        args.c_max,
        args.steps,
        r_max=args.r_max,
        grid_step=args.grid_step,
        tau_sep=args.tau_sep,
    )
    _emit(sweep_csv(entries, args.tau_sep), args.output)
    return EXIT_OK


def cmd_constants(args) -> int:
    result = find_admissible_constants(args.A, args.n)
    _emit(to_canonical_json(result.to_dict()), args.output)
    return EXIT_OK if isinstance(result, ConstantsBudget) else EXIT_NEGATIVE


def _load_report(args) -> ResonanceReport:
    if args.report is not None:
        return ResonanceReport.from_dict(json.loads(args.report.read_text("utf-8")))
    if args.c is None:
        raise ValueError("provide either --c or --report")
    return scan_all(args.c)


def _parse_segment(text: str):
    try:
        start_text, stop_text = text.split(":")
        start = np.array([float(v) for v in start_text.split(",")], dtype=float)
        stop = np.array([float(v) for v in stop_text.split(",")], dtype=float)
    except ValueError:
        raise ValueError("segment must look like 'x0,..,x5:y0,..,y5'") from None
    if start.size != 6 or stop.size != 6:
        raise ValueError("segment endpoints need six coordinates each")
    return start, stop


def cmd_cutoff_export(args) -> int:
    report = _load_report(args)
    family = CutoffFamily.build(report, idx=args.index)
    name = args.cutoff.replace("-", "_")
    doc = {
        "schema": "cutoff-export/1",
        "cutoff": name,
        "rho": args.rho,
        "family": family.parameters(),
    }
    if name in ("theta", "chi_o", "chi_o_tilde"):
        radii = np.linspace(0.0, args.radius_max, args.points)
        if name == "theta":
            values = theta_radial(radii, family.M)
        else:
            direction = np.zeros((args.points, 3))
            direction[:, 0] = radii
            values = family.chi_O(direction) if name == "chi_o" else family.chi_O_tilde(direction)
        csv = curve_csv({"radius": radii, "value": values})
        doc["grid"] = {"kind": "radial", "points": args.points, "radius_max": args.radius_max}
    elif args.line is not None:
        start, stop = _parse_segment(args.line)
        t = np.linspace(0.0, 1.0, args.points)
        pts = start[None, :] + t[:, None] * (stop - start)[None, :]
        values = family.evaluate(name, pts[:, :3], pts[:, 3:], rho=args.rho)
        csv = curve_csv({"t": t, "value": values})
        doc["grid"] = {
            "kind": "segment",
            "points": args.points,
            "start": list(start),
            "stop": list(stop),
        }
    else:
        if not family.components:
            raise ValueError("family has no components; pass --line for a custom segment")
        # radial line through the first component; --radius-max counts
        # multiples of the bump support width rho * support_radius
        comp = family.components[0]
        half = 3.0 * args.radius_max * family.support_radius * args.rho
        r = comp.R + np.linspace(-half, half, args.points)
        r = r[r > 0.0]
        eta = np.zeros((r.size, 3))
        eta[:, 0] = r
        xi = comp.lam * eta
        values = family.evaluate(name, xi, eta, rho=args.rho)
        csv = curve_csv({"eta_radius": r, "value": values})
        doc["grid"] = {
            "kind": "component-line",
            "points": int(r.size),
            "radius_max": args.radius_max,
            "start": [float(r[0])],
            "stop": [float(r[-1])],
        }

    csv_path = args.output.with_suffix(".csv")
    json_path = args.output.with_suffix(".json")
    csv_path.write_text(csv, encoding="utf-8")
    json_path.write_text(to_canonical_json(doc), encoding="utf-8")
    return EXIT_OK


def cmd_operator_probe(args) -> int:
    holder = holder_bound_probe(pairs=args.trials, seed=args.seed)
    ridge = ridge_bound_probe(trials=max(4, args.trials // 8), seed=args.seed)
    bernstein = [
        {
            "j": j,
            "p": 6.0,
            "q": 2.0,
            "max_ratio": bernstein_check(j, 6.0, 2.0, trials=max(5, args.trials // 2), seed=args.seed),
        }
        for j in range(6)
    ]
    dxi = 2.0 * math.pi / 128.0
    shell = [
        {"s": s, "rho": rho, "ratio": shell_weighted_ratio(R=16 * dxi, rho=rho, s=s)}
        for s in (0.5, 1.0)
        for rho in (dxi, 10.0 * dxi)
    ]
    doc = {
        "schema": "operator-probe/1",
        "seed": args.seed,
        "holder": holder,
        "ridge": ridge,
        "bernstein": bernstein,
        "shell": shell,
    }
    if args.c is not None:
        family = CutoffFamily.build(scan_all(args.c))
        doc["cutoff_symbols"] = bound_probe(family, sample_count=10_000, seed=args.seed)
    _emit(to_canonical_json(doc), args.output)
    return EXIT_OK


def _coerce(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def parse_config(path: Path) -> dict:
    if not path.exists():
        raise ValueError(f"config file {path} does not exist")
    data = {}
    for lineno, raw in enumerate(path.read_text("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        data[key.strip()] = _coerce(value.strip())
    return data


_SIM_KEYS = {
    "n", "box_length", "dt", "t_final", "amplitude", "bandwidth",
    "detune_factor", "band_halfwidth_factor", "sample_every", "scheme",
    "probe_factor",
}
_COEFF_KEYS = {"alpha", "beta", "gamma", "delta", "eps", "zeta"}
_SCAN_KEYS = {"c", "r_max", "grid_step", "tau_sep", "report_path", "seed"}


def cmd_simulate(args) -> int:
    config = parse_config(args.config)
    unknown = set(config) - _SIM_KEYS - _COEFF_KEYS - _SCAN_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "report_path" in config:
        report = ResonanceReport.from_dict(
            json.loads(Path(config["report_path"]).read_text("utf-8"))
        )
    elif "c" in config:
        report = scan_all(
            float(config["c"]),
            r_max=float(config.get("r_max", 100.0)),
            grid_step=float(config.get("grid_step", 1e-3)),
            tau_sep=float(config.get("tau_sep", 1e-6)),
        )
    else:
        raise ValueError("config must set either c or report_path")
    coeffs = NonlinearityCoefficients(**{k: float(config.get(k, 0.0)) for k in _COEFF_KEYS})
    kwargs = {k: config[k] for k in _SIM_KEYS if k in config}
    record = run_resonant_amplification(report, coeffs, **kwargs)
    args.output.with_suffix(".json").write_text(
        to_canonical_json(record), encoding="utf-8"
    )
    args.output.with_suffix(".csv").write_text(experiment_csv(record), encoding="utf-8")
    return EXIT_BLOWUP if record["inconclusive"] else EXIT_OK


_HANDLERS = {
    "resonances": cmd_resonances,
    "sweep": cmd_sweep,
    "constants": cmd_constants,
    "cutoff-export": cmd_cutoff_export,
    "operator-probe": cmd_operator_probe,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"kgpair: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
