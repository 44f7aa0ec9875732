"""Command-line front end: every experiment writes CSV data plus a JSON manifest.

Exit codes: 0 success, 2 invalid input, 3 empty gap, 4 solver failure, 5 I/O.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .capacitance import PhysicalConstants, assemble, eigenvalue_to_frequency
from .errors import DimerChainError, InvalidGeometryError, OutputError
from .gap import bulk_gap, classify, convergence_study, find_gap_eigenvalue, log_linear_fit, pseudo_residual
from .geometry import DimerSpec, PerturbationSpec, build_defect_chain, build_uniform_dimer
from .stability import monte_carlo
from .topology import indicator_sweep
from .tridiag import solve

OUTPUT_ENV = "DIMERCHAIN_OUTPUT_DIR"


class UsageError(DimerChainError):
    category = "usage"
    exit_code = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class _Run:
    """Collects output files in memory; nothing touches disk until :meth:`commit`."""

    def __init__(self, command: str, config: dict, out: Path):
        self.command = command
        self.config = config
        self.out = out
        canonical = json.dumps({"command": command, "config": config, "version": __version__}, sort_keys=True)
        self.run_id = hashlib.sha256(canonical.encode()).hexdigest()[:16]
        self.files: dict[str, bytes] = {}
        self.summary: dict = {}

    def table(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        buf = io.StringIO()
        buf.write(f"# run_id={self.run_id}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        self.files[name] = buf.getvalue().encode()

    def json(self, name: str, payload) -> None:
        self.files[name] = (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()

    def commit(self) -> dict:
        manifest = {
            "command": self.command,
            "config": self.config,
            "version": __version__,
            "run_id": self.run_id,
            "summary": self.summary,
            "files": {name: hashlib.sha256(data).hexdigest() for name, data in sorted(self.files.items())},
        }
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            for name, data in self.files.items():
                (self.out / name).write_bytes(data)
            (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise OutputError(f"cannot write to {self.out}: {exc}") from exc
        return manifest


def _spec(args) -> DimerSpec:
    return DimerSpec(args.s1, args.s2, args.m, args.ell)


def _consts(args) -> PhysicalConstants:
    return PhysicalConstants(args.v_b, args.delta)


def _m_range(args) -> list[int]:
    if args.m_min > args.m_max:
        raise InvalidGeometryError(f"--m-min {args.m_min} exceeds --m-max {args.m_max}")
    return list(range(args.m_min, args.m_max + 1))


def cmd_spectrum(args, run: _Run) -> None:
    spec = _spec(args)
    consts = _consts(args)
    chain = build_defect_chain(spec) if args.chain == "defect" else build_uniform_dimer(spec, 2 * spec.m)
    matrix = assemble(chain)
    spectrum = solve(matrix)
    bands = bulk_gap(spec)
    rows = []
    for k, lam in enumerate(spectrum.values):
        rows.append(
            (
                k,
                lam,
                eigenvalue_to_frequency(lam, spec.ell, consts),
                classify(lam, spec).kind,
                bands.in_gap(lam),
                spectrum.residuals[k],
            )
        )
    run.table("spectrum.csv", ["index", "eigenvalue", "frequency", "kind", "in_gap", "residual"], rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "diag", "offdiag"])
    for i, d in enumerate(matrix.diag):
        writer.writerow([i, repr(float(d)), repr(float(matrix.offdiag[i])) if i < matrix.n - 1 else ""])
    run.files["capacitance.csv"] = f"# run_id={run.run_id}\n{buf.getvalue()}".encode()
    run.summary = {
        "n": matrix.n,
        "in_gap": int(sum(bands.in_gap(v) for v in spectrum.values)),
        "max_residual": float(spectrum.residuals.max()),
    }


def cmd_modes(args, run: _Run) -> None:
    spec = _spec(args)
    chain = build_defect_chain(spec) if args.chain == "defect" else build_uniform_dimer(spec, 2 * spec.m)
    spectrum = solve(assemble(chain))
    bands = bulk_gap(spec)
    centre = (chain.n - 1) // 2
    indices = range(len(spectrum))
    if args.gap_only:
        indices = [k for k in indices if bands.in_gap(spectrum.values[k])]
    rows = []
    for k in indices:
        for i, value in enumerate(spectrum.vectors[:, k]):
            rows.append((k, spectrum.values[k], i, i - centre, value))
    run.table("modes.csv", ["mode", "eigenvalue", "position", "distance", "value"], rows)
    run.summary = {"n": chain.n, "modes": len(indices)}


def cmd_gap(args, run: _Run) -> None:
    report = find_gap_eigenvalue(_spec(args))
    row = report.csv_row()
    run.table("gap.csv", list(row), [list(row.values())])
    run.summary = {"count_in_gap": report.count_in_gap, **row}


def cmd_convergence(args, run: _Run) -> None:
    spec = _spec(args)
    rows = convergence_study(spec, _m_range(args), _consts(args))
    header = ["m", "N", "lambda_gap", "lambda_limit", "abs_error", "omega_gap", "omega_limit", "omega_error",
              "fitted_ratio", "predicted_ratio"]
    run.table(
        "convergence.csv",
        header,
        [(r.m, r.n, r.lambda_gap, r.lambda_limit, r.abs_error, r.omega_gap, r.omega_limit, r.omega_error,
          r.fitted_ratio, r.predicted_ratio) for r in rows],
    )
    usable = [r for r in rows if r.abs_error > 0]
    summary = {"rows": len(rows), "min_abs_error": min(r.abs_error for r in rows)}
    if len(usable) >= 2:
        fit = log_linear_fit([r.n for r in usable], [r.abs_error for r in usable])
        summary.update(slope=fit.slope, r_squared=fit.r_squared)
    run.summary = summary


def _eta_values(args) -> list[float]:
    if args.eta_sweep is None:
        return [args.eta]
    try:
        start, stop, count = args.eta_sweep.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise UsageError(f"--eta-sweep expects start:stop:count, got {args.eta_sweep!r}") from exc
    return [float(v) for v in values]


def cmd_stability(args, run: _Run) -> None:
    spec = _spec(args)
    aggregates, trial_rows = [], []
    for eta in _eta_values(args):
        report = monte_carlo(spec, PerturbationSpec(eta * spec.ell, seed=args.seed), args.runs)
        aggregates.append({"eta_fraction": eta, **report.to_dict()})
        if args.per_trial_csv:
            for o in report.outcomes:
                trial_rows.append({"eta_fraction": eta, **o.csv_row()})
    header = ["eta_fraction", "eta", "runs", "violations_weyl", "violations_dk", "violations_dk_apriori",
              "dk_ineligible", "interface_left_gap", "dislocation_mean", "dislocation_min", "dislocation_max",
              "ratio_max", "max_shift"]
    rows = []
    for a in aggregates:
        d = a["dislocation"]
        rows.append([a["eta_fraction"], a["eta"], a["runs"], a["violations_weyl"], a["violations_dk"],
                     a["violations_dk_apriori"], a["dk_ineligible"], a["interface_left_gap"],
                     d["mean"], d["min"], d["max"], a["ratio_max"], a["max_shift"]])
    run.table("stability.csv", header, rows)
    run.json("stability.json", aggregates)
    if trial_rows:
        run.table("trials.csv", list(trial_rows[0]), [list(r.values()) for r in trial_rows])
    run.summary = {
        "violations_weyl": sum(a["violations_weyl"] for a in aggregates),
        "violations_dk": sum(a["violations_dk"] for a in aggregates),
        "ratio_max": max(a["ratio_max"] for a in aggregates),
    }


def cmd_indicator(args, run: _Run) -> None:
    sweep = indicator_sweep(_spec(args), args.dimers, at=args.at)
    run.table("indicator.csv", ["index", "eigenvalue", "indicator"],
              [(k, lam, j) for k, (lam, j) in enumerate(sweep.entries)])
    run.summary = sweep.to_dict()


def cmd_pseudospectrum(args, run: _Run) -> None:
    spec = _spec(args)
    rows = []
    for m in _m_range(args):
        for k in range(1, args.k_max + 1):
            r = pseudo_residual(spec.with_m(m), k)
            rows.append((m, k, r.eigenvalue, r.residual_norm, r.spectral_distance, r.holds))
    run.table("pseudospectrum.csv", ["m", "k", "eigenvalue", "residual_norm", "spectral_distance", "holds"], rows)
    run.summary = {"rows": len(rows), "violations": sum(not r[-1] for r in rows)}


COMMANDS: dict[str, tuple[Callable, str]] = {
    "spectrum": (cmd_spectrum, "eigenvalues, frequencies and the capacitance matrix"),
    "modes": (cmd_modes, "eigenvectors by resonator position and distance from the interface"),
    "gap": (cmd_gap, "interface eigenvalue, its limit and the decay-rate fit"),
    "convergence": (cmd_convergence, "interface eigenvalue error against chain size"),
    "stability": (cmd_stability, "Monte Carlo spacing perturbations with Weyl / Davis-Kahan checks"),
    "indicator": (cmd_indicator, "pairwise-mirror indicator over a defectless chain"),
    "pseudospectrum": (cmd_pseudospectrum, "embedded interface modes as approximate eigenpairs"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dimerchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat JSON file whose keys mirror flag names; flags take precedence")
    common.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or the current directory)")
    common.add_argument("--s1", type=float, default=1.0, help="first spacing of each dimer")
    common.add_argument("--s2", type=float, default=2.0, help="spacing between dimers")
    common.add_argument("--m", type=int, default=10, help="defect chain has 4m+1 resonators, the plain dimer 2m")
    common.add_argument("--ell", type=float, default=1.0, help="resonator length")
    common.add_argument("--v-b", type=float, default=1.0, help="wave speed inside the resonators")
    common.add_argument("--delta", type=float, default=1e-3, help="material contrast")

    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("spectrum", "modes"):
            p.add_argument("--chain", choices=("defect", "dimer"), default="defect", help="chain type")
        if name == "modes":
            p.add_argument("--gap-only", action="store_true", help="only modes with eigenvalue in the gap")
        if name in ("convergence", "pseudospectrum"):
            p.add_argument("--m-min", type=int, default=3, help="smallest m")
            p.add_argument("--m-max", type=int, default=25 if name == "convergence" else 15, help="largest m")
        if name == "pseudospectrum":
            p.add_argument("--k-max", type=int, default=5, help="padding sizes k = 1..k-max")
        if name == "stability":
            p.add_argument("--eta", type=float, default=0.2, help="perturbation half-width as a fraction of ell")
            p.add_argument("--eta-sweep", help="start:stop:count, overrides --eta")
            p.add_argument("--runs", type=int, default=10_000, help="trials per eta")
            p.add_argument("--seed", type=int, default=0, help="64-bit seed")
            p.add_argument("--per-trial-csv", action="store_true", help="also write trials.csv")
        if name == "indicator":
            p.add_argument("--dimers", type=int, default=40, help="number of unit cells")
            p.add_argument("--at", type=float, help="report the eigenvalue closest to this value instead")
    return parser


def _load_config(path: str, subparser: argparse.ArgumentParser, command: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a flat JSON object")
    if data.get("command", command) != command:
        raise UsageError(f"config is for {data['command']!r}, not {command!r}")
    actions = {a.dest: a for a in subparser._actions}
    out = {}
    for key, value in data.items():
        if key == "command":
            continue
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        convert = actions[dest].type
        if convert is not None and value is not None:
            try:
                value = convert(value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
        out[dest] = value
    return out


def parse(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        subparser.set_defaults(**_load_config(args.config, subparser, args.command))
        args = parser.parse_args(argv)
    return args


def _resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config", "out")}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse(argv)
        out = Path(args.out or os.environ.get(OUTPUT_ENV) or ".")
        run = _Run(args.command, _resolved_config(args), out)
        COMMANDS[args.command][0](args, run)
        manifest = run.commit()
    except DimerChainError as exc:
        print(json.dumps({"error": exc.to_dict(), "exit_code": exc.exit_code}), file=sys.stderr)
        return exc.exit_code
    print(json.dumps({"out": str(out), "run_id": manifest["run_id"], "summary": manifest["summary"]}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
