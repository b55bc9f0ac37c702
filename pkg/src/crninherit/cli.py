"""Command line interface.

Exit codes: 0 success (including "no orbit detected"), 2 parse or input
errors, 3 enlargement validity failures, 4 numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import corpus
from .dynamics import (
    EquilibriumError,
    IntegrationError,
    ShootingError,
    detect_periodic_orbit,
    find_equilibrium,
    finite_difference_monodromy,
    integrate,
    refine_orbit,
)
from .dynamics.classify import no_orbit_dict
from .enlarge import EnlargementError, compose_enlargements, describe_certificate, epsilon_rate_specs, load_script
from .kinetics import KineticsError, MassActionSystem, reduced_basis
from .network import conservation_basis, network_rank, stoichiometric_matrix
from .parser import NetworkParseError, RateSpec, parse_rate_file, parse_rate_value, serialize_network
from .rational import format_vector
from .verify import VerifyError, load_task, run_inheritance

EXIT_OK, EXIT_PARSE, EXIT_VALIDITY, EXIT_NUMERIC = 0, 2, 3, 4
OUT_ENV = "CRNINHERIT_OUT"


class UsageError(Exception):
    """Bad input detected before any work starts (exit code 2)."""


def _out_dir(args) -> Path:
    d = Path(getattr(args, "outdir", None) or os.environ.get(OUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma separated numbers, got {text!r}") from None


def _load(name: str):
    try:
        return corpus.load_network(name)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None


def _system(args) -> MassActionSystem:
    """Network plus rates: inline values, then --rates file, then --k list."""
    net, specs = _load(args.network)
    specs = dict(specs)
    if args.rates:
        try:
            specs.update(parse_rate_file(corpus.resolve(args.rates, None, ".txt").read_text(encoding="utf-8")))
        except FileNotFoundError as exc:
            raise UsageError(str(exc)) from None
    if args.k:
        values = _floats(args.k, "--k")
        if len(values) != net.n_reactions:
            raise UsageError(f"--k needs {net.n_reactions} values, got {len(values)}")
        specs.update({lab: RateSpec(v) for lab, v in zip(net.labels, values)})
    for item in args.set or []:
        lab, _, val = item.partition("=")
        try:
            specs[lab.strip()] = parse_rate_value(val.strip())
        except ValueError as exc:
            raise UsageError(f"--set {item}: {exc}") from None
    try:
        rates = {lab: spec.resolve(args.eps) for lab, spec in specs.items()}
        return MassActionSystem.from_mapping(net, rates)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip('"')) from None


def _x0(args, sys_: MassActionSystem) -> np.ndarray:
    x0 = np.array(_floats(args.x0, "--x0"))
    if x0.shape != (sys_.n,):
        raise UsageError(f"--x0 needs {sys_.n} values ({', '.join(sys_.net.species)})")
    return x0


def _pairs(specs: Sequence[str], species: Sequence[str]) -> list[tuple[int, int]]:
    out = []
    for s in specs or []:
        a, _, b = s.partition(":")
        try:
            out.append((species.index(a), species.index(b)))
        except ValueError:
            raise UsageError(f"--plot {s}: unknown species") from None
    return out


# -- subcommands -------------------------------------------------------------

def cmd_info(args) -> int:
    net, _ = _load(args.network)
    g = stoichiometric_matrix(net)
    rank = network_rank(net)
    basis = conservation_basis(net)
    if args.json:
        print(json.dumps({"species": list(net.species), "reactions": [r.label for r in net.reactions],
                          "rank": rank, "conservation_basis": [[str(v) for v in w] for w in basis],
                          "stoichiometric_matrix": g.to_strings()}, indent=2))
        return EXIT_OK
    print(f"{net.n_species} species, {net.n_reactions} reactions, rank {rank}")
    print("conservation laws:" if basis else "conservation laws: none")
    for w in basis:
        print("  " + format_vector(w))
    sep = "," if args.csv else "\t"
    print("stoichiometric matrix:")
    print(sep.join(["species", *net.labels]))
    for name, row in zip(net.species, g.to_strings()):
        print(sep.join([name, *row]))
    return EXIT_OK


def cmd_enlarge(args) -> int:
    net, specs = _load(args.network)
    try:
        script = load_script(corpus.script_text(args.script))
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.script}: invalid JSON ({exc})") from None
    try:
        records = compose_enlargements(net, script)
    except EnlargementError as exc:
        print(describe_certificate(exc), file=sys.stderr)
        return EXIT_VALIDITY
    result = records[-1].result if records else net
    rates: dict[str, RateSpec] = {}
    for lab, spec in specs.items():
        rates[lab] = spec
    for rec in records:
        rates = {new: RateSpec(rates[src].coefficient * fac, rates[src].eps_power)
                 for new, (src, fac) in rec.inherited.items() if src in rates}
        if rec.kind == "E6":
            try:
                rates.update(epsilon_rate_specs(rec))
            except EnlargementError:
                pass
    text = serialize_network(result, rates)
    out = _out_dir(args)
    net_path = out / (args.output or "enlarged.net")
    net_path.write_text(text, encoding="utf-8")
    prov = {"base": args.network, "steps": [r.to_dict() for r in records],
            "species": list(result.species), "reactions": len(result.reactions), "rank": network_rank(result)}
    (out / (args.provenance or "provenance.json")).write_text(json.dumps(prov, indent=2), encoding="utf-8")
    print(text, end="")
    print(f"# {result.n_species} species, {result.n_reactions} reactions, rank {network_rank(result)}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sys_ = _system(args)
    x0 = _x0(args, sys_)
    pairs = _pairs(args.plot, sys_.net.species)
    out = _out_dir(args)
    csv_path = out / (args.output or "trajectory.csv")
    try:
        traj = integrate(sys_, x0, args.t, rtol=args.rtol, atol=args.atol, samples=args.samples)
    except IntegrationError as exc:
        part = getattr(exc, "trajectory", None)
        if part is not None:
            csv_path.write_text(part.to_csv(), encoding="utf-8")
            print(f"partial trajectory written to {csv_path}", file=sys.stderr)
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    csv_path.write_text(traj.to_csv(), encoding="utf-8")
    if not args.no_plot:
        from . import plotting

        plotting.time_series(traj.times, traj.states, sys_.net.species, out / "time_series.svg")
        for i, j in pairs:
            a, b = sys_.net.species[i], sys_.net.species[j]
            plotting.projection(traj.after(traj.t_end * args.transient).states, i, j, sys_.net.species,
                                out / f"projection_{a}_{b}.svg")
    print(f"{len(traj.times)} samples written to {csv_path}; conservation drift {traj.drift:.3g}")
    return EXIT_OK


def cmd_orbit(args) -> int:
    sys_ = _system(args)
    x0 = _x0(args, sys_)
    pairs = _pairs(args.plot, sys_.net.species)
    out = _out_dir(args)
    path = out / (args.output or "orbit.json")
    basis = reduced_basis(sys_)
    try:
        traj = integrate(sys_, x0, args.t, rtol=args.rtol, atol=args.atol)
        rough = detect_periodic_orbit(traj, transient=args.transient)
        if not rough.found:
            data = no_orbit_dict(rough.reason)
            if args.equilibrium:
                try:
                    data["equilibrium"] = find_equilibrium(sys_, traj.states[-1], basis).to_dict()
                except EquilibriumError as exc:
                    data["equilibrium"] = {"error": str(exc)}
            path.write_text(json.dumps(data, indent=2), encoding="utf-8")
            print(f"no orbit detected ({rough.reason})")
            return EXIT_OK
        report = refine_orbit(sys_, rough, basis)
    except (IntegrationError, ShootingError, KineticsError) as exc:
        path.write_text(json.dumps({"found": False, "error": str(exc)}, indent=2), encoding="utf-8")
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    data = {"found": True, **report.to_dict(), "rough_period": rough.period}
    if args.fd_check:
        fd = finite_difference_monodromy(sys_, report, basis)
        data["fd_monodromy_rel_error"] = float(np.linalg.norm(fd - report.monodromy) / np.linalg.norm(report.monodromy))
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    if not args.no_plot and pairs:
        from . import plotting

        for i, j in pairs:
            a, b = sys_.net.species[i], sys_.net.species[j]
            plotting.projection(traj.after(traj.t_end * args.transient).states, i, j, sys_.net.species,
                                out / f"orbit_{a}_{b}.svg", highlight=report.samples)
    mods = ", ".join(f"{abs(v):.4g}" for v in report.values)
    print(f"periodic orbit: period {report.period:.10g}, residual {report.residual:.2e}, |multipliers| = [{mods}], "
          f"{report.label}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        task = load_task(args.task)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid task: {exc}") from None
    if args.eps:
        task = type(task)(**{**task.__dict__, "eps_schedule": tuple(_floats(args.eps, "--eps"))})
    out = _out_dir(args)
    try:
        cert = run_inheritance(task)
    except EnlargementError as exc:
        print(describe_certificate(exc), file=sys.stderr)
        return EXIT_VALIDITY
    except VerifyError as exc:
        print(f"verification aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    (out / (args.output or "certificate.json")).write_text(cert.to_json(), encoding="utf-8")
    table = cert.summary_table()
    (out / "summary.tsv").write_text(table, encoding="utf-8")
    if not args.no_plot:
        from . import plotting

        for r in cert.results:
            pts = [(e.eps, e.distance) for e in r.entries if e.found and e.eps > 0]
            if pts:
                plotting.sweep(*zip(*pts), out / f"sweep_{r.index}.svg")
    print(table, end="")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _common_system(p: argparse.ArgumentParser) -> None:
    p.add_argument("network", help="network file or bundled fixture name (R1, R2, ...)")
    p.add_argument("--k", help="comma separated rate constants in reaction order")
    p.add_argument("--rates", help="key-value rate file 'label = value'")
    p.add_argument("--set", action="append", metavar="LABEL=VALUE", help="override one rate constant")
    p.add_argument("--eps", type=float, help="value bound to eps^INT rate expressions")
    p.add_argument("--x0", required=True, help="comma separated initial state")
    p.add_argument("--t", type=float, default=200.0, help="integration horizon")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--transient", type=float, default=0.5, help="fraction of the run discarded as transient")
    p.add_argument("--plot", action="append", metavar="A:B", help="projection onto species A and B (SVG)")
    p.add_argument("--no-plot", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crninherit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="counts, rank, conservation laws and stoichiometric matrix")
    p.add_argument("network")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true", help="comma delimited matrix (default tab)")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("enlarge", help="apply an enlargement script")
    p.add_argument("network")
    p.add_argument("script")
    p.add_argument("-o", "--output", help="enlarged network file name")
    p.add_argument("--provenance", help="provenance JSON file name")
    p.add_argument("--outdir", help=f"output directory (default ${OUT_ENV} or the current directory)")
    p.set_defaults(func=cmd_enlarge)

    p = sub.add_parser("simulate", help="integrate and write a trajectory CSV")
    _common_system(p)
    p.add_argument("--samples", type=int)
    p.add_argument("-o", "--output", help="CSV file name")
    p.add_argument("--outdir", help=f"output directory (default ${OUT_ENV} or the current directory)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("orbit", help="detect and refine a periodic orbit")
    _common_system(p)
    p.add_argument("--fd-check", action="store_true", help="compare with a finite-difference monodromy")
    p.add_argument("--equilibrium", action="store_true", help="refine an equilibrium when no orbit is found")
    p.add_argument("-o", "--output", help="JSON file name")
    p.add_argument("--outdir", help=f"output directory (default ${OUT_ENV} or the current directory)")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("verify", help="run an inheritance task")
    p.add_argument("task", help="task JSON file or bundled task name")
    p.add_argument("--eps", help="override the eps schedule (comma separated, decreasing)")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("-o", "--output", help="certificate file name")
    p.add_argument("--outdir", help=f"output directory (default ${OUT_ENV} or the current directory)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NetworkParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EnlargementError as exc:
        print(describe_certificate(exc), file=sys.stderr)
        return EXIT_VALIDITY


if __name__ == "__main__":
    sys.exit(main())
