"""Headless entry points: run a scripted/live task, post-analysis over energy
tables, trace export, tool-catalog dump, and the session service.

Exit codes: 0 ok, 2 configuration problem, 3 step budget exhausted,
4 recovery exhausted / run failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from qcorch import thermo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_FAILED = 4


def _read_task(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text().strip()
    return value


def cmd_run(args) -> int:
    from qcorch.config import ConfigError, build_session, load_config
    from qcorch.trace import export_notebook, validate_notebook

    try:
        config = load_config(args.config)
        if args.backend:
            config.backend["kind"] = args.backend
        session = build_session(config, args.session_id, Path(args.workdir))
    except (ConfigError, FileNotFoundError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    result = session.run(_read_task(args.task))
    print(json.dumps(result.to_dict(), indent=2))

    if args.export_trace:
        document = export_notebook(session.trace)
        validate_notebook(document)
        Path(args.export_trace).write_text(json.dumps(document, indent=1))
        print(f"trace notebook written to {args.export_trace}", file=sys.stderr)

    if result.status == "budget_exceeded":
        return EXIT_BUDGET
    if result.status == "failed":
        return EXIT_FAILED
    return EXIT_OK


def _load_records(path: str):
    return thermo.parse_energy_table(Path(path).read_text())


def _print(table: str):
    print(table)


def cmd_analyze(args) -> int:
    mode = args.mode
    if mode == "pka":
        if args.delta_g is not None:
            dg = args.delta_g
        else:
            if not (args.input and args.acid and args.anion):
                print("pka needs --delta-g or --input with --acid/--anion", file=sys.stderr)
                return EXIT_CONFIG
            records = _load_records(args.input)
            g_proton = thermo.DEFAULT_PROTON_GIBBS_EH
            if args.proton:
                rec = records[args.proton]
                g_proton = rec.gibbs if rec.gibbs is not None else rec.get("E")
            dg = thermo.deprotonation_delta_g(
                records[args.acid].get("G"), records[args.anion].get("G"), g_proton
            )
        pka = thermo.pka_from_delta_g(dg)
        _print(
            thermo.format_table(
                ["deprotonation dG (kcal/mol)", "pKa"], [(f"{dg:.2f}", f"{pka:.2f}")]
            )
        )
        return EXIT_OK

    if mode == "calibrate-pka":
        records = _load_records(args.input)
        refs = []
        for item in args.refs.split(","):
            acid, anion, pka_exp = item.split(":")
            rec = records[args.proton] if args.proton else None
            g_proton = (
                (rec.gibbs if rec.gibbs is not None else rec.get("E"))
                if rec
                else thermo.DEFAULT_PROTON_GIBBS_EH
            )
            dg = thermo.deprotonation_delta_g(
                records[acid].get("G"), records[anion].get("G"), g_proton
            )
            refs.append((acid, dg, float(pka_exp)))
        corrections, mean_corr = thermo.calibrate_proton_correction(
            [(dg, pka) for _, dg, pka in refs]
        )
        rows = [
            (acid, f"{dg:.2f}", f"{pka:.3f}", f"{corr:.2f}")
            for (acid, dg, pka), corr in zip(refs, corrections)
        ]
        _print(
            thermo.format_table(
                ["reference acid", "dG raw (kcal/mol)", "pKa exp", "correction"], rows
            )
        )
        print(f"mean proton-solvation correction: {mean_corr:.2f} kcal/mol")
        if args.target:
            acid, anion = args.target.split(":")
            rec = records[args.proton] if args.proton else None
            g_proton = (
                (rec.gibbs if rec.gibbs is not None else rec.get("E"))
                if rec
                else thermo.DEFAULT_PROTON_GIBBS_EH
            )
            dg_target = thermo.deprotonation_delta_g(
                records[acid].get("G"), records[anion].get("G"), g_proton
            )
            preds, mean_pred = thermo.predict_pka(dg_target, corrections)
            rows = [
                (ref_acid, f"{p:.2f}") for (ref_acid, _, _), p in zip(refs, preds)
            ]
            _print(thermo.format_table(["using reference", "predicted pKa"], rows))
            print(f"target dG raw: {dg_target:.2f} kcal/mol")
            print(f"mean predicted pKa: {mean_pred:.2f}")
        return EXIT_OK

    if mode == "ring-strain":
        records = _load_records(args.input)
        series = thermo.ring_series_from_records(records)
        prop = args.property
        deltas = thermo.ring_reaction_deltas(series, prop)
        strain = thermo.ring_strain(series, args.reference, prop)
        _print(
            thermo.format_table(
                ["n", f"reaction d{prop} (kcal/mol)"],
                [(n, f"{v:.2f}") for n, v in deltas.items()],
            )
        )
        print()
        _print(
            thermo.format_table(
                ["ring size", f"strain {prop} (kcal/mol)"],
                [(n, f"{v:.2f}") for n, v in strain.items()],
            )
        )
        return EXIT_OK

    if mode == "reaction":
        records = _load_records(args.input)
        rxn = thermo.Reaction(
            reactants=[(label, 1) for label in args.reactants.split(",")],
            products=[(label, 1) for label in args.products.split(",")],
        )
        value = thermo.reaction_delta(records, rxn, args.property)
        _print(
            thermo.format_table(
                ["reaction", f"d{args.property} (kcal/mol)"],
                [(f"{args.reactants} -> {args.products}", f"{value:.2f}")],
            )
        )
        return EXIT_OK

    if mode == "relative":
        records = _load_records(args.input)
        entries = []
        for label, rec in records.items():
            entries.append((label, rec.get(args.property)))
        rel = sorted(thermo.relative_energies(entries), key=lambda t: t[1])
        _print(
            thermo.format_table(
                ["label", "relative (kcal/mol)"], [(l, f"{v:.2f}") for l, v in rel]
            )
        )
        return EXIT_OK

    print(f"unknown analyze mode {mode!r}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_export_trace(args) -> int:
    from qcorch.trace import Trace, export_log, export_notebook, validate_notebook

    trace_dir = Path(args.session_dir) / "trace"
    if not trace_dir.exists():
        print(f"no trace at {trace_dir}", file=sys.stderr)
        return EXIT_CONFIG
    trace = Trace.load(trace_dir)
    if args.format == "notebook":
        document = export_notebook(trace)
        validate_notebook(document)
        output = args.output or "trace.ipynb"
        Path(output).write_text(json.dumps(document, indent=1))
    else:
        output = args.output or "trace.log"
        Path(output).write_text(export_log(trace))
    print(f"exported {args.format} to {output}")
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.kind == "tools":
        from qcorch.orcaio import default_catalog
        from qcorch.toolkit import Services, build_registry

        services = Services(
            workdir=Path("."), engine=None, catalog=default_catalog(), spec_presets={}
        )
        print(json.dumps(build_registry(services).catalog(), indent=2))
    else:
        from qcorch.orcaio import default_catalog

        catalog = default_catalog()
        print(
            json.dumps(
                {
                    "keyword_line": sorted(catalog.keyword_line_allowed),
                    "blocks": {k: sorted(v) for k, v in catalog.block_allowed.items()},
                    "nprocs_range": [catalog.nprocs_min, catalog.nprocs_max],
                    "maxcore_default": catalog.maxcore_default,
                },
                indent=2,
            )
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    from qcorch.service import serve

    serve(args.config, args.sessions_dir, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcorch",
        description="Hierarchical agent orchestration for quantum-chemistry workflows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a task through a configured session")
    run.add_argument("task", help="task text, or @file to read it from a file")
    run.add_argument("--config", required=True, help="session config JSON")
    run.add_argument("--workdir", required=True, help="session directory to create/use")
    run.add_argument("--backend", choices=["scripted", "live"], help="override backend kind")
    run.add_argument("--session-id", default="cli")
    run.add_argument("--export-trace", metavar="FILE", help="write the notebook export here")
    run.set_defaults(fn=cmd_run)

    analyze = sub.add_parser("analyze", help="post-analysis over energy tables")
    analyze.add_argument(
        "mode", choices=["pka", "calibrate-pka", "ring-strain", "reaction", "relative"]
    )
    analyze.add_argument("--input", help="energy table (columns: label, E, H, G)")
    analyze.add_argument("--delta-g", type=float, help="pka: free energy in kcal/mol")
    analyze.add_argument("--acid", help="pka: acid record label")
    analyze.add_argument("--anion", help="pka: anion record label")
    analyze.add_argument("--proton", help="proton record label (default: calibrated constant)")
    analyze.add_argument("--refs", help="calibrate-pka: acid:anion:pka_exp[,...]")
    analyze.add_argument("--target", help="calibrate-pka: acid:anion to predict")
    analyze.add_argument("--reference", type=int, default=6, help="ring-strain: zero-strain n")
    analyze.add_argument("--property", default="H", choices=["E", "H", "G"])
    analyze.add_argument("--reactants", help="reaction: comma-separated labels")
    analyze.add_argument("--products", help="reaction: comma-separated labels")
    analyze.set_defaults(fn=cmd_analyze)

    export = sub.add_parser("export-trace", help="export a stored session trace")
    export.add_argument("session_dir", help="session directory (contains trace/)")
    export.add_argument("--format", choices=["notebook", "log"], default="notebook")
    export.add_argument("--output", help="output file")
    export.set_defaults(fn=cmd_export_trace)

    catalog = sub.add_parser("catalog", help="dump the tool or keyword catalog")
    catalog.add_argument("kind", choices=["tools", "keywords"])
    catalog.set_defaults(fn=cmd_catalog)

    serve_cmd = sub.add_parser("serve", help="run the session service")
    serve_cmd.add_argument("--config", required=True)
    serve_cmd.add_argument("--sessions-dir", required=True)
    serve_cmd.add_argument("--host", default="127.0.0.1")
    serve_cmd.add_argument("--port", type=int, default=8471)
    serve_cmd.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
