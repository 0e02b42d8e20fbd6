"""Typed tool handlers exposed to agents: file I/O, geometry, input
synthesis/validation, job submission with both recovery loops, output
queries, and post-analysis. Mirrors the deployed tool catalog."""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from qcorch import thermo
from qcorch.execution import JobRequest, JobState, submit_batch, wait_all
from qcorch.geometry import parse_xyz
from qcorch.memory import GlobalMemory
from qcorch.orcaio import (
    CalcSpec,
    KeywordCatalog,
    extract_property,
    parse_output,
    render_input,
    validate_spec,
)
from qcorch.recovery import (
    check_imaginary,
    imaginary_frequency_loop,
    input_debug_loop,
)
from qcorch.tools import Parameter, ToolRegistry, ToolResult, ToolSpec

STATE_FILENAME = "job_state.json"


@dataclass
class Services:
    """Everything tool handlers need from the owning session."""

    workdir: Path
    engine: Any
    catalog: KeywordCatalog
    global_memory: Optional[GlobalMemory] = None
    spec_presets: dict[str, dict] = field(default_factory=dict)
    notify: Callable[[str, str], None] = lambda title, detail: None
    mark_degraded: Callable[[str], None] = lambda reason: None
    author: str = "tool"

    def resolve(self, path: str) -> Path:
        """Resolve a path inside the session workdir, rejecting escapes."""
        candidate = (self.workdir / path).resolve()
        root = self.workdir.resolve()
        if candidate != root and root not in candidate.parents:
            raise PermissionError(f"path {path!r} escapes the session workdir")
        return candidate

    def preset(self, name: str) -> CalcSpec:
        if name not in self.spec_presets:
            raise KeyError(f"unknown calculation preset {name!r}")
        return CalcSpec.from_dict(self.spec_presets[name])


def _load_state(services: Services, job_name: str) -> dict:
    path = services.resolve(job_name) / STATE_FILENAME
    return json.loads(path.read_text())


def _save_state(services: Services, job_name: str, state: dict):
    path = services.resolve(job_name) / STATE_FILENAME
    path.write_text(json.dumps(state, indent=2))


def _job_spec(services: Services, job: dict) -> CalcSpec:
    if "preset" in job:
        spec = services.preset(job["preset"])
    else:
        spec = CalcSpec.from_dict(job["spec"])
    if "xyz" in job:
        spec = spec.with_geometry_file(Path(job["xyz"]).name)
    return spec


def _prepare_job_dir(services: Services, job: dict) -> Path:
    job_dir = services.resolve(job["name"])
    job_dir.mkdir(parents=True, exist_ok=True)
    if "xyz" in job:
        source = services.resolve(job["xyz"])
        target = job_dir / source.name
        if source != target:
            shutil.copyfile(source, target)
    return job_dir


def build_registry(services: Services) -> ToolRegistry:
    registry = ToolRegistry()

    def tool(name, description, parameters=(), reentrant=True):
        def wrap(fn):
            registry.register(
                ToolSpec(
                    name=name,
                    description=description,
                    parameters=[Parameter(*p) for p in parameters],
                    handler=fn,
                    reentrant=reentrant,
                )
            )
            return fn

        return wrap

    # -- memory ---------------------------------------------------------------

    @tool(
        "update_global_memory",
        "Appends a note to the session-wide shared memory.",
        [("text", "str")],
    )
    def update_global_memory(text):
        if services.global_memory is None:
            return ToolResult(ok=False, payload=None, summary="no global memory attached")
        try:
            entry = services.global_memory.append(services.author, text)
        except OSError as e:
            services.mark_degraded(f"global memory append failed: {e}")
            return ToolResult(
                ok=False,
                payload={"error": str(e)},
                summary=f"storage failure, session degraded: {e}",
            )
        return ToolResult(
            ok=True,
            payload={"seq": entry.seq},
            summary=f"global memory entry {entry.seq} recorded: {text[:400]}",
        )

    # -- file I/O ---------------------------------------------------------------

    @tool("list_dir", "Lists a directory inside the session workdir.", [("path", "str", False)])
    def list_dir(path="."):
        target = services.resolve(path)
        names = sorted(p.name + ("/" if p.is_dir() else "") for p in target.iterdir())
        return ToolResult(
            ok=True, payload=names, summary=f"{path}: {len(names)} entries: {', '.join(names[:20])}"
        )

    @tool("read_file", "Reads a text file from the session workdir.", [("path", "str")])
    def read_file(path):
        text = services.resolve(path).read_text()
        return ToolResult(ok=True, payload=text, summary=f"read {path} ({len(text)} bytes)")

    @tool(
        "write_text_file",
        "Writes a text file inside the session workdir.",
        [("path", "str"), ("content", "str")],
    )
    def write_text_file(path, content):
        target = services.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content)
        return ToolResult(
            ok=True,
            payload={"path": path, "bytes": len(content)},
            summary=f"[written] {path} ({len(content)} bytes)",
            artifacts=[str(target)],
        )

    # -- geometry ---------------------------------------------------------------

    @tool("parse_xyz_file", "Parses an XYZ file and reports the atom table.", [("path", "str")])
    def parse_xyz_file(path):
        mol = parse_xyz(services.resolve(path).read_text())
        atoms = [[el, x, y, z] for el, x, y, z in mol.atoms]
        return ToolResult(
            ok=True,
            payload={"atom_count": len(mol), "atoms": atoms},
            summary=f"{path}: {len(mol)} atoms ({', '.join(a[0] for a in mol.atoms[:10])})",
        )

    # -- input synthesis ---------------------------------------------------------

    @tool(
        "validate_job_spec",
        "Checks a calculation preset against the allowed-keyword catalog.",
        [("preset", "str")],
    )
    def validate_job_spec(preset):
        spec = services.preset(preset)
        violations = [str(v) for v in validate_spec(spec, services.catalog)]
        ok = not violations
        return ToolResult(
            ok=True,
            payload={"violations": violations},
            summary="validation clean" if ok else f"violations: {'; '.join(violations)}",
        )

    @tool(
        "prepare_job_inputs",
        "Renders solver inputs for a batch of jobs into per-job folders.",
        [("jobs", "list"), ("label", "str")],
    )
    def prepare_job_inputs(jobs, label):
        written = []
        texts = []
        for job in jobs:
            job_dir = _prepare_job_dir(services, job)
            spec = _job_spec(services, job)
            text = render_input(spec)
            (job_dir / f"{job['name']}.inp").write_text(text)
            _save_state(
                services,
                job["name"],
                {"spec": spec.to_dict(), "job_name": job["name"], "status": "prepared"},
            )
            written.append(f"{job['name']}/{job['name']}.inp")
            texts.append(f"--- {job['name']}.inp ---\n{text}")
        return ToolResult(
            ok=True,
            payload="\n".join(texts),
            summary=f"[prepared] {label}: {len(written)} input(s): {', '.join(written)}",
            artifacts=written,
        )

    @tool(
        "submit_and_recover",
        "Submits prepared jobs, repairing diagnosable input errors from "
        "solver feedback and resubmitting (bounded retries).",
        [("jobs", "list"), ("max_retries", "int", False)],
        reentrant=False,
    )
    def submit_and_recover(jobs, max_retries=3):
        lines = []
        details = []
        all_ok = True
        for job in jobs:
            job_dir = services.resolve(job["name"])
            state = _load_state(services, job["name"])
            spec = CalcSpec.from_dict(state["spec"])
            outcome = input_debug_loop(
                services.engine,
                job["name"],
                spec,
                job_dir,
                catalog=services.catalog,
                max_retries=max_retries,
                notify=services.notify,
            )
            state.update(
                {
                    "spec": outcome.final_spec.to_dict(),
                    "job_name": outcome.final_job_name,
                    "status": outcome.status,
                    "repairs": outcome.repairs,
                    "output_file": f"{outcome.final_job_name}.out",
                }
            )
            _save_state(services, job["name"], state)
            ok = outcome.succeeded
            all_ok = all_ok and ok
            lines.append(
                f"{job['name']}: {'done' if ok else outcome.status}"
                + (f" ({outcome.attempts} repair(s): {', '.join(outcome.repairs)})" if outcome.repairs else "")
            )
            # the collected final output stays with this agent's context;
            # only the one-line digest travels upward
            details.append(
                f"=== {job['name']} ===\n"
                + "\n".join(outcome.log)
                + f"\ncollected output:\n{outcome.final_output_text}\n"
            )
        return ToolResult(
            ok=all_ok,
            payload="\n".join(details),
            summary="; ".join(lines),
            artifacts=[f"{j['name']}/{STATE_FILENAME}" for j in jobs],
        )

    @tool(
        "check_imaginary_modes",
        "Lists significant imaginary frequencies in a solver output.",
        [("path", "str"), ("threshold", "float", False)],
    )
    def check_imaginary_modes(path, threshold=15.0):
        parsed = parse_output(services.resolve(path).read_text())
        offending = check_imaginary(parsed, threshold)
        freqs = [parsed.frequencies[i] for i in offending]
        return ToolResult(
            ok=True,
            payload={"offending_modes": offending, "frequencies": freqs},
            summary=(
                f"{path}: imaginary modes {offending} at {freqs} cm^-1"
                if offending
                else f"{path}: no imaginary frequencies above {threshold} cm^-1"
            ),
        )

    @tool(
        "fix_imaginary_modes",
        "Removes significant imaginary frequencies by displacing along the "
        "offending mode and re-running the identical calculation.",
        [("jobs", "list"), ("max_retries", "int", False), ("threshold", "float", False)],
        reentrant=False,
    )
    def fix_imaginary_modes(jobs, max_retries=3, threshold=15.0):
        lines = []
        details = []
        all_ok = True
        reruns = 0
        for job in jobs:
            job_dir = services.resolve(job["name"])
            state = _load_state(services, job["name"])
            output_text = (job_dir / state["output_file"]).read_text()
            outcome = imaginary_frequency_loop(
                services.engine,
                state["job_name"],
                CalcSpec.from_dict(state["spec"]),
                job_dir,
                initial_output_text=output_text,
                max_retries=max_retries,
                threshold=threshold,
                notify=services.notify,
            )
            state.update(
                {
                    "spec": outcome.final_spec.to_dict(),
                    "job_name": outcome.final_job_name,
                    "status": outcome.status,
                    "output_file": f"{outcome.final_job_name}.out",
                }
            )
            _save_state(services, job["name"], state)
            reruns += outcome.attempts
            all_ok = all_ok and outcome.succeeded
            lines.append(f"{job['name']}: {outcome.status} after {outcome.attempts} round(s)")
            tail = "\n".join(outcome.final_output_text.splitlines()[-40:])
            details.append(
                f"=== {job['name']} ===\n" + "\n".join(outcome.log) + f"\nfinal output tail:\n{tail}\n"
            )
        headline = (
            f"imaginary modes cleared ({reruns} reoptimization(s))"
            if all_ok
            else "imaginary-mode removal exhausted on some jobs"
        )
        return ToolResult(
            ok=all_ok,
            payload="\n".join(details),
            summary=f"{headline}; " + "; ".join(lines),
        )

    @tool(
        "submit_job_batch",
        "Submits raw prepared inputs in parallel (serial fallback on batch "
        "failure) and waits for completion.",
        [("jobs", "list")],
        reentrant=False,
    )
    def submit_job_batch(jobs):
        requests = []
        for job in jobs:
            job_dir = services.resolve(job["name"])
            text = (job_dir / f"{job['name']}.inp").read_text()
            requests.append(
                JobRequest(job["name"], job_dir, text, cores=int(job.get("cores", 1)))
            )
        result = submit_batch(services.engine, requests, on_event=services.notify)
        handles = [h for h in result.handles if h is not None]
        statuses = wait_all(services.engine, handles)
        done = sum(1 for s in statuses if s.state == JobState.DONE)
        summary = f"batch: {done}/{len(jobs)} done"
        if result.fell_back_to_serial:
            summary += " (serial fallback engaged)"
        return ToolResult(
            ok=done == len(jobs),
            payload={
                "states": {s.handle.name: s.state for s in statuses},
                "fell_back_to_serial": result.fell_back_to_serial,
                "failures": result.failures,
            },
            summary=summary,
        )

    # -- output queries -----------------------------------------------------------

    @tool(
        "query_output",
        "Queries a solver output file for a documented property key.",
        [("path", "str"), ("key", "str")],
    )
    def query_output(path, key):
        parsed = parse_output(services.resolve(path).read_text())
        value = extract_property(parsed, key)
        return ToolResult(
            ok=True,
            payload={"key": key, "value": str(value)},
            summary=f"{path}: {key} = {value}",
        )

    # -- post-analysis ---------------------------------------------------------------

    @tool(
        "rank_conformers",
        "Ranks conformers by the final electronic energy of their outputs.",
        [("outputs", "list")],
    )
    def rank_conformers(outputs):
        entries = []
        for item in outputs:
            parsed = parse_output(services.resolve(item["path"]).read_text())
            if parsed.scf_energy is None:
                return ToolResult(
                    ok=False,
                    payload={"missing": item["path"]},
                    summary=f"no final energy in {item['path']}",
                )
            entries.append((item["label"], parsed.scf_energy))
        rel = thermo.relative_energies(entries)
        ordered = sorted(rel, key=lambda t: t[1])
        table = thermo.format_table(
            ["conformer", "relative kcal/mol"],
            [(label, f"{value:.2f}") for label, value in ordered],
        )
        most_stable = ordered[0][0]
        return ToolResult(
            ok=True,
            payload=table,
            summary=(
                f"[ranking] most stable: {most_stable}; "
                + ", ".join(f"{label}={value:.2f}" for label, value in ordered)
            ),
        )

    @tool(
        "compute_pka",
        "pKa from a deprotonation free energy in kcal/mol.",
        [("delta_g_kcal", "float")],
    )
    def compute_pka(delta_g_kcal):
        value = thermo.pka_from_delta_g(delta_g_kcal)
        return ToolResult(
            ok=True,
            payload={"pka": value},
            summary=f"[pka] dG {delta_g_kcal} kcal/mol -> pKa {value:.2f}",
        )

    @tool(
        "compute_deprotonation",
        "Deprotonation free energy (kcal/mol) from acid/anion Gibbs energies "
        "in an energy table (proton defaults to the calibrated constant).",
        [("table_path", "str"), ("acid", "str"), ("anion", "str"), ("proton", "str", False)],
    )
    def compute_deprotonation(table_path, acid, anion, proton=None):
        records = thermo.parse_energy_table(services.resolve(table_path).read_text())
        g_acid = records[acid].get("G")
        g_anion = records[anion].get("G")
        if proton:
            rec = records[proton]
            g_proton = rec.gibbs if rec.gibbs is not None else rec.get("E")
        else:
            g_proton = thermo.DEFAULT_PROTON_GIBBS_EH
        dg = thermo.deprotonation_delta_g(g_acid, g_anion, g_proton)
        return ToolResult(
            ok=True,
            payload={"delta_g_kcal": dg},
            summary=f"[deprotonation] {acid} -> {anion}: dG = {dg:.2f} kcal/mol",
        )

    return registry
