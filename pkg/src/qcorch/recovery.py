"""The two bounded feedback loops: input-debug (generate, submit, repair from
solver feedback, resubmit) and imaginary-frequency removal (displace along
the offending mode, regenerate, resubmit)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from qcorch.execution import JobRequest, JobState, wait_all
from qcorch.geometry import displace_along_mode, parse_xyz, write_xyz
from qcorch.orcaio import (
    CalcSpec,
    ErrorDiagnosis,
    KeywordCatalog,
    ParsedOutput,
    parse_normal_modes,
    parse_output,
    render_input,
    validate_spec,
)
from qcorch.orcaio.calcspec import KEYWORD_LINE

DEFAULT_IMAGINARY_THRESHOLD_CM = 15.0
DEFAULT_DISPLACEMENT_AMPLITUDE = 0.3
DEFAULT_MAX_RETRIES = 3

Notify = Callable[[str, str], None]


@dataclass
class RecoveryOutcome:
    status: str  # recovered | accepted_as_is | exhausted
    attempts: int
    final_spec: CalcSpec
    final_job_name: str
    final_output: Optional[ParsedOutput] = None
    final_output_text: str = ""
    repairs: list[str] = field(default_factory=list)
    log: list[str] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return self.status in ("recovered", "accepted_as_is")


def debug_input(
    spec: CalcSpec, diag: ErrorDiagnosis, catalog: Optional[KeywordCatalog] = None
) -> tuple[CalcSpec, bool]:
    """Remove the offending token from the diagnosed location.

    Returns (repaired spec, repaired?); an absent token is a flagged no-op.
    Passing a catalog asserts the repaired spec re-validates clean for the
    removed token.
    """
    token = diag.offending_token
    folded = token.casefold()
    repaired = spec.replace()
    changed = False

    if diag.location.startswith("block("):
        block_name = diag.location[len("block("):-1]
        target = {
            "scf": repaired.scf_block,
            "geom": repaired.geom_block,
            "tddft": repaired.tddft_block,
        }.get(block_name)
        if target:
            for key in list(target):
                if key.casefold() == folded:
                    del target[key]
                    changed = True
    elif diag.location == KEYWORD_LINE:
        if repaired.dispersion and repaired.dispersion.casefold() == folded:
            repaired.dispersion = None
            changed = True
        elif repaired.grid and repaired.grid.casefold() == folded:
            repaired.grid = None
            changed = True
        elif repaired.scf_convergence and repaired.scf_convergence.casefold() == folded:
            repaired.scf_convergence = None
            changed = True
        else:
            kept = [t for t in repaired.approximations if t.casefold() != folded]
            if len(kept) != len(repaired.approximations):
                repaired.approximations = kept
                changed = True

    if changed and catalog is not None:
        leftover = [
            v for v in validate_spec(repaired, catalog) if v.token.casefold() == folded
        ]
        if leftover:
            raise RuntimeError(f"repair did not clear token {token!r}: {leftover}")
    return (repaired, changed)


def check_imaginary(
    output: ParsedOutput, threshold: float = DEFAULT_IMAGINARY_THRESHOLD_CM
) -> list[int]:
    """Indices of imaginary modes whose magnitude exceeds the threshold."""
    if output.frequencies is None:
        raise ValueError("output has no frequencies")
    return [i for i, f in enumerate(output.frequencies) if f < 0 and abs(f) > threshold]


def _run_job(engine, name: str, spec: CalcSpec, workdir: Path, notify: Notify):
    request = JobRequest(
        name=name, workdir=workdir, input_text=render_input(spec), cores=spec.nprocs
    )
    handle = engine.submit(request)
    notify("job_submitted", f"{name} -> {handle.token}")
    status = wait_all(engine, [handle])[0]
    if status.state != JobState.DONE:
        notify("job_failed", f"{name}: {status.detail}")
        return status, ""
    return status, engine.collect(handle)


def next_retry_name(name: str) -> str:
    """Regenerated-job naming: base -> base_removed -> base_removed2 -> ..."""
    stem, sep, suffix = name.rpartition("_removed")
    if sep and (suffix == "" or suffix.isdigit()):
        n = int(suffix) if suffix else 1
        return f"{stem}_removed{n + 1}"
    return f"{name}_removed"


def input_debug_loop(
    engine,
    job_name: str,
    spec: CalcSpec,
    workdir: Path,
    catalog: Optional[KeywordCatalog] = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
    notify: Notify = lambda title, detail: None,
) -> RecoveryOutcome:
    """Submit, and while the solver reports a diagnosable input error, remove
    the offending token and resubmit. Bounded by ``max_retries`` repairs."""
    workdir = Path(workdir)
    outcome = RecoveryOutcome(
        status="exhausted", attempts=0, final_spec=spec, final_job_name=job_name
    )
    current = spec
    for round_idx in range(max_retries + 1):
        status, text = _run_job(engine, job_name, current, workdir, notify)
        if status.state != JobState.DONE:
            outcome.log.append(f"submission failed: {status.detail}")
            outcome.final_spec = current
            return outcome
        parsed = parse_output(text)
        outcome.final_spec = current
        outcome.final_output = parsed
        outcome.final_output_text = text
        if parsed.terminated_normally:
            outcome.status = "recovered" if outcome.attempts else "accepted_as_is"
            outcome.log.append(f"{job_name}: terminated normally after {outcome.attempts} repair(s)")
            return outcome
        diag = parsed.error
        if diag is None or diag.location == "unknown":
            raw = diag.raw_message if diag else "(no diagnosis)"
            outcome.log.append(f"{job_name}: undiagnosable error preserved: {raw}")
            return outcome
        if round_idx == max_retries:
            outcome.log.append(f"{job_name}: retry budget exhausted at {diag.offending_token}")
            return outcome
        repaired, changed = debug_input(current, diag, catalog)
        if not changed:
            outcome.log.append(
                f"{job_name}: token {diag.offending_token} not found in spec (no-op repair)"
            )
            return outcome
        outcome.attempts += 1
        outcome.repairs.append(f"{diag.offending_token} @ {diag.location}")
        notify(
            "input_repair",
            f"{job_name}: removed {diag.offending_token} from {diag.location} "
            f"(repair {outcome.attempts})",
        )
        outcome.log.append(f"repair {outcome.attempts}: removed {diag.offending_token}")
        current = repaired
    return outcome


def imaginary_frequency_loop(
    engine,
    job_name: str,
    spec: CalcSpec,
    workdir: Path,
    initial_output_text: str,
    max_retries: int = DEFAULT_MAX_RETRIES,
    threshold: float = DEFAULT_IMAGINARY_THRESHOLD_CM,
    amplitude: float = DEFAULT_DISPLACEMENT_AMPLITUDE,
    notify: Notify = lambda title, detail: None,
) -> RecoveryOutcome:
    """Remove significant imaginary frequencies by displacing along the most
    negative mode and re-running the identical calculation on the distorted
    geometry (``<base>_distorted.xyz`` -> ``<base>_removed`` and so on)."""
    workdir = Path(workdir)
    current_spec = spec
    current_name = job_name
    current_text = initial_output_text
    outcome = RecoveryOutcome(
        status="exhausted", attempts=0, final_spec=spec, final_job_name=job_name,
        final_output=parse_output(initial_output_text), final_output_text=initial_output_text,
    )

    for round_idx in range(max_retries + 1):
        parsed = parse_output(current_text)
        outcome.final_spec = current_spec
        outcome.final_job_name = current_name
        outcome.final_output = parsed
        outcome.final_output_text = current_text
        if parsed.frequencies is None:
            raise ValueError(f"{current_name}: output has no frequencies")
        offending = check_imaginary(parsed, threshold)
        if not offending:
            outcome.status = "recovered" if outcome.attempts else "accepted_as_is"
            below = [f for f in parsed.frequencies if f < 0]
            note = f"; residual below-threshold modes: {below}" if below else ""
            outcome.log.append(
                f"{current_name}: clean at threshold {threshold} cm^-1 "
                f"after {outcome.attempts} round(s){note}"
            )
            return outcome
        if round_idx == max_retries:
            freqs = [parsed.frequencies[i] for i in offending]
            outcome.log.append(f"{current_name}: still imaginary after {max_retries} rounds: {freqs}")
            return outcome

        # most-negative offending mode drives the displacement
        worst = min(offending, key=lambda i: parsed.frequencies[i])
        modes = {m.index: m for m in parse_normal_modes(current_text)}
        if worst not in modes:
            raise ValueError(f"{current_name}: no displacement vectors for mode {worst}")
        mol = parse_xyz((workdir / current_spec.geometry[2]).read_text())
        charge, mult, _ = current_spec.geometry
        mol.charge, mol.multiplicity = charge, mult
        displaced = displace_along_mode(mol, modes[worst], amplitude)

        distorted_xyz = f"{current_name}_distorted.xyz"
        (workdir / distorted_xyz).write_text(
            write_xyz(displaced, f"displaced along mode {worst} by {amplitude} A")
        )
        next_name = next_retry_name(current_name)
        next_spec = current_spec.with_geometry_file(distorted_xyz)
        outcome.attempts += 1
        notify(
            "mode_displacement",
            f"{current_name}: mode {worst} at {parsed.frequencies[worst]} cm^-1; "
            f"displaced into {distorted_xyz}, resubmitting as {next_name} "
            f"(round {outcome.attempts})",
        )
        outcome.log.append(
            f"round {outcome.attempts}: {parsed.frequencies[worst]} cm^-1 -> {next_name}"
        )

        status, text = _run_job(engine, next_name, next_spec, workdir, notify)
        if status.state != JobState.DONE:
            outcome.log.append(f"{next_name}: submission failed: {status.detail}")
            return outcome
        current_spec, current_name, current_text = next_spec, next_name, text
    return outcome
