"""Job execution: core allocation, batch submission with serial fallback,
status polling. Backends: a fixture-backed mock engine (deterministic) and a
thin workload-manager shell adapter behind the same interface.

``QCORCH_ENGINE`` selects the backend ({mock, shell}) when building from
config without an explicit choice.
"""

from __future__ import annotations

import hashlib
import os
import re
import subprocess
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, Union

ENGINE_ENV = "QCORCH_ENGINE"

CORE_TIERS = {"gas": 8, "implicit": 16, "explicit_cluster": 24}
_TIER_ORDER = [8, 16, 24]
LARGE_SYSTEM_ATOMS = 60
MAX_CORES = 24


def allocate_cores(atom_count: int, solvation: str, node_cores: int) -> int:
    """Core allocation by solvation tier (gas 8, implicit 16, explicit 24),
    bumped one tier for systems over 60 atoms, clamped to the node."""
    if node_cores < 1:
        raise ValueError("node_cores must be >= 1")
    if solvation not in CORE_TIERS:
        raise ValueError(f"unknown solvation {solvation!r}; expected one of {sorted(CORE_TIERS)}")
    cores = CORE_TIERS[solvation]
    if atom_count > LARGE_SYSTEM_ATOMS:
        idx = _TIER_ORDER.index(cores)
        cores = _TIER_ORDER[min(idx + 1, len(_TIER_ORDER) - 1)]
    return max(1, min(cores, MAX_CORES, node_cores))


@dataclass
class JobRequest:
    name: str
    workdir: Path
    input_text: str
    cores: int = 1
    expected_outputs: Sequence[str] = ()

    def __post_init__(self):
        self.workdir = Path(self.workdir)
        if self.cores < 1:
            raise ValueError("cores must be >= 1")
        if not self.workdir.exists():
            raise ValueError(f"workdir {self.workdir} does not exist")

    @property
    def input_path(self) -> Path:
        return self.workdir / f"{self.name}.inp"

    @property
    def output_path(self) -> Path:
        return self.workdir / f"{self.name}.out"


@dataclass(frozen=True)
class JobHandle:
    backend: str
    name: str
    token: str  # backend-specific id


class JobState:
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


@dataclass
class JobStatus:
    handle: JobHandle
    state: str
    detail: str = ""


class UnknownHandleError(KeyError):
    pass


class Engine(Protocol):
    def submit(self, job: JobRequest) -> JobHandle: ...

    def poll(self, handle: JobHandle) -> JobStatus: ...

    def collect(self, handle: JobHandle) -> str: ...


def normalize_input(text: str) -> str:
    """Normalization for fixture lookup: strip comment lines and trailing
    whitespace, drop trailing blank lines."""
    lines = []
    for line in text.splitlines():
        if line.lstrip().startswith("#"):
            continue
        lines.append(line.rstrip())
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines) + "\n"


def input_hash(text: str) -> str:
    return hashlib.sha256(normalize_input(text).encode("utf-8")).hexdigest()


class BatchSubmissionError(RuntimeError):
    """Batch-level failure: parallel submission infrastructure broke (as
    opposed to one job being rejected)."""


@dataclass
class _MockJob:
    request: JobRequest
    polls: int = 0
    failed_reason: Optional[str] = None
    output: Optional[str] = None


class MockEngine:
    """Fixture-backed engine: a pure function of (normalized input text,
    per-hash round counter).

    The fixture map sends an input hash to one or more output files; the
    n-th submission of the same normalized input consumes the n-th entry
    (the last repeats). Status advances deterministically
    queued -> running -> done on successive polls.
    """

    backend_name = "mock"

    def __init__(self, fixtures_root: Union[str, Path], fixture_map: dict[str, list[str]]):
        self.fixtures_root = Path(fixtures_root)
        self.fixture_map = {h: list(paths) for h, paths in fixture_map.items()}
        self._jobs: dict[str, _MockJob] = {}
        self._rounds: dict[str, int] = {}
        self._lock = threading.Lock()
        self._batch_failure_after: Optional[int] = None
        self._batch_submitted = 0

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_map_file(cls, path: Union[str, Path]) -> "MockEngine":
        """Load the documented map format: lines of ``<hash> <fixture path>``
        (paths relative to the map file's directory)."""
        path = Path(path)
        mapping: dict[str, list[str]] = {}
        for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                digest, rel = line.split(None, 1)
            except ValueError:
                raise ValueError(f"fixture map line {lineno}: expected '<hash> <path>'") from None
            mapping.setdefault(digest, []).append(rel)
        return cls(path.parent, mapping)

    @classmethod
    def from_fixture_dir(cls, root: Union[str, Path]) -> "MockEngine":
        """Build the map by hashing every ``*.inp`` next to its ``*.out``
        in the ``<job>/<job>.out`` fixture layout."""
        root = Path(root)
        mapping: dict[str, list[str]] = {}
        for inp in sorted(root.rglob("*.inp")):
            out = inp.with_suffix(".out")
            if not out.exists():
                continue
            digest = input_hash(inp.read_text())
            mapping.setdefault(digest, []).append(str(out.relative_to(root)))
        return cls(root, mapping)

    # -- failure injection (tests) --------------------------------------------

    def inject_batch_failure_after(self, n: int):
        """Make the next parallel batch submission fail after n jobs."""
        self._batch_failure_after = n
        self._batch_submitted = 0

    # -- engine interface ------------------------------------------------------

    def submit(self, job: JobRequest, _parallel: bool = False) -> JobHandle:
        with self._lock:
            if _parallel and self._batch_failure_after is not None:
                if self._batch_submitted >= self._batch_failure_after:
                    self._batch_failure_after = None
                    raise BatchSubmissionError(
                        f"injected batch infrastructure failure after {self._batch_submitted} jobs"
                    )
                self._batch_submitted += 1

            job.workdir.mkdir(parents=True, exist_ok=True)
            job.input_path.write_text(job.input_text)
            digest = input_hash(job.input_text)
            token = f"{digest[:12]}-{self._rounds.get(digest, 0)}"
            handle = JobHandle(self.backend_name, job.name, token)
            mock = _MockJob(request=job)
            paths = self.fixture_map.get(digest)
            if not paths:
                mock.failed_reason = (
                    f"no fixture mapped for input hash {digest[:12]} (job {job.name})"
                )
            else:
                round_idx = min(self._rounds.get(digest, 0), len(paths) - 1)
                self._rounds[digest] = self._rounds.get(digest, 0) + 1
                fixture = self.fixtures_root / paths[round_idx]
                if not fixture.exists():
                    mock.failed_reason = f"fixture file missing: {fixture}"
                else:
                    mock.output = fixture.read_text()
            self._jobs[token] = mock
            return handle

    def poll(self, handle: JobHandle) -> JobStatus:
        with self._lock:
            if handle.token not in self._jobs:
                raise UnknownHandleError(f"unknown handle {handle}")
            job = self._jobs[handle.token]
            job.polls += 1
            if job.failed_reason is not None:
                return JobStatus(handle, JobState.FAILED, job.failed_reason)
            if job.polls == 1:
                return JobStatus(handle, JobState.QUEUED)
            if job.polls == 2:
                return JobStatus(handle, JobState.RUNNING)
            # completion writes the output file, so "done => output exists"
            job.request.output_path.write_text(job.output or "")
            return JobStatus(handle, JobState.DONE)

    def collect(self, handle: JobHandle) -> str:
        with self._lock:
            if handle.token not in self._jobs:
                raise UnknownHandleError(f"unknown handle {handle}")
            job = self._jobs[handle.token]
            if job.failed_reason is not None:
                raise RuntimeError(f"job {handle.name} failed: {job.failed_reason}")
            job.request.output_path.write_text(job.output or "")
            return job.output or ""


class ShellEngine:
    """Workload-manager adapter shelling out with configurable command
    templates (sbatch-style submit, squeue-style poll). Templates receive
    ``{input}``, ``{name}``, ``{cores}`` / ``{token}`` placeholders."""

    backend_name = "shell"

    def __init__(
        self,
        submit_template: str = "sbatch --parsable -J {name} -n {cores} --wrap 'orca {input} > {output}'",
        poll_template: str = "squeue -h -j {token} -o %T",
    ):
        self.submit_template = submit_template
        self.poll_template = poll_template
        self._jobs: dict[str, JobRequest] = {}

    def submit(self, job: JobRequest, _parallel: bool = False) -> JobHandle:
        job.workdir.mkdir(parents=True, exist_ok=True)
        job.input_path.write_text(job.input_text)
        cmd = self.submit_template.format(
            input=job.input_path.name,
            output=job.output_path.name,
            name=job.name,
            cores=job.cores,
        )
        proc = subprocess.run(
            cmd, shell=True, cwd=job.workdir, capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise BatchSubmissionError(f"submit command failed: {proc.stderr.strip()}")
        token = proc.stdout.strip().splitlines()[0] if proc.stdout.strip() else job.name
        self._jobs[token] = job
        return JobHandle(self.backend_name, job.name, token)

    def poll(self, handle: JobHandle) -> JobStatus:
        if handle.token not in self._jobs:
            raise UnknownHandleError(f"unknown handle {handle}")
        job = self._jobs[handle.token]
        cmd = self.poll_template.format(token=handle.token, name=handle.name)
        proc = subprocess.run(
            cmd, shell=True, cwd=job.workdir, capture_output=True, text=True
        )
        state_text = proc.stdout.strip().upper()
        if not state_text:
            if job.output_path.exists():
                return JobStatus(handle, JobState.DONE)
            return JobStatus(handle, JobState.FAILED, "job left the queue without output")
        if state_text in ("PENDING", "CONFIGURING"):
            return JobStatus(handle, JobState.QUEUED)
        if state_text in ("RUNNING", "COMPLETING"):
            return JobStatus(handle, JobState.RUNNING)
        if state_text == "COMPLETED":
            return JobStatus(handle, JobState.DONE)
        return JobStatus(handle, JobState.FAILED, f"scheduler state {state_text}")

    def collect(self, handle: JobHandle) -> str:
        if handle.token not in self._jobs:
            raise UnknownHandleError(f"unknown handle {handle}")
        return self._jobs[handle.token].output_path.read_text()


@dataclass
class BatchResult:
    handles: list[Optional[JobHandle]]
    fell_back_to_serial: bool = False
    failures: dict[str, str] = field(default_factory=dict)  # job name -> reason


def submit_batch(
    engine,
    jobs: Sequence[JobRequest],
    on_event: Optional[Callable[[str, str], None]] = None,
) -> BatchResult:
    """Submit all jobs in parallel; on a batch-level failure fall back to
    one-at-a-time submission of the remaining jobs.

    Individual submission failures mark only that job failed. ``on_event``
    (title, detail) receives trace notifications, including the fallback.
    """
    result = BatchResult(handles=[None] * len(jobs))
    if not jobs:
        return result
    notify = on_event or (lambda title, detail: None)
    notify("batch_submit", f"submitting {len(jobs)} job(s) in parallel")

    remaining = list(enumerate(jobs))
    try:
        for idx, job in list(remaining):
            result.handles[idx] = engine.submit(job, _parallel=True)
            remaining.remove((idx, job))
    except BatchSubmissionError as e:
        result.fell_back_to_serial = True
        notify(
            "batch_fallback",
            f"parallel submission failed ({e}); switching to one-at-a-time submission "
            f"for {len(remaining)} remaining job(s)",
        )
        for idx, job in remaining:
            try:
                result.handles[idx] = engine.submit(job)
            except Exception as err:  # noqa: BLE001 - per-job isolation
                result.failures[job.name] = str(err)
                notify("job_submit_failed", f"{job.name}: {err}")
    return result


def wait_all(engine, handles: Sequence[JobHandle], max_polls: int = 100) -> list[JobStatus]:
    """Poll every handle until it reaches a terminal state."""
    statuses: list[Optional[JobStatus]] = [None] * len(handles)
    for i, handle in enumerate(handles):
        for _ in range(max_polls):
            status = engine.poll(handle)
            if status.state in (JobState.DONE, JobState.FAILED):
                statuses[i] = status
                break
        else:
            statuses[i] = JobStatus(handle, JobState.FAILED, "poll budget exhausted")
    return statuses


def build_engine(kind: Optional[str] = None, **kwargs):
    kind = kind or os.environ.get(ENGINE_ENV, "mock")
    if kind == "mock":
        root = kwargs.get("fixtures_root")
        map_file = kwargs.get("fixture_map_file")
        if map_file:
            return MockEngine.from_map_file(map_file)
        if root:
            return MockEngine.from_fixture_dir(root)
        raise ValueError("mock engine needs fixtures_root or fixture_map_file")
    if kind == "shell":
        templates = {
            k: v
            for k, v in kwargs.items()
            if k in ("submit_template", "poll_template") and v
        }
        return ShellEngine(**templates)
    raise ValueError(f"unknown engine kind {kind!r}")
