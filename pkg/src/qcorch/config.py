"""Session configuration: one JSON document declaring the hierarchy, backend,
limits, engine, catalogs, presets, and seed files; shared by CLI and service.

Schema (all paths relative to the config file unless prefixed ``pkg:``,
which resolves inside the installed package)::

    {
      "hierarchy": {"root": "<agent id>", "agents": [{AgentSpec fields}]},
      "backend": {"kind": "scripted"|"live", "rules_file": "...",
                   "endpoint": "..."},
      "limits": {"max_steps": int, "max_depth": int, "retry_cap": int,
                  "summary_cap": int, "global_excerpt_k": int},
      "engine": {"kind": "mock"|"shell", "fixture_dir": "...",
                  "fixture_map": "...", "submit_template": "...",
                  "poll_template": "..."},
      "catalog_file": "...",
      "spec_presets_file": "...",
      "semantic_memory": [{"tags": [...], "owner": "...", "text": "..."}],
      "seed_files": {"<dest under work/>": "<source>"},
      "expose_raw": false
    }
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

from qcorch.agents import AgentSpec, Hierarchy, RunController, Session, SessionLimits
from qcorch.execution import build_engine
from qcorch.memory import EpisodicStore, SemanticMemory
from qcorch.orcaio.catalog import default_catalog, load_catalog
from qcorch.reasoning import LiveBackend, ScriptedBackend, load_rules
from qcorch.toolkit import Services, build_registry
from qcorch.trace import EventKind


class ConfigError(ValueError):
    pass


@dataclass
class SessionConfig:
    root: str
    agents: list[AgentSpec]
    backend: dict[str, Any]
    limits: SessionLimits
    engine: dict[str, Any]
    catalog_file: Optional[Path]
    spec_presets: dict[str, dict]
    semantic_entries: list[dict]
    seed_files: dict[str, Path]
    expose_raw: bool = False
    base_dir: Path = Path(".")


def _resolve(path_text: str, base: Path) -> Path:
    if path_text.startswith("pkg:"):
        return Path(str(resources.files("qcorch").joinpath(path_text[len("pkg:"):])))
    p = Path(path_text)
    return p if p.is_absolute() else base / p


def load_config(path: Union[str, Path]) -> SessionConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    base = path.parent
    try:
        hierarchy = raw["hierarchy"]
        agents = [AgentSpec(**a) for a in hierarchy["agents"]]
        root = hierarchy["root"]
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad hierarchy section: {e}") from e

    backend = dict(raw.get("backend", {"kind": "scripted"}))
    if "rules_file" in backend:
        backend["rules_file"] = _resolve(backend["rules_file"], base)

    limits = SessionLimits(**raw.get("limits", {}))

    engine = dict(raw.get("engine", {"kind": "mock"}))
    for key in ("fixture_dir", "fixture_map"):
        if key in engine:
            engine[key] = _resolve(engine[key], base)

    catalog_file = (
        _resolve(raw["catalog_file"], base) if raw.get("catalog_file") else None
    )

    presets: dict[str, dict] = {}
    if raw.get("spec_presets_file"):
        presets_path = _resolve(raw["spec_presets_file"], base)
        presets.update(json.loads(presets_path.read_text()))
    presets.update(raw.get("spec_presets", {}))

    seed_files = {
        dest: _resolve(src, base) for dest, src in raw.get("seed_files", {}).items()
    }
    return SessionConfig(
        root=root,
        agents=agents,
        backend=backend,
        limits=limits,
        engine=engine,
        catalog_file=catalog_file,
        spec_presets=presets,
        semantic_entries=raw.get("semantic_memory", []),
        seed_files=seed_files,
        expose_raw=bool(raw.get("expose_raw", False)),
        base_dir=base,
    )


def build_backend(config: SessionConfig):
    kind = config.backend.get("kind", "scripted")
    if kind == "scripted":
        rules_file = config.backend.get("rules_file")
        if not rules_file:
            raise ConfigError("scripted backend requires backend.rules_file")
        return ScriptedBackend(load_rules(rules_file))
    if kind == "live":
        return LiveBackend(endpoint=config.backend.get("endpoint"))
    raise ConfigError(f"unknown backend kind {kind!r}")


def build_session(
    config: SessionConfig,
    session_id: str,
    session_dir: Union[str, Path],
    controller: Optional[RunController] = None,
) -> Session:
    """Wire a runnable session from a loaded config."""
    catalog = load_catalog(config.catalog_file) if config.catalog_file else default_catalog()

    services = Services(
        workdir=Path(session_dir) / "work",
        engine=None,  # set below, needs nothing from the session
        catalog=catalog,
        spec_presets=config.spec_presets,
    )
    engine_conf = dict(config.engine)
    kind = engine_conf.pop("kind", "mock")
    services.engine = build_engine(
        kind,
        fixtures_root=engine_conf.get("fixture_dir"),
        fixture_map_file=engine_conf.get("fixture_map"),
        submit_template=engine_conf.get("submit_template"),
        poll_template=engine_conf.get("poll_template"),
    )

    registry = build_registry(services)
    hierarchy = Hierarchy(config.agents, config.root, registry)
    backend = build_backend(config)

    semantic = SemanticMemory()
    for entry in config.semantic_entries:
        semantic.add(entry["tags"], entry["text"], owner=entry.get("owner", "shared"))

    session = Session(
        session_id,
        session_dir,
        hierarchy,
        registry,
        backend,
        limits=config.limits,
        semantic=semantic,
        episodic=EpisodicStore(),
        controller=controller,
    )
    services.global_memory = session.global_memory
    services.notify = lambda title, detail: session.trace.record(
        "exec", EventKind.SYSTEM, title, detail
    )

    def mark_degraded(reason: str):
        session.degraded = True
        session.trace.record("session", EventKind.SYSTEM, "session degraded", reason)

    services.mark_degraded = mark_degraded
    session.expose_raw = config.expose_raw

    for dest, source in config.seed_files.items():
        target = session.workdir / dest
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(source, target)
    return session


def reference_config_path(name: str = "conformer_workflow") -> Path:
    """Path of a bundled reference configuration."""
    return Path(
        str(resources.files("qcorch").joinpath(f"data/reference/{name}.config.json"))
    )
