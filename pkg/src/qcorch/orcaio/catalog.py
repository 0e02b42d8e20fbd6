"""Allowed-keyword catalogs and spec validation against them.

Catalogs are data: loadable from a sectioned text file (one token per line)
so deployments can extend coverage without code changes. Validation is
conservative: any token not on the allowed list is a violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

from qcorch.orcaio.calcspec import KEYWORD_LINE, CalcSpec, block_location, keyword_line_tokens


@dataclass(frozen=True)
class Violation:
    """One rejected token: which token, where, and why."""

    token: str
    location: str
    message: str = ""

    def __str__(self) -> str:
        return f"{self.token.upper()} @ {self.location}"


@dataclass
class KeywordCatalog:
    keyword_line_allowed: set[str] = field(default_factory=set)
    block_allowed: dict[str, set[str]] = field(default_factory=dict)
    nprocs_min: int = 4
    nprocs_max: int = 24
    maxcore_default: int = 4000

    def allows_keyword(self, token: str) -> bool:
        return token.casefold() in {t.casefold() for t in self.keyword_line_allowed}

    def allows_identifier(self, block: str, identifier: str) -> bool:
        allowed = self.block_allowed.get(block.lower())
        if allowed is None:
            return False
        return identifier.casefold() in {t.casefold() for t in allowed}

    def has_block(self, block: str) -> bool:
        return block.lower() in self.block_allowed


def parse_catalog(text: str) -> KeywordCatalog:
    """Parse the sectioned catalog format.

    Sections: ``[keyword_line]``, ``[block:<name>]``, ``[limits]``;
    one token per line, ``#`` comments allowed. Limits lines are
    ``nprocs_min N``, ``nprocs_max N``, ``maxcore_default N``.
    """
    catalog = KeywordCatalog()
    section: Optional[str] = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section.startswith("block:"):
                catalog.block_allowed.setdefault(section[len("block:"):], set())
            continue
        if section is None:
            raise ValueError(f"catalog token {line!r} outside any section")
        if section == "keyword_line":
            catalog.keyword_line_allowed.add(line)
        elif section.startswith("block:"):
            catalog.block_allowed[section[len("block:"):]].add(line)
        elif section == "limits":
            key, _, value = line.partition(" ")
            if key not in ("nprocs_min", "nprocs_max", "maxcore_default"):
                raise ValueError(f"unknown limits entry {key!r}")
            setattr(catalog, key, int(value))
        else:
            raise ValueError(f"unknown catalog section {section!r}")
    return catalog


def load_catalog(path: Union[str, Path]) -> KeywordCatalog:
    return parse_catalog(Path(path).read_text())


def default_catalog() -> KeywordCatalog:
    """Catalog seeded from the tokens the bundled reference inputs accept."""
    text = resources.files("qcorch").joinpath("data/default_catalog.txt").read_text()
    return parse_catalog(text)


def validate_spec(spec: CalcSpec, catalog: KeywordCatalog) -> list[Violation]:
    """Check every token in the spec against the catalog.

    Returns a (possibly empty) list of violations; never raises for content
    problems — violations are data.
    """
    violations: list[Violation] = []
    for token in keyword_line_tokens(spec):
        if not catalog.allows_keyword(token):
            violations.append(
                Violation(token, KEYWORD_LINE, f"token {token!r} not in allowed keyword list")
            )

    def check_block(name: str, identifiers: Iterable[str]):
        for ident in identifiers:
            if not catalog.allows_identifier(name, ident):
                violations.append(
                    Violation(
                        ident,
                        block_location(name),
                        f"identifier {ident!r} not allowed in %{name} block",
                    )
                )

    check_block("scf", spec.scf_block.keys())
    if spec.geom_block:
        check_block("geom", spec.geom_block.keys())
    if spec.tddft_block:
        check_block("tddft", spec.tddft_block.keys())
    if spec.basis_block:
        check_block("basis", ("Basis", "ECP"))
    if spec.cpcm_block:
        check_block("cpcm", ("solvent",))
    # %output print directives are opaque and deliberately unvalidated

    if not (catalog.nprocs_min <= spec.nprocs <= catalog.nprocs_max):
        violations.append(
            Violation(
                str(spec.nprocs),
                block_location("pal"),
                f"nprocs {spec.nprocs} outside allowed range "
                f"{catalog.nprocs_min}..{catalog.nprocs_max}",
            )
        )
    return violations
