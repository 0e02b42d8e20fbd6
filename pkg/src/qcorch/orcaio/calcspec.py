"""Typed description of one solver job and its keyword-line expansion."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

KEYWORD_LINE = "keyword_line"
UNKNOWN_LOCATION = "unknown"


def block_location(name: str) -> str:
    """Location string for a named input block, e.g. ``block(scf)``."""
    return f"block({name.lower()})"


class Runtype(str, Enum):
    OPT = "OPT"
    FREQ = "FREQ"
    SP = "SP"
    OPT_FREQ = "OPT_FREQ"  # renders as the two tokens "OPT FREQ"


BlockMap = dict[str, Any]


@dataclass
class CalcSpec:
    """One calculation: runtypes, method, blocks, resources, and geometry.

    ``scf_block`` is always rendered; its default (AutotraH off, MaxIter 500)
    matches the settings every bundled reference input uses. Block maps are
    open: unknown identifiers are representable so that validation and the
    input-debug loop have something to reject and repair.
    """

    runtypes: Sequence[Runtype]
    functional: str
    basis: str
    dispersion: Optional[str] = None
    approximations: Sequence[str] = ()
    grid: Optional[str] = None
    scf_convergence: Optional[str] = None
    maxcore: int = 4000
    nprocs: int = 1
    basis_block: Optional[tuple[str, str]] = None  # (basis name, ECP name)
    scf_block: BlockMap = field(default_factory=lambda: {"AutotraH": False, "MaxIter": 500})
    geom_block: Optional[BlockMap] = None
    cpcm_block: Optional[str] = None  # solvent name
    tddft_block: Optional[BlockMap] = None
    output_prints: Sequence[str] = ()
    geometry: tuple[int, int, str] = (0, 1, "geometry.xyz")  # charge, mult, xyz file

    def __post_init__(self):
        self.runtypes = [Runtype(r) for r in self.runtypes]
        if not self.runtypes:
            raise ValueError("at least one runtype required")
        kinds = set(self.runtypes)
        if Runtype.SP in kinds and kinds & {Runtype.OPT, Runtype.OPT_FREQ}:
            raise ValueError("SP is mutually exclusive with OPT / OPT_FREQ")
        if self.nprocs < 1:
            raise ValueError("nprocs must be >= 1")
        if self.maxcore < 1:
            raise ValueError("maxcore must be >= 1 MB")
        charge, mult, xyz = self.geometry
        if mult < 1:
            raise ValueError("multiplicity must be >= 1")
        if not xyz:
            raise ValueError("geometry xyz filename required")

    def runtype_tokens(self) -> list[str]:
        """Keyword tokens for the runtypes; OPT_FREQ expands to OPT FREQ and
        FREQ is implied (emitted once)."""
        tokens: list[str] = []
        kinds = set(self.runtypes)
        if Runtype.OPT in kinds or Runtype.OPT_FREQ in kinds:
            tokens.append("OPT")
        if Runtype.FREQ in kinds or Runtype.OPT_FREQ in kinds:
            tokens.append("FREQ")
        if Runtype.SP in kinds:
            tokens.append("SP")
        return tokens

    def with_geometry_file(self, xyz_filename: str) -> "CalcSpec":
        """Copy of this spec pointing at a different geometry file."""
        return self.replace(geometry=(self.geometry[0], self.geometry[1], xyz_filename))

    def replace(self, **changes: Any) -> "CalcSpec":
        from dataclasses import replace as _replace

        spec = _replace(self, **changes)
        # block maps are mutable; keep copies independent
        spec.scf_block = dict(spec.scf_block)
        if spec.geom_block is not None:
            spec.geom_block = dict(spec.geom_block)
        if spec.tddft_block is not None:
            spec.tddft_block = dict(spec.tddft_block)
        spec.approximations = list(spec.approximations)
        spec.output_prints = list(spec.output_prints)
        return spec

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CalcSpec":
        """Build a spec from a plain JSON-shaped mapping (config/tool args)."""
        kwargs = dict(data)
        if "geometry" in kwargs and isinstance(kwargs["geometry"], (list, tuple)):
            charge, mult, xyz = kwargs["geometry"]
            kwargs["geometry"] = (int(charge), int(mult), str(xyz))
        if "basis_block" in kwargs and kwargs["basis_block"] is not None:
            b, ecp = kwargs["basis_block"]
            kwargs["basis_block"] = (str(b), str(ecp))
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "runtypes": [r.value for r in self.runtypes],
            "functional": self.functional,
            "basis": self.basis,
            "dispersion": self.dispersion,
            "approximations": list(self.approximations),
            "grid": self.grid,
            "scf_convergence": self.scf_convergence,
            "maxcore": self.maxcore,
            "nprocs": self.nprocs,
            "basis_block": list(self.basis_block) if self.basis_block else None,
            "scf_block": dict(self.scf_block),
            "geom_block": dict(self.geom_block) if self.geom_block else None,
            "cpcm_block": self.cpcm_block,
            "tddft_block": dict(self.tddft_block) if self.tddft_block else None,
            "output_prints": list(self.output_prints),
            "geometry": list(self.geometry),
        }


def keyword_line_tokens(spec: CalcSpec) -> list[str]:
    """Tokens on the simple input line, in render order."""
    tokens = spec.runtype_tokens()
    tokens.append(spec.functional)
    tokens.append(spec.basis)
    if spec.dispersion:
        tokens.append(spec.dispersion)
    tokens.extend(spec.approximations)
    if spec.grid:
        tokens.append(spec.grid)
    if spec.scf_convergence:
        tokens.append(spec.scf_convergence)
    return tokens
