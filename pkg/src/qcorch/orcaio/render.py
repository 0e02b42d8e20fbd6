"""Deterministic, byte-stable rendering of a CalcSpec to solver input text."""

from __future__ import annotations

from typing import Any, Optional

from qcorch.orcaio.calcspec import CalcSpec, keyword_line_tokens
from qcorch.orcaio.catalog import KeywordCatalog, validate_spec


class InvalidSpecError(ValueError):
    """Raised when rendering is gated on a catalog and the spec violates it."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def _value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _block(name: str, entries: dict[str, Any]) -> list[str]:
    lines = [f"%{name}"]
    lines += [f"  {key} {_value(val)}" for key, val in entries.items()]
    lines.append("end")
    return lines


def render_input(spec: CalcSpec, catalog: Optional[KeywordCatalog] = None) -> str:
    """Render the input text for one job.

    Section order: keyword line, %maxcore, %pal, optional %basis, %scf,
    optional %geom, optional %cpcm, optional %tddft, %output (when print
    directives are present), then the geometry line. Pure function of the
    spec; passing a catalog validates first and raises on violations.
    """
    if catalog is not None:
        violations = validate_spec(spec, catalog)
        if violations:
            raise InvalidSpecError(violations)

    lines = ["! " + " ".join(keyword_line_tokens(spec))]
    lines.append(f"%maxcore {spec.maxcore}")
    lines += _block("pal", {"nprocs": spec.nprocs})
    if spec.basis_block:
        basis, ecp = spec.basis_block
        lines += _block("basis", {"Basis": f'"{basis}"', "ECP": f'"{ecp}"'})
    lines += _block("scf", dict(spec.scf_block))
    if spec.geom_block:
        lines += _block("geom", dict(spec.geom_block))
    if spec.cpcm_block:
        lines += _block("cpcm", {"solvent": f'"{spec.cpcm_block}"'})
    if spec.tddft_block:
        lines += _block("tddft", dict(spec.tddft_block))
    if spec.output_prints:
        # print directives are opaque and emitted verbatim, unindented
        lines.append("%output")
        lines.extend(spec.output_prints)
        lines.append("end")
    charge, mult, xyz = spec.geometry
    lines.append(f"* xyzfile {charge} {mult} {xyz}")
    return "\n".join(lines) + "\n"
