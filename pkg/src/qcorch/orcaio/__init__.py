"""Solver input synthesis, keyword validation, and output parsing."""

from qcorch.orcaio.calcspec import (
    KEYWORD_LINE,
    CalcSpec,
    Runtype,
    block_location,
    keyword_line_tokens,
)
from qcorch.orcaio.catalog import KeywordCatalog, Violation, default_catalog, validate_spec
from qcorch.orcaio.output import (
    ABSENT,
    ErrorDiagnosis,
    ParsedOutput,
    extract_property,
    parse_normal_modes,
    parse_output,
)
from qcorch.orcaio.render import render_input

__all__ = [
    "ABSENT",
    "CalcSpec",
    "ErrorDiagnosis",
    "KEYWORD_LINE",
    "KeywordCatalog",
    "ParsedOutput",
    "Runtype",
    "Violation",
    "block_location",
    "default_catalog",
    "extract_property",
    "keyword_line_tokens",
    "parse_normal_modes",
    "parse_output",
    "render_input",
    "validate_spec",
]
