"""Parsing of solver output text into structured results.

The grammar matches real solver outputs for every section the fixtures
carry, so parsers written against the fixture set also read genuine files.
Recognized section markers:

- ``ORCA TERMINATED NORMALLY``                 normal termination
- ``FINAL SINGLE POINT ENERGY <x>``            electronic energy (Eh)
- ``Total Enthalpy ... <x> Eh``                enthalpy (Eh)
- ``Final Gibbs free energy ... <x> Eh``       Gibbs energy (Eh)
- ``Magnitude (Debye) : <x>``                  dipole moment
- ``ORBITAL ENERGIES`` table                   HOMO-LUMO gap (eV), from OCC
- ``MULLIKEN/LOEWDIN ATOMIC CHARGES``,
  ``HIRSHFELD ANALYSIS``                       per-atom charges
- ``VIBRATIONAL FREQUENCIES``                  per-mode cm^-1 list
- ``NORMAL MODES``                             displacement matrix
- ``SCF CONVERGED AFTER n CYCLES``             SCF cycle count
- ``THE OPTIMIZATION HAS CONVERGED``           geometry convergence
- ``Unknown identifier in <X> block line n`` /
  ``Last token: <T>``                          block error diagnosis
- ``UNRECOGNIZED OR DUPLICATED KEYWORD(S) IN
  SIMPLE INPUT LINE`` + token line             keyword-line error diagnosis

Numeric energies are preserved as :class:`decimal.Decimal` so the exact
printed digits round-trip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from qcorch.geometry import NormalMode
from qcorch.orcaio.calcspec import KEYWORD_LINE, UNKNOWN_LOCATION, block_location


class _Absent:
    def __repr__(self):
        return "absent"

    def __bool__(self):
        return False


#: Sentinel returned by extract_property for keys whose section was not in
#: the output. Distinct from None so callers can tell "absent" from "falsy".
ABSENT = _Absent()


@dataclass
class ErrorDiagnosis:
    """Location and token of a solver input error, plus the raw message."""

    location: str  # keyword_line | block(<name>) | unknown
    offending_token: str
    raw_message: str

    def __post_init__(self):
        if self.location != UNKNOWN_LOCATION and not self.offending_token:
            raise ValueError("offending_token required when location is known")


@dataclass
class ParsedOutput:
    terminated_normally: bool = False
    scf_energy: Optional[Decimal] = None
    enthalpy: Optional[Decimal] = None
    gibbs: Optional[Decimal] = None
    dipole: Optional[Decimal] = None
    homo_lumo_gap: Optional[float] = None
    charges: dict[str, list[float]] = field(default_factory=dict)
    frequencies: Optional[list[float]] = None
    scf_cycles: Optional[int] = None
    geometry_converged: bool = False
    error: Optional[ErrorDiagnosis] = None

    @property
    def convergence(self) -> dict:
        return {
            "scf_cycles": self.scf_cycles,
            "geometry_converged": self.geometry_converged,
            "terminated_normally": self.terminated_normally,
        }


_RE_FINAL_SP = re.compile(r"FINAL SINGLE POINT ENERGY\s+(-?\d+\.\d+)")
_RE_ENTHALPY = re.compile(r"^\s*Total Enthalpy\s+\.\.\.\s+(-?\d+\.\d+)", re.M)
_RE_GIBBS = re.compile(r"^\s*Final Gibbs free energy\s+\.\.\.\s+(-?\d+\.\d+)", re.M)
_RE_DIPOLE = re.compile(r"^\s*Magnitude \(Debye\)\s*:\s*(-?\d+\.\d+)", re.M)
_RE_SCF_CYCLES = re.compile(r"SCF CONVERGED AFTER\s+(\d+)\s+CYCLES")
_RE_FREQ_LINE = re.compile(r"^\s*(\d+):\s+(-?\d+\.\d+)\s+cm\*\*-1", re.M)
_RE_CHARGE_LINE = re.compile(r"^\s*\d+\s+([A-Z][a-z]?)\s*:?\s+(-?\d+\.\d+)")
_RE_BLOCK_ERROR = re.compile(
    r"Unknown identifier in (\w+) block line (\d+)\s*:?\s*\n\s*Last token:\s*([A-Za-z0-9_\-]+)\.?",
    re.M,
)
_RE_KEYWORD_ERROR = re.compile(
    r"UNRECOGNIZED OR DUPLICATED KEYWORD\(S\) IN SIMPLE INPUT LINE\s*\n\s*(\S+)", re.M
)


def _section(text: str, header: str) -> Optional[str]:
    """Text from a dash-boxed section header to the next blank-blank gap or
    next dashed header."""
    m = re.search(rf"^-+\n{re.escape(header)}\n-+\n", text, re.M)
    if not m:
        m = re.search(rf"^{re.escape(header)}\n", text, re.M)
        if not m:
            return None
    rest = text[m.end():]
    nxt = re.search(r"^-{3,}\n[A-Z]", rest, re.M)
    return rest[: nxt.start()] if nxt else rest


def _parse_charges(text: str) -> dict[str, list[float]]:
    charges: dict[str, list[float]] = {}
    sections = {
        "mulliken": "MULLIKEN ATOMIC CHARGES",
        "loewdin": "LOEWDIN ATOMIC CHARGES",
        "hirshfeld": "HIRSHFELD ANALYSIS",
    }
    for key, header in sections.items():
        body = _section(text, header)
        if body is None:
            continue
        values = []
        for line in body.splitlines():
            if re.match(r"^\s*Sum of", line, re.I) or re.match(r"^\s*TOTAL", line):
                break
            m = _RE_CHARGE_LINE.match(line)
            if m:
                values.append(float(m.group(2)))
        if values:
            charges[key] = values
    return charges


def _parse_homo_lumo_gap(text: str) -> Optional[float]:
    body = _section(text, "ORBITAL ENERGIES")
    if body is None:
        return None
    homo_ev = lumo_ev = None
    for line in body.splitlines():
        m = re.match(r"^\s*\d+\s+(\d+\.\d+)\s+(-?\d+\.\d+)\s+(-?\d+\.\d+)\s*$", line)
        if not m:
            continue
        occ, _e_eh, e_ev = float(m.group(1)), m.group(2), float(m.group(3))
        if occ > 0:
            homo_ev = e_ev
        elif lumo_ev is None:
            lumo_ev = e_ev
    if homo_ev is None or lumo_ev is None:
        return None
    return lumo_ev - homo_ev


def _parse_error(text: str) -> Optional[ErrorDiagnosis]:
    m = _RE_BLOCK_ERROR.search(text)
    if m:
        return ErrorDiagnosis(
            location=block_location(m.group(1)),
            offending_token=m.group(3),
            raw_message=m.group(0),
        )
    m = _RE_KEYWORD_ERROR.search(text)
    if m:
        return ErrorDiagnosis(
            location=KEYWORD_LINE,
            offending_token=m.group(1),
            raw_message=m.group(0),
        )
    if re.search(r"\bERROR\b|ABORTING THE RUN", text):
        tail = "\n".join(text.strip().splitlines()[-20:])
        return ErrorDiagnosis(location=UNKNOWN_LOCATION, offending_token="", raw_message=tail)
    return None


def parse_output(text: str) -> ParsedOutput:
    """Extract every recognized field present in the output text.

    Absent sections leave their fields empty; nothing is fabricated.
    Error diagnoses land in ``error`` rather than raising.
    """
    out = ParsedOutput()
    out.terminated_normally = "ORCA TERMINATED NORMALLY" in text

    matches = _RE_FINAL_SP.findall(text)
    if matches:
        out.scf_energy = Decimal(matches[-1])
    m = _RE_ENTHALPY.search(text)
    if m:
        out.enthalpy = Decimal(m.group(1))
    m = _RE_GIBBS.search(text)
    if m:
        out.gibbs = Decimal(m.group(1))
    m = _RE_DIPOLE.search(text)
    if m:
        out.dipole = Decimal(m.group(1))
    m = _RE_SCF_CYCLES.search(text)
    if m:
        out.scf_cycles = int(m.group(1))
    out.geometry_converged = "THE OPTIMIZATION HAS CONVERGED" in text
    out.homo_lumo_gap = _parse_homo_lumo_gap(text)
    out.charges = _parse_charges(text)

    freq_body = _section(text, "VIBRATIONAL FREQUENCIES")
    if freq_body is not None:
        freqs = [float(v) for _idx, v in _RE_FREQ_LINE.findall(freq_body)]
        if freqs:
            out.frequencies = freqs

    if not out.terminated_normally:
        out.error = _parse_error(text)
    return out


def parse_normal_modes(text: str) -> list[NormalMode]:
    """Parse the NORMAL MODES displacement matrix into per-mode vectors.

    The matrix has one row per cartesian coordinate (3 per atom) and one
    column per mode, printed in blocks of up to six columns. Frequencies are
    taken from the VIBRATIONAL FREQUENCIES section of the same text.
    """
    out = parse_output(text)
    freqs = out.frequencies or []
    body = _section(text, "NORMAL MODES")
    if body is None:
        raise ValueError("output has no NORMAL MODES section")

    columns: dict[int, list[float]] = {}
    current: list[int] = []
    for line in body.splitlines():
        parts = line.split()
        if not parts:
            continue
        if all(re.fullmatch(r"\d+", p) for p in parts):
            current = [int(p) for p in parts]
            for idx in current:
                columns.setdefault(idx, [])
            continue
        if re.fullmatch(r"\d+", parts[0]) and len(parts) == len(current) + 1:
            try:
                values = [float(p) for p in parts[1:]]
            except ValueError:
                continue
            for idx, v in zip(current, values):
                columns[idx].append(v)

    modes: list[NormalMode] = []
    for idx in sorted(columns):
        flat = columns[idx]
        if len(flat) % 3 != 0:
            raise ValueError(f"mode {idx} has {len(flat)} rows, not divisible by 3")
        disp = [tuple(flat[i : i + 3]) for i in range(0, len(flat), 3)]
        freq = freqs[idx] if idx < len(freqs) else 0.0
        modes.append(NormalMode(index=idx, frequency=freq, displacement=disp))
    return modes


#: Documented query keys for extract_property; aliases mirror the section
#: names tools search for.
PROPERTY_KEYS = {
    "convergence_information": lambda o: o.convergence,
    "TOTAL SCF ENERGY": lambda o: o.scf_energy,
    "scf_energy": lambda o: o.scf_energy,
    "gibbs": lambda o: o.gibbs,
    "enthalpy": lambda o: o.enthalpy,
    "frequencies": lambda o: o.frequencies,
    "charges": lambda o: o.charges or None,
    "dipole": lambda o: o.dipole,
    "homo_lumo_gap": lambda o: o.homo_lumo_gap,
}


def extract_property(output: ParsedOutput, key: str):
    """Value for a documented key, or :data:`ABSENT` when not in the output."""
    if key not in PROPERTY_KEYS:
        raise KeyError(f"unknown property key {key!r}; known: {sorted(PROPERTY_KEYS)}")
    value = PROPERTY_KEYS[key](output)
    return ABSENT if value is None else value
