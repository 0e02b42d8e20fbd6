"""Thermochemistry post-analysis: unit conversion, reaction energetics,
pKa calibration/prediction, ring-strain accumulation, and conformer ranking.

All energies are carried as :class:`decimal.Decimal` in hartree (Eh) so that
values read from solver outputs survive round-trips without float loss;
results are returned as floats in kcal/mol.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping, Optional, Sequence, Union

Number = Union[Decimal, float, int, str]


def _dec(x: Number) -> Decimal:
    if isinstance(x, Decimal):
        return x
    if isinstance(x, float):
        return Decimal(repr(x))
    return Decimal(str(x))


@dataclass(frozen=True)
class Constants:
    """Physical constants used throughout post-analysis.

    Overridable only by passing an explicit instance; the defaults are the
    fixed values every bundled table and tolerance was computed with.
    """

    hartree_to_kcal: Decimal = Decimal("627.5095")
    gas_constant_kcal: Decimal = Decimal("1.987204e-3")  # kcal/(mol K)
    temperature_k: Decimal = Decimal("298.15")
    ln10_factor: Decimal = Decimal("2.303")

    @property
    def pka_denominator(self) -> Decimal:
        """2.303 * R * T in kcal/mol (= 1.3644927 with the defaults)."""
        return self.ln10_factor * self.gas_constant_kcal * self.temperature_k


CONSTANTS = Constants()

# Aqueous proton Gibbs free energy used when a pKa is computed from a single
# acid/anion pair without calibration references. -265.899 kcal/mol in Eh.
DEFAULT_PROTON_GIBBS_EH = Decimal("-0.423736774723")


class MissingDataError(KeyError):
    """A record label or property required by an operation is absent."""


@dataclass
class ThermoRecord:
    """Energies for one labelled species; any subset of E/H/G may be present."""

    label: str
    electronic_energy: Optional[Decimal] = None
    enthalpy: Optional[Decimal] = None
    gibbs: Optional[Decimal] = None

    def __post_init__(self):
        for attr in ("electronic_energy", "enthalpy", "gibbs"):
            v = getattr(self, attr)
            if v is not None:
                setattr(self, attr, _dec(v))
        if all(
            getattr(self, a) is None
            for a in ("electronic_energy", "enthalpy", "gibbs")
        ):
            raise ValueError(f"record {self.label!r} has no energy fields")

    def get(self, prop: str) -> Decimal:
        v = {
            "E": self.electronic_energy,
            "H": self.enthalpy,
            "G": self.gibbs,
        }.get(prop)
        if prop not in ("E", "H", "G"):
            raise ValueError(f"unknown property {prop!r} (expected E, H or G)")
        if v is None:
            raise MissingDataError(f"record {self.label!r} has no {prop} value")
        return v


@dataclass
class Reaction:
    """Stoichiometric reaction between labelled species."""

    reactants: Sequence[tuple[str, int]]
    products: Sequence[tuple[str, int]]

    def __post_init__(self):
        for side in (self.reactants, self.products):
            for _, coeff in side:
                if not (isinstance(coeff, int) and coeff > 0):
                    raise ValueError("stoichiometric coefficients must be positive integers")


def hartree_to_kcal(x: Number, constants: Constants = CONSTANTS) -> float:
    """Convert hartree to kcal/mol."""
    return float(_dec(x) * constants.hartree_to_kcal)


def reaction_delta(
    records: Mapping[str, ThermoRecord],
    reaction: Reaction,
    prop: str = "G",
    constants: Constants = CONSTANTS,
) -> float:
    """Products-minus-reactants energy difference in kcal/mol.

    Raises :class:`MissingDataError` naming the offending label if a species
    or the requested property is absent.
    """
    total = Decimal(0)
    for label, coeff in reaction.products:
        if label not in records:
            raise MissingDataError(f"no record for product {label!r}")
        total += coeff * records[label].get(prop)
    for label, coeff in reaction.reactants:
        if label not in records:
            raise MissingDataError(f"no record for reactant {label!r}")
        total -= coeff * records[label].get(prop)
    return float(total * constants.hartree_to_kcal)


def pka_from_delta_g(dg_kcal: Number, constants: Constants = CONSTANTS) -> float:
    """pKa = dG / (2.303 R T), dG in kcal/mol."""
    return float(_dec(dg_kcal) / constants.pka_denominator)


def deprotonation_delta_g(
    g_acid: Number,
    g_anion: Number,
    g_proton: Number = DEFAULT_PROTON_GIBBS_EH,
    constants: Constants = CONSTANTS,
) -> float:
    """Free energy of HA -> A- + H+ in kcal/mol from Gibbs energies in Eh."""
    return float((_dec(g_anion) + _dec(g_proton) - _dec(g_acid)) * constants.hartree_to_kcal)


def calibrate_proton_correction(
    refs: Sequence[tuple[Number, Number]],
    constants: Constants = CONSTANTS,
) -> tuple[list[float], float]:
    """Per-reference proton-solvation corrections and their mean.

    Each reference is (raw deprotonation dG in kcal/mol, experimental pKa);
    correction_i = pKa_exp_i * (2.303 R T) - dG_raw_i.
    """
    if not refs:
        raise ValueError("calibration requires at least one reference acid")
    den = constants.pka_denominator
    corrections = [float(_dec(pka) * den - _dec(dg)) for dg, pka in refs]
    return corrections, sum(corrections) / len(corrections)


def predict_pka(
    dg_raw_target: Number,
    corrections: Sequence[Number],
    constants: Constants = CONSTANTS,
) -> tuple[list[float], float]:
    """Per-reference pKa predictions for a target acid and their mean."""
    if not corrections:
        raise ValueError("prediction requires at least one correction")
    den = constants.pka_denominator
    preds = [float((_dec(dg_raw_target) + _dec(c)) / den) for c in corrections]
    return preds, sum(preds) / len(preds)


def ring_strain(
    series: Mapping[int, tuple[ThermoRecord, ThermoRecord]],
    reference_n: int,
    prop: str = "H",
    constants: Constants = CONSTANTS,
) -> dict[int, float]:
    """Ring-strain energies (kcal/mol) for ring sizes covered by ``series``.

    ``series`` maps ring size n to the (cyclo_n, methylcyclo_(n-1)) record
    pair of the n -> n-1 ring-contraction reaction; the pair for size n
    yields delta(n) = X(methylcyclo_(n-1)) - X(cyclo_n). Strain is zero at
    ``reference_n`` and accumulated downward via
    strain(n-1) = delta(n) + strain(n) and upward via
    strain(n) = strain(n-1) - delta(n).
    """
    if not series:
        raise ValueError("empty reaction series")
    sizes = sorted(series)
    lo, hi = sizes[0], sizes[-1]
    if sizes != list(range(lo, hi + 1)):
        missing = sorted(set(range(lo, hi + 1)) - set(sizes))
        raise ValueError(f"reaction series has gaps at n={missing}")
    if not (lo - 1 <= reference_n <= hi):
        raise ValueError(f"reference n={reference_n} outside series range {lo - 1}..{hi}")

    delta: dict[int, Decimal] = {}
    for n, (cyclo, methylcyclo) in series.items():
        delta[n] = (methylcyclo.get(prop) - cyclo.get(prop)) * constants.hartree_to_kcal

    strain: dict[int, Decimal] = {reference_n: Decimal(0)}
    for n in range(reference_n, lo - 1, -1):
        strain[n - 1] = delta[n] + strain[n]
    for n in range(reference_n + 1, hi + 1):
        strain[n] = strain[n - 1] - delta[n]
    return {n: float(v) for n, v in sorted(strain.items())}


def ring_reaction_deltas(
    series: Mapping[int, tuple[ThermoRecord, ThermoRecord]],
    prop: str = "H",
    constants: Constants = CONSTANTS,
) -> dict[int, float]:
    """The per-reaction delta(n) values (kcal/mol) underlying ring_strain."""
    return {
        n: float((mc.get(prop) - c.get(prop)) * constants.hartree_to_kcal)
        for n, (c, mc) in sorted(series.items())
    }


def relative_energies(
    conformers: Sequence[tuple[str, Number]],
    constants: Constants = CONSTANTS,
) -> list[tuple[str, float]]:
    """Energies relative to the minimum, in kcal/mol, preserving input order."""
    if not conformers:
        raise ValueError("no conformers given")
    values = [(label, _dec(v)) for label, v in conformers]
    vmin = min(v for _, v in values)
    return [(label, float((v - vmin) * constants.hartree_to_kcal)) for label, v in values]


# ---------------------------------------------------------------------------
# energy-table ingestion: delimited text with columns label, E, H, G
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ("label", "E", "H", "G")


def parse_energy_table(text: str) -> dict[str, ThermoRecord]:
    """Parse a delimited energy table into records keyed by label.

    The table is comma- or whitespace-delimited with a header naming a
    subset of ``label, E, H, G``; empty fields and ``-`` mean absent.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty energy table")
    delim = "," if "," in lines[0] else None
    rows: list[list[str]]
    if delim:
        rows = [[c.strip() for c in r] for r in csv.reader(io.StringIO("\n".join(lines)))]
    else:
        rows = [ln.split() for ln in lines]
    header = rows[0]
    if "label" not in header:
        raise ValueError("energy table header must include a 'label' column")
    for col in header:
        if col not in TABLE_COLUMNS:
            raise ValueError(f"unknown energy table column {col!r}")
    idx = {col: header.index(col) for col in header}
    records: dict[str, ThermoRecord] = {}
    for row in rows[1:]:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}: {row}")

        def cell(col: str) -> Optional[Decimal]:
            if col not in idx:
                return None
            raw = row[idx[col]]
            return None if raw in ("", "-") else Decimal(raw)

        label = row[idx["label"]]
        records[label] = ThermoRecord(
            label=label,
            electronic_energy=cell("E"),
            enthalpy=cell("H"),
            gibbs=cell("G"),
        )
    return records


def format_table(headers: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Plain-text table used by report emission (header, rule, rows)."""
    str_rows = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in str_rows:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out = [fmt.format(*headers), fmt.format(*("-" * w for w in widths))]
    out += [fmt.format(*row) for row in str_rows]
    return "\n".join(out)


# ring-size lookup used when building a contraction series from the usual
# cycloalkane/methylcycloalkane naming
RING_SIZES = {
    "propane": 3,
    "butane": 4,
    "pentane": 5,
    "hexane": 6,
    "heptane": 7,
    "octane": 8,
}


def ring_series_from_records(
    records: Mapping[str, ThermoRecord],
) -> dict[int, tuple[ThermoRecord, ThermoRecord]]:
    """Pair cyclo_n with methylcyclo_(n-1) records by name into a series."""
    cyclo: dict[int, ThermoRecord] = {}
    methyl: dict[int, ThermoRecord] = {}
    for label, rec in records.items():
        name = label.lower()
        if name.startswith("methylcyclo"):
            suffix = name[len("methylcyclo"):]
            if suffix in RING_SIZES:
                methyl[RING_SIZES[suffix]] = rec
        elif name.startswith("cyclo"):
            suffix = name[len("cyclo"):]
            if suffix in RING_SIZES:
                cyclo[RING_SIZES[suffix]] = rec
    series = {}
    for n, rec in cyclo.items():
        if n - 1 in methyl:
            series[n] = (rec, methyl[n - 1])
    if not series:
        raise ValueError("no cyclo_n / methylcyclo_(n-1) pairs found in table")
    return series
