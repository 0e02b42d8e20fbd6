"""Molecular geometry: XYZ text I/O and displacement along normal modes."""

from __future__ import annotations

import math
from dataclasses import dataclass
# Element symbols H..Og, used to reject malformed atom lines early.
ELEMENTS = set(
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr "
    "Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og".split()
)


class XYZFormatError(ValueError):
    """Malformed XYZ text (bad count line, element token, or coordinate)."""


@dataclass
class Molecule:
    """Atoms with cartesian coordinates in Angstrom plus charge/multiplicity."""

    atoms: list[tuple[str, float, float, float]]
    charge: int = 0
    multiplicity: int = 1

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")
        for el, x, y, z in self.atoms:
            if el not in ELEMENTS:
                raise XYZFormatError(f"unknown element symbol {el!r}")
            if not all(math.isfinite(c) for c in (x, y, z)):
                raise ValueError(f"non-finite coordinate on atom {el}")

    def __len__(self) -> int:
        return len(self.atoms)

    def centroid(self) -> tuple[float, float, float]:
        n = len(self.atoms)
        return (
            sum(a[1] for a in self.atoms) / n,
            sum(a[2] for a in self.atoms) / n,
            sum(a[3] for a in self.atoms) / n,
        )


@dataclass
class NormalMode:
    """One vibrational mode: signed frequency (negative = imaginary) and
    a dimensionless per-atom displacement direction."""

    index: int
    frequency: float  # cm^-1
    displacement: list[tuple[float, float, float]]

    def __post_init__(self):
        if not math.isfinite(self.frequency):
            raise ValueError("mode frequency must be finite")

    @property
    def imaginary(self) -> bool:
        return self.frequency < 0


def parse_xyz(text: str) -> Molecule:
    """Parse standard XYZ text (count line, comment line, N atom lines).

    Charge and multiplicity are not part of the XYZ format; the returned
    molecule carries the defaults (0, 1).
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise XYZFormatError("missing atom-count line")
    try:
        count = int(lines[0].strip())
    except ValueError:
        raise XYZFormatError(f"bad atom count line: {lines[0]!r}") from None
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != count:
        raise XYZFormatError(f"count line says {count} atoms, found {len(body)}")
    atoms = []
    for ln in body:
        parts = ln.split()
        if len(parts) < 4:
            raise XYZFormatError(f"bad atom line: {ln!r}")
        el = parts[0]
        if el not in ELEMENTS:
            raise XYZFormatError(f"unknown element symbol {el!r}")
        try:
            x, y, z = (float(p) for p in parts[1:4])
        except ValueError:
            raise XYZFormatError(f"non-numeric coordinate in line: {ln!r}") from None
        atoms.append((el, x, y, z))
    return Molecule(atoms=atoms)


def write_xyz(mol: Molecule, comment: str = "") -> str:
    """Render a molecule as XYZ text with 10 decimal places per coordinate."""
    if "\n" in comment:
        raise ValueError("XYZ comment must be a single line")
    lines = [str(len(mol)), comment]
    for el, x, y, z in mol.atoms:
        lines.append(f"{el} {x:.10f} {y:.10f} {z:.10f}")
    return "\n".join(lines) + "\n"


def displace_along_mode(mol: Molecule, mode: NormalMode, amplitude: float = 0.3) -> Molecule:
    """Shift every atom along the mode direction so that the largest single
    atomic displacement equals ``amplitude`` (in Angstrom).

    Charge and multiplicity are unchanged; the input molecule is not mutated.
    """
    if len(mode.displacement) != len(mol):
        raise ValueError(
            f"mode has {len(mode.displacement)} atom vectors, molecule has {len(mol)} atoms"
        )
    if amplitude <= 0:
        raise ValueError("displacement amplitude must be positive")
    max_norm = max(math.sqrt(dx * dx + dy * dy + dz * dz) for dx, dy, dz in mode.displacement)
    if max_norm == 0.0:
        raise ValueError("zero displacement vector")
    scale = amplitude / max_norm
    atoms = [
        (el, x + scale * dx, y + scale * dy, z + scale * dz)
        for (el, x, y, z), (dx, dy, dz) in zip(mol.atoms, mode.displacement)
    ]
    return Molecule(atoms=atoms, charge=mol.charge, multiplicity=mol.multiplicity)
