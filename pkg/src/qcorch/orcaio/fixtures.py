"""Composer for solver-shaped output text, used to author the fixture set
the mock engine serves. Section shapes match what :mod:`qcorch.orcaio.output`
parses (and what genuine outputs print)."""

from __future__ import annotations

from typing import Optional, Sequence

_BANNER = """\
                                 *****************
                                 * O   R   C   A *
                                 *****************

                         Program Version 5.0.4 -  RELEASE  -
"""

_ERROR_TEXTS = {
    "tightscf": (
        "[file orca_tools/Tool-Scanner/qcscan1.cpp, line 106]: \n"
        "Unknown identifier in SCF block line 13:\n"
        "Last token: TIGHTSCF.\n"
    ),
    "convcriteria": (
        "[file orca_tools/Tool-Scanner/qcscan1.cpp, line 106]: \n"
        "Unknown identifier in SCF block line 13:\n"
        "Last token: CONVCRITERIA.\n"
    ),
    "vv10": (
        "INPUT ERROR\n"
        "UNRECOGNIZED OR DUPLICATED KEYWORD(S) IN SIMPLE INPUT LINE\n"
        "VV10\n"
    ),
}


def _boxed(title: str) -> str:
    rule = "-" * len(title)
    return f"{rule}\n{title}\n{rule}\n"


def block_error_text(block: str, token: str, line_no: int = 13) -> str:
    return (
        "[file orca_tools/Tool-Scanner/qcscan1.cpp, line 106]: \n"
        f"Unknown identifier in {block.upper()} block line {line_no}:\n"
        f"Last token: {token.upper()}.\n"
    )


def build_output(
    *,
    terminated: bool = True,
    scf_energy: Optional[str] = None,
    enthalpy: Optional[str] = None,
    gibbs: Optional[str] = None,
    dipole: Optional[str] = None,
    orbitals: Optional[Sequence[tuple[float, str, str]]] = None,  # (occ, Eh, eV)
    charges: Optional[dict[str, Sequence[tuple[str, float]]]] = None,
    frequencies: Optional[Sequence[float]] = None,
    modes: Optional[dict[int, Sequence[tuple[float, float, float]]]] = None,
    scf_cycles: Optional[int] = None,
    geometry_converged: bool = False,
    error: Optional[str] = None,  # tightscf | convcriteria | vv10 | literal text
    note_lines: Sequence[str] = (),
) -> str:
    """Assemble one output file.

    ``modes`` maps mode index to per-atom displacement vectors; the matrix is
    printed with one row per cartesian coordinate and six columns per block,
    as the solver does.
    """
    parts = [_BANNER]
    parts.extend(line + "\n" for line in note_lines)

    if error is not None:
        parts.append("\n")
        parts.append(_ERROR_TEXTS.get(error, error))
        parts.append("\nORCA finished by error termination\nABORTING THE RUN\n")
        return "".join(parts)

    if scf_cycles is not None:
        parts.append(f"\n               *** SCF CONVERGED AFTER {scf_cycles:3d} CYCLES ***\n")
    if geometry_converged:
        parts.append(
            "\n    ***********************HURRAY********************\n"
            "    ***        THE OPTIMIZATION HAS CONVERGED     ***\n"
            "    *************************************************\n"
        )
    if scf_energy is not None:
        parts.append(f"\nFINAL SINGLE POINT ENERGY {scf_energy:>25}\n")

    if orbitals:
        parts.append("\n" + _boxed("ORBITAL ENERGIES"))
        parts.append("\n  NO   OCC          E(Eh)            E(eV)\n")
        for i, (occ, e_eh, e_ev) in enumerate(orbitals):
            parts.append(f"{i:4d} {occ:8.4f} {e_eh:>14} {e_ev:>16}\n")
        parts.append("\n")

    if charges:
        headers = {
            "mulliken": "MULLIKEN ATOMIC CHARGES",
            "loewdin": "LOEWDIN ATOMIC CHARGES",
            "hirshfeld": "HIRSHFELD ANALYSIS",
        }
        for key, rows in charges.items():
            parts.append("\n" + _boxed(headers[key]))
            for i, (el, q) in enumerate(rows):
                parts.append(f"{i:4d} {el:<2}:{q:11.6f}\n")
            parts.append(f"Sum of atomic charges: {sum(q for _, q in rows):10.7f}\n")

    if dipole is not None:
        parts.append("\n" + _boxed("DIPOLE MOMENT"))
        parts.append(f"Magnitude (Debye)      :{dipole:>15}\n")

    if frequencies is not None:
        parts.append("\n" + _boxed("VIBRATIONAL FREQUENCIES"))
        parts.append("\nScaling factor for frequencies =  1.000000000\n\n")
        for i, f in enumerate(frequencies):
            tag = " ***imaginary mode***" if f < 0 else ""
            parts.append(f"{i:4d}: {f:12.2f} cm**-1{tag}\n")

        if modes:
            parts.append("\n" + _boxed("NORMAL MODES"))
            parts.append(
                "\nThese modes are the cartesian displacements weighted by the\n"
                "diagonal matrix M(i,i)=1/sqrt(m[i]) where m[i] is the mass of\n"
                "the displaced atom.\n\n"
            )
            indices = sorted(modes)
            n_rows = 3 * len(modes[indices[0]])
            flat = {
                idx: [c for vec in modes[idx] for c in vec] for idx in indices
            }
            for start in range(0, len(indices), 6):
                cols = indices[start : start + 6]
                parts.append("      " + "".join(f"{c:11d}" for c in cols) + "\n")
                for row in range(n_rows):
                    vals = "".join(f"{flat[c][row]:11.6f}" for c in cols)
                    parts.append(f"{row:7d} {vals}\n")

    if enthalpy is not None:
        parts.append("\n" + _boxed("ENTHALPY"))
        parts.append(f"Total Enthalpy                    ... {enthalpy:>18} Eh\n")
    if gibbs is not None:
        parts.append("\n" + _boxed("GIBBS FREE ENERGY"))
        parts.append(f"Final Gibbs free energy         ... {gibbs:>18} Eh\n")

    if terminated:
        parts.append("\n                             ****ORCA TERMINATED NORMALLY****\n")
    return "".join(parts)
