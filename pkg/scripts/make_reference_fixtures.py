#!/usr/bin/env python3
"""Regenerates the bundled reference workflow: conformer geometries, the
fixture set the mock engine serves (including both error-recovery chains),
the fixture map file, scripted rules, and session configs.

Run from the repo root after changing presets or fixture content:

    python3 scripts/make_reference_fixtures.py
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from qcorch.execution import input_hash
from qcorch.geometry import Molecule, write_xyz
from qcorch.orcaio import CalcSpec, parse_output, render_input
from qcorch.orcaio.fixtures import build_output
from qcorch.recovery import debug_input

DATA = REPO / "src/qcorch/data/reference"
FIXTURES = DATA / "fixtures"
GEOMETRIES = DATA / "geometries"

CONFORMERS = [
    "cn9_YICLED",
    "tri_tri_mer_capped",
    "tricapped_trigonal_prismatic",
    "capped_square_antiprismatic_0",
    "capped_square_antiprismatic_1",
]

PBE0_FINAL = {
    "cn9_YICLED": "-1543.61225634143420",
    "tri_tri_mer_capped": "-1543.61465542569977",
    "tricapped_trigonal_prismatic": "-1543.61397373074919",
    "capped_square_antiprismatic_0": "-1543.61290222139519",
    "capped_square_antiprismatic_1": "-1543.60826276741545",
}
# intermediate optimization energies for the recovery chains (synthetic)
PBE0_STAGE = {
    ("cn9_YICLED", 0): "-1543.60958112348821",
    ("cn9_YICLED", 1): "-1543.61100223451937",
    ("capped_square_antiprismatic_1", 0): "-1543.60712345190284",
}
SP_FINAL = {
    "cn9_YICLED": "-1544.53545294825108",
    "tri_tri_mer_capped": "-1544.53675364646824",
    "tricapped_trigonal_prismatic": "-1544.53704995156204",
    "capped_square_antiprismatic_0": "-1544.53720655504048",
    "capped_square_antiprismatic_1": "-1544.53307801377878",
}
SP_CYCLES = {
    "cn9_YICLED": 60,
    "tri_tri_mer_capped": 71,
    "tricapped_trigonal_prismatic": 68,
    "capped_square_antiprismatic_0": 75,
    "capped_square_antiprismatic_1": 76,
}

SPECS = json.loads((DATA / "specs.json").read_text())


def preset(name: str) -> CalcSpec:
    return CalcSpec.from_dict(SPECS[name])


def make_geometry(name: str) -> Molecule:
    """Synthetic 22-atom Ce complex (Ce + 3 bidentate nitrate + 3 water);
    coordinates vary per conformer but carry no physical meaning."""
    shift = (sum(map(ord, name)) % 17) * 0.013
    atoms = [("Ce", 0.0, 0.0, 0.0)]
    for k in range(3):  # nitrates: N + 3 O
        base = 2.8 + 0.05 * k + shift
        atoms.append(("N", base, 0.4 * k, -0.3 * k))
        for j in range(3):
            atoms.append(("O", base + 0.7 + 0.1 * j, 0.4 * k + 0.9 * j - 0.9, 0.5 - 0.4 * j))
    for k in range(3):  # waters: O + 2 H
        base = -2.5 - 0.07 * k - shift
        atoms.append(("O", base, 1.1 * k - 1.0, 0.6 * k))
        atoms.append(("H", base - 0.6, 1.1 * k - 1.4, 0.6 * k + 0.3))
        atoms.append(("H", base - 0.6, 1.1 * k - 0.6, 0.6 * k - 0.3))
    return Molecule(atoms=atoms, charge=0, multiplicity=2)


def mode_vectors(n_atoms: int, seed: int):
    return [
        (
            0.01 + 0.02 * ((i + seed) % 3),
            0.015 * ((i + seed + 1) % 3),
            0.01 * ((i + seed + 2) % 3) - 0.01,
        )
        for i in range(n_atoms)
    ]


def frequencies(n_atoms: int, imaginary: float | None) -> list[float]:
    freqs = [0.0] * 6
    if imaginary is not None:
        freqs.append(imaginary)
    while len(freqs) < 3 * n_atoms:
        freqs.append(28.0 + 4.5 * len(freqs))
    return freqs


def opt_output(name: str, energy: str, imaginary: float | None, seed: int) -> str:
    n_atoms = 22
    modes = {6: mode_vectors(n_atoms, seed), 7: mode_vectors(n_atoms, seed + 1)}
    charges = [("Ce", 1.453201)] + [("N", 0.412 - 0.01 * i) for i in range(3)]
    charges += [("O", -0.51 + 0.005 * i) for i in range(12)]
    charges += [("H", 0.31 + 0.002 * i) for i in range(6)]
    # ORCA prints 22 charge rows: Ce, 3 N, 12 O, 6 H
    return build_output(
        scf_energy=energy,
        scf_cycles=6,
        geometry_converged=True,
        frequencies=frequencies(n_atoms, imaginary),
        modes=modes,
        charges={"mulliken": charges[:22], "loewdin": charges[:22]},
        enthalpy=str(float(energy) + 0.31),
        gibbs=str(float(energy) + 0.26),
        note_lines=[f"Job: {name} (geometry optimization + frequencies)"],
    )


def sp_output(name: str) -> str:
    orbitals = [(2.0, f"{-19.0 + 0.2 * i:.6f}", f"{-517.0 + 5.4 * i:.4f}") for i in range(8)]
    orbitals += [(0.0, "-0.104512", "-2.8439"), (0.0, "-0.051203", "-1.3933")]
    return build_output(
        scf_energy=SP_FINAL[name],
        scf_cycles=SP_CYCLES[name],
        orbitals=orbitals,
        dipole="3.8421",
        note_lines=[f"Job: {name} (single point)"],
    )


def write_pair(job_dir_name: str, input_text: str, output_text: str, mapping: list):
    d = FIXTURES / job_dir_name
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{job_dir_name}.inp").write_text(input_text)
    (d / f"{job_dir_name}.out").write_text(output_text)
    mapping.append((input_hash(input_text), f"{job_dir_name}/{job_dir_name}.out"))


def main():
    for stale in (FIXTURES, GEOMETRIES):
        if stale.exists():
            shutil.rmtree(stale)
    FIXTURES.mkdir(parents=True)
    GEOMETRIES.mkdir(parents=True)

    mapping: list[tuple[str, str]] = []
    diag_tight = parse_output(build_output(error="tightscf")).error
    diag_conv = parse_output(build_output(error="convcriteria")).error
    diag_vv10 = parse_output(build_output(error="vv10")).error

    for name in CONFORMERS:
        (GEOMETRIES / f"{name}.xyz").write_text(
            write_xyz(make_geometry(name), f"{name} seed geometry")
        )
        xyz = f"{name}.xyz"
        job = f"{name}_OPT_FREQ"

        bad2 = preset("ce_opt_freq_bad_scf").with_geometry_file(xyz)
        bad1, _ = debug_input(bad2, diag_tight)
        clean, _ = debug_input(bad1, diag_conv)
        write_pair(f"{job}__s0", render_input(bad2), build_output(error="tightscf"), mapping)
        write_pair(f"{job}__s1", render_input(bad1), build_output(error="convcriteria"), mapping)

        if name == "cn9_YICLED":
            final = opt_output(job, PBE0_STAGE[(name, 0)], -131.99, seed=1)
        elif name == "capped_square_antiprismatic_1":
            final = opt_output(job, PBE0_STAGE[(name, 0)], -81.23, seed=2)
        else:
            final = opt_output(job, PBE0_FINAL[name], None, seed=3)
        write_pair(f"{job}__s2", render_input(clean), final, mapping)

        if name == "cn9_YICLED":
            removed = clean.with_geometry_file(f"{job}_distorted.xyz")
            write_pair(
                f"{job}__s3",
                render_input(removed),
                opt_output(f"{job}_removed", PBE0_STAGE[(name, 1)], -85.19, seed=4),
                mapping,
            )
            removed2 = clean.with_geometry_file(f"{job}_removed_distorted.xyz")
            write_pair(
                f"{job}__s4",
                render_input(removed2),
                opt_output(f"{job}_removed2", PBE0_FINAL[name], None, seed=5),
                mapping,
            )
        if name == "capped_square_antiprismatic_1":
            removed = clean.with_geometry_file(f"{job}_distorted.xyz")
            write_pair(
                f"{job}__s3",
                render_input(removed),
                opt_output(f"{job}_removed", PBE0_FINAL[name], -14.79, seed=6),
                mapping,
            )

        sp_job = f"{name}_SP"
        sp_bad = preset("ce_sp_bad_vv10").with_geometry_file(xyz)
        sp_clean, _ = debug_input(sp_bad, diag_vv10)
        write_pair(f"{sp_job}__s0", render_input(sp_bad), build_output(error="vv10"), mapping)
        write_pair(f"{sp_job}__s1", render_input(sp_clean), sp_output(name), mapping)

    map_lines = ["# input-hash -> fixture output (relative to this file)"]
    map_lines += [f"{digest} {rel}" for digest, rel in mapping]
    (FIXTURES / "fixture_map.txt").write_text("\n".join(map_lines) + "\n")
    print(f"wrote {len(mapping)} fixture pairs under {FIXTURES}")


if __name__ == "__main__":
    main()
