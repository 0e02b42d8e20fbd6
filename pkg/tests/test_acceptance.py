"""Acceptance suite: every release criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line (visible with ``pytest -s``); the
assertions carry the same tolerances, so the suite is the gate either way.
"""

import functools
import sys
import time

import pytest

from qcorch import thermo
from qcorch.config import build_session, load_config, reference_config_path
from qcorch.execution import JobRequest, JobState, submit_batch, wait_all
from qcorch.orcaio import default_catalog, parse_output, render_input, validate_spec
from qcorch.orcaio.fixtures import build_output
from qcorch.reasoning import load_rules
from qcorch.recovery import debug_input, imaginary_frequency_loop, input_debug_loop
from qcorch.trace import export_notebook, validate_notebook

from engines import engine_for
from golden import GOLDEN_OPT_FREQ, GOLDEN_SP, load_preset
from tables import load_table


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {name}", file=sys.__stdout__, flush=True)
                raise
            print(f"PASS  {name}", file=sys.__stdout__, flush=True)
            return result

        return wrapper

    return decorate


approx = pytest.approx


@criterion("pKa pipeline: dG=30.09 -> pKa 22.05 +-0.01; derived proton constant reproduces dG")
def test_pka_pipeline():
    started = time.monotonic()
    assert thermo.pka_from_delta_g(30.09) == approx(22.05, abs=0.01)
    records = thermo.parse_energy_table(load_table("carboxylic_acid_gibbs.csv"))
    dg = thermo.deprotonation_delta_g(
        records["acetic_acid"].get("G"), records["acetate_ion"].get("G")
    )
    assert dg == approx(30.09, abs=0.01)
    assert thermo.pka_from_delta_g(dg) == approx(22.05, abs=0.01)
    assert time.monotonic() - started < 1.0


@criterion("calibration pipeline: corrections, mean, predictions, mean (all +-0.01)")
def test_calibration_pipeline():
    started = time.monotonic()
    records = thermo.parse_energy_table(load_table("carboxylic_acid_gibbs.csv"))
    proton = records["proton"].get("E")

    def dg(acid, anion):
        return thermo.deprotonation_delta_g(
            records[acid].get("G"), records[anion].get("G"), proton
        )

    refs = [
        (dg("acetic_acid", "acetate_ion"), 4.76),
        (dg("fluoroacetic_acid", "fluoroacetate_ion"), 2.586),
        (dg("chloroacetic_acid", "chloroacetate_ion"), 2.86),
    ]
    corrections, mean_corr = thermo.calibrate_proton_correction(refs)
    assert corrections[0] == approx(399.17, abs=0.01)
    assert corrections[1] == approx(402.47, abs=0.01)
    assert corrections[2] == approx(405.58, abs=0.01)
    assert mean_corr == approx(402.40, abs=0.01)

    target = dg("chlorofluoroacetic_acid", "chlorofluoroacetate_ion")
    predictions, mean_pred = thermo.predict_pka(target, corrections)
    assert predictions[0] == approx(-4.77, abs=0.01)
    assert predictions[1] == approx(-2.35, abs=0.01)
    assert predictions[2] == approx(-0.08, abs=0.01)
    assert mean_pred == approx(-2.40, abs=0.01)
    assert time.monotonic() - started < 1.0


@criterion("ring strain: strain table and reaction deltas from the bundled data (+-0.02)")
def test_ring_strain():
    records = thermo.parse_energy_table(load_table("cycloalkane_ring_strain.csv"))
    series = thermo.ring_series_from_records(records)
    strain = thermo.ring_strain(series, reference_n=6, prop="H")
    for n, expected in {3: 13.86, 4: 13.63, 5: -2.20, 6: 0.00, 7: 8.13, 8: 10.85}.items():
        assert strain[n] == approx(expected, abs=0.02), f"strain n={n}"
    deltas = thermo.ring_reaction_deltas(series, prop="H")
    for n, expected in {4: 0.23, 5: 15.83, 6: -2.20, 7: -8.13, 8: -2.72}.items():
        assert deltas[n] == approx(expected, abs=0.02), f"delta n={n}"


@criterion("conformer ranking: capped_square_antiprismatic_0 most stable, rel energies +-0.02")
def test_conformer_ranking():
    records = thermo.parse_energy_table(load_table("ce_conformer_sp_energies.csv"))
    rel = thermo.relative_energies(
        [(label, r.electronic_energy) for label, r in records.items()]
    )
    by_label = dict(rel)
    assert min(by_label, key=by_label.get) == "capped_square_antiprismatic_0"
    expected = {
        "capped_square_antiprismatic_0": 0.00,
        "tricapped_trigonal_prismatic": 0.10,
        "tri_tri_mer_capped": 0.28,
        "cn9_YICLED": 1.10,
        "capped_square_antiprismatic_1": 2.59,
    }
    for label, value in expected.items():
        assert by_label[label] == approx(value, abs=0.02), label


@criterion("input golden test: byte-exact renders; exactly the 3 bad tokens rejected")
def test_input_golden():
    catalog = default_catalog()
    opt = load_preset("ce_opt_freq").with_geometry_file(
        "cn9_YICLED_0_nunpairedes_0_charge_0_xtb.xyz"
    )
    sp = load_preset("ce_sp").with_geometry_file("cn9_YICLED_OPT_FREQ_removed2.xyz")
    assert render_input(opt) == GOLDEN_OPT_FREQ
    assert render_input(sp) == GOLDEN_SP
    # fixed texts validate clean
    assert validate_spec(opt, catalog) == []
    assert validate_spec(sp, catalog) == []
    # exactly the three documented bad tokens are rejected
    bad_scf = load_preset("ce_opt_freq")
    bad_scf.scf_block["TightSCF"] = True
    assert [str(v) for v in validate_spec(bad_scf, catalog)] == ["TIGHTSCF @ block(scf)"]
    bad_conv = load_preset("ce_opt_freq")
    bad_conv.scf_block["ConvCriteria"] = "Tight"
    assert [str(v) for v in validate_spec(bad_conv, catalog)] == ["CONVCRITERIA @ block(scf)"]
    bad_vv10 = load_preset("ce_sp_bad_vv10")
    assert [str(v) for v in validate_spec(bad_vv10, catalog)] == ["VV10 @ keyword_line"]


@criterion("recovery loops: 2-repair SCF chain; -131.99 -> -85.19 -> clean; -14.79 accepted; bounded")
def test_recovery_loops(tmp_path):
    catalog = default_catalog()
    workdir = tmp_path / "work"
    workdir.mkdir()

    # input-debug: two-stage SCF error chain converges in <= 2 repairs
    spec0 = load_preset("ce_opt_freq_bad_scf").with_geometry_file("g.xyz")
    diag_t = parse_output(build_output(error="tightscf")).error
    spec1, _ = debug_input(spec0, diag_t)
    diag_c = parse_output(build_output(error="convcriteria")).error
    spec2, _ = debug_input(spec1, diag_c)
    clean_out = build_output(
        scf_energy="-1543.61225634143420",
        scf_cycles=5,
        geometry_converged=True,
        frequencies=[0.0] * 6 + [20.0, 31.0],
    )
    engine = engine_for(
        tmp_path / "e1",
        {
            render_input(spec0): [build_output(error="tightscf")],
            render_input(spec1): [build_output(error="convcriteria")],
            render_input(spec2): [clean_out],
        },
    )
    outcome = input_debug_loop(engine, "chain_OPT_FREQ", spec0, workdir, catalog=catalog)
    assert outcome.status == "recovered"
    assert outcome.attempts <= 2
    assert outcome.repairs == ["TIGHTSCF @ block(scf)", "CONVCRITERIA @ block(scf)"]

    # imaginary-frequency chain reproduces -131.99 -> -85.19 -> clean in 2 rounds
    from qcorch.geometry import Molecule, write_xyz

    mol = Molecule(atoms=[("Ce", 0.0, 0.0, 0.0), ("O", 2.4, 0.0, 0.0)], multiplicity=2)
    (workdir / "seed.xyz").write_text(write_xyz(mol, "seed"))
    base = load_preset("ce_opt_freq").with_geometry_file("seed.xyz")
    out_131 = build_output(
        frequencies=[0.0] * 6 + [-131.99, 22.0],
        modes={6: [(0.1, 0.0, 0.0), (-0.1, 0.0, 0.05)]},
        scf_cycles=6,
    )
    out_85 = build_output(
        frequencies=[0.0] * 6 + [-85.19, 30.0],
        modes={6: [(0.05, 0.02, 0.0), (-0.05, 0.0, 0.01)]},
        scf_cycles=6,
    )
    engine = engine_for(
        tmp_path / "e2",
        {
            render_input(base.with_geometry_file("imag_OPT_FREQ_distorted.xyz")): [out_85],
            render_input(
                base.with_geometry_file("imag_OPT_FREQ_removed_distorted.xyz")
            ): [clean_out],
        },
    )
    outcome = imaginary_frequency_loop(
        engine, "imag_OPT_FREQ", base, workdir, initial_output_text=out_131
    )
    assert outcome.status == "recovered"
    assert outcome.attempts == 2

    # -14.79 is accepted without action at the 15 cm^-1 threshold
    out_1479 = build_output(frequencies=[0.0] * 6 + [-14.79, 40.0])
    outcome = imaginary_frequency_loop(
        engine_for(tmp_path / "e3", {}),
        "ok_OPT_FREQ",
        base,
        workdir,
        initial_output_text=out_1479,
    )
    assert outcome.status == "accepted_as_is"
    assert outcome.attempts == 0

    # adversarial chain: always imaginary -> terminates exhausted at max_retries
    stubborn = build_output(
        frequencies=[0.0] * 6 + [-50.0],
        modes={6: [(0.02, 0.0, 0.0), (-0.02, 0.0, 0.0)]},
        scf_cycles=6,
    )
    chain = {
        render_input(base.with_geometry_file("stub_OPT_FREQ_distorted.xyz")): [stubborn],
        render_input(base.with_geometry_file("stub_OPT_FREQ_removed_distorted.xyz")): [stubborn],
        render_input(base.with_geometry_file("stub_OPT_FREQ_removed2_distorted.xyz")): [stubborn],
    }
    outcome = imaginary_frequency_loop(
        engine_for(tmp_path / "e4", chain),
        "stub_OPT_FREQ",
        base,
        workdir,
        initial_output_text=stubborn,
        max_retries=3,
    )
    assert outcome.status == "exhausted"
    assert outcome.attempts == 3

    # adversarial input chain: undiagnosable error ends the loop within budget
    weird = build_output(error="ERROR: unsupported hardware\n")
    engine = engine_for(tmp_path / "e5", {render_input(spec2): [weird]})
    outcome = input_debug_loop(engine, "weird_OPT_FREQ", spec2, workdir, max_retries=3)
    assert outcome.status == "exhausted"
    assert outcome.attempts <= 3


TASK = "Optimize the five Ce(III) conformers and rank their stability."


@criterion(
    "end-to-end scripted session: counters, depth, root context <= 15%, valid notebook, "
    "deterministic, < 30 s"
)
def test_end_to_end_scripted_session(tmp_path):
    started = time.monotonic()
    config = load_config(reference_config_path("conformer_workflow"))
    session_a = build_session(config, "acc-a", tmp_path / "a")
    result_a = session_a.run(TASK)
    session_b = build_session(config, "acc-b", tmp_path / "b")
    session_b.run(TASK)
    elapsed = time.monotonic() - started

    assert result_a.status == "done"
    assert result_a.counters["commanding"] == result_a.counters["reporting"]
    policy = load_rules(config.backend["rules_file"])
    assert result_a.counters["acting"] == policy.invoke_rule_count()
    assert max(session_a.hierarchy._depths.values()) <= 6
    assert result_a.root_context_share <= 0.15

    notebook = export_notebook(session_a.trace)
    validate_notebook(notebook)
    code_cells = [c for c in notebook["cells"] if c["cell_type"] == "code"]
    assert len(code_cells) == result_a.counters["acting"]

    assert session_a.trace.canonical_lines() == session_b.trace.canonical_lines()
    assert elapsed < 30.0


@criterion("batch fallback: injected failure -> serial fallback, all jobs done, recorded")
def test_batch_fallback(tmp_path):
    out = build_output(scf_energy="-1.0", scf_cycles=3)
    engine = engine_for(tmp_path, {"! SP HF def2-SVP\n": [out] * 5})
    workdir = tmp_path / "work"
    workdir.mkdir()
    jobs = [JobRequest(f"j{i}", workdir, f"! SP HF def2-SVP\n# {i}\n") for i in range(5)]
    engine.inject_batch_failure_after(2)
    events = []
    result = submit_batch(engine, jobs, on_event=lambda t, d: events.append((t, d)))
    assert result.fell_back_to_serial
    statuses = wait_all(engine, [h for h in result.handles if h is not None])
    assert len(statuses) == 5
    assert all(s.state == JobState.DONE for s in statuses)
    fallback_notes = [d for t, d in events if t == "batch_fallback"]
    assert fallback_notes and "one-at-a-time" in fallback_notes[0]
