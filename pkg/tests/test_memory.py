import os

import pytest

from qcorch.memory import (
    EpisodicRecord,
    EpisodicStore,
    GlobalMemory,
    SemanticMemory,
    snapshot_grounding,
)


class TestGlobalMemory:
    def test_append_then_read(self, tmp_path):
        gm = GlobalMemory(tmp_path)
        gm.append("root", "first note")
        entries = gm.read()
        assert entries[-1].text == "first note"
        assert entries[-1].author == "root"

    def test_order_preserved(self, tmp_path):
        gm = GlobalMemory(tmp_path)
        gm.append("a", "one")
        gm.append("b", "two")
        assert [e.text for e in gm.read()] == ["one", "two"]
        assert [e.seq for e in gm.read()] == [1, 2]

    def test_survives_restart(self, tmp_path):
        gm = GlobalMemory(tmp_path)
        gm.append("a", "persisted")
        gm.append("a", "also persisted")
        reloaded = GlobalMemory(tmp_path)
        assert [e.text for e in reloaded.read()] == ["persisted", "also persisted"]
        reloaded.append("b", "after restart")
        assert reloaded.read()[-1].seq == 3

    def test_tail_window(self, tmp_path):
        gm = GlobalMemory(tmp_path)
        for i in range(60):
            gm.append("a", f"note {i}")
        tail = gm.tail(last_k=50)
        assert len(tail) == 50
        assert tail[0].text == "note 10"

    def test_file_format_one_record_per_line(self, tmp_path):
        gm = GlobalMemory(tmp_path)
        gm.append("root", "structured")
        lines = (tmp_path / "global_memory.jsonl").read_text().splitlines()
        assert len(lines) == 1
        import json

        record = json.loads(lines[0])
        assert set(record) == {"seq", "author", "ts", "text"}


class TestSemanticMemory:
    @pytest.fixture()
    def store(self):
        sm = SemanticMemory()
        sm.add(["dft", "input"], "prefer TightSCF for small systems", owner="input_expert")
        sm.add(["slurm"], "cap parallel jobs at the node width", owner="shared")
        sm.add(["dft"], "check frequencies after optimization", owner="dft_agent")
        return sm

    def test_no_tags_empty(self, store):
        assert store.retrieve("dft_agent", []) == []

    def test_disjoint_tags_empty(self, store):
        assert store.retrieve("dft_agent", ["geometry"]) == []

    def test_owner_and_tag_filter(self, store):
        hits = store.retrieve("dft_agent", ["dft"])
        # input_expert-owned entry is not visible to dft_agent
        assert [h.text for h in hits] == ["check frequencies after optimization"]

    def test_shared_entries_visible_to_all(self, store):
        hits = store.retrieve("anyone", ["slurm"])
        assert len(hits) == 1

    def test_exhaustive_filter_oracle(self, store):
        # brute-force oracle over the seeded 3-entry store
        wanted = {"dft"}
        expected = [
            e
            for e in store._entries
            if e.owner in ("dft_agent", "shared") and e.tags & wanted
        ]
        assert store.retrieve("dft_agent", ["dft"]) == expected

    def test_deterministic_order(self, store):
        first = store.retrieve("dft_agent", ["dft", "slurm"])
        second = store.retrieve("dft_agent", ["dft", "slurm"])
        assert first == second


class TestEpisodicStore:
    def test_disabled_write_is_accepted_noop(self):
        store = EpisodicStore()
        assert store.write(EpisodicRecord("a", "s", {"action": "respond"}, "ok"))
        assert store.records() == []

    def test_enabled_write_is_stored(self):
        store = EpisodicStore(enabled=True)
        store.write(EpisodicRecord("a", "s", {"action": "respond"}, "ok"))
        assert len(store.records()) == 1


class TestGrounding:
    def test_empty_dir(self, tmp_path):
        snap = snapshot_grounding(tmp_path)
        assert snap.entries == []
        assert snap.render() == "(empty)"

    def test_single_file_tree(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "a/1.xyz").write_text("1\n\nH 0 0 0\n")
        snap = snapshot_grounding(tmp_path)
        assert snap.paths() == ["a", "a/1.xyz"]

    def test_beyond_depth_excluded(self, tmp_path):
        deep = tmp_path / "d1/d2/d3/d4/d5"
        deep.mkdir(parents=True)
        (deep / "hidden.txt").write_text("x")
        snap = snapshot_grounding(tmp_path, depth_limit=4)
        assert "d1/d2/d3/d4" in snap.paths()
        assert all("hidden.txt" not in p for p in snap.paths())

    def test_matches_independent_walk(self, tmp_path):
        (tmp_path / "b").mkdir()
        (tmp_path / "a").mkdir()
        (tmp_path / "a/z.txt").write_text("z")
        (tmp_path / "a/m.txt").write_text("mm")
        (tmp_path / "top.inp").write_text("!")
        snap = snapshot_grounding(tmp_path)

        expected = []
        for dirpath, dirnames, filenames in os.walk(tmp_path):
            rel = os.path.relpath(dirpath, tmp_path)
            for d in dirnames:
                expected.append(os.path.normpath(os.path.join(rel, d)).replace("\\", "/"))
            for f in filenames:
                expected.append(os.path.normpath(os.path.join(rel, f)).replace("\\", "/"))
        expected = sorted(p.lstrip("./") for p in expected)
        assert snap.paths() == expected

    def test_unreadable_root_flagged_not_fatal(self, tmp_path):
        snap = snapshot_grounding(tmp_path / "missing")
        assert not snap.available
        assert "unavailable" in snap.render()

    def test_entry_cap(self, tmp_path):
        for i in range(30):
            (tmp_path / f"f{i:03d}.txt").write_text("x")
        snap = snapshot_grounding(tmp_path, max_entries=10)
        assert len(snap.entries) == 10
        assert snap.truncated
