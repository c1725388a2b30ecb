import json

import pytest

from malvis import MalvisError
from malvis.manifest import (
    DatasetManifest,
    ManifestEntry,
    read_manifest,
    scan_tree,
    split_manifest,
    write_manifest,
)


def _manifest(counts: dict[str, int]) -> DatasetManifest:
    entries = []
    for label, n in counts.items():
        for i in range(n):
            entries.append(ManifestEntry(id=f"{label}-{i}", path=f"{label}/{i}.png", label=label))
    return DatasetManifest(entries=entries)


class TestRoundTrip:
    def test_write_read(self, tmp_path):
        m = _manifest({"a": 2, "b": 1})
        m.entries[0].split = "test"
        write_manifest(m, tmp_path / "m.jsonl")
        back = read_manifest(tmp_path / "m.jsonl")
        assert [(e.id, e.path, e.label, e.split) for e in back.entries] == [
            (e.id, e.path, e.label, e.split) for e in m.entries
        ]

    def test_jsonl_shape(self, tmp_path):
        write_manifest(_manifest({"a": 1}), tmp_path / "m.jsonl")
        lines = (tmp_path / "m.jsonl").read_text().splitlines()
        assert json.loads(lines[0]) == {"id": "a-0", "path": "a/0.png", "label": "a", "split": "train"}

    def test_duplicate_id_rejected(self, tmp_path):
        entries = [ManifestEntry("x", "p1", "a"), ManifestEntry("x", "p2", "a")]
        with pytest.raises(MalvisError, match="duplicate"):
            DatasetManifest(entries=entries).validate()

    def test_bad_split_rejected(self):
        with pytest.raises(MalvisError, match="split"):
            DatasetManifest(entries=[ManifestEntry("x", "p", "a", split="dev")]).validate()

    def test_empty_label_rejected(self):
        with pytest.raises(MalvisError, match="label"):
            DatasetManifest(entries=[ManifestEntry("x", "p", "")]).validate()

    def test_bad_json_line(self, tmp_path):
        (tmp_path / "m.jsonl").write_text('{"id": "a"\n')
        with pytest.raises(MalvisError, match="invalid JSON"):
            read_manifest(tmp_path / "m.jsonl")


class TestScanTree:
    def test_scan(self, tmp_path):
        for fam in ("virut", "alman"):
            (tmp_path / fam).mkdir()
            for i in range(2):
                (tmp_path / fam / f"s{i}.png").write_bytes(b"\x89PNG")
        m = scan_tree(tmp_path)
        assert len(m.entries) == 4
        assert m.labels() == ["alman", "virut"]
        assert all(e.split == "train" for e in m.entries)


class TestSplit:
    def test_100_single_class_63_7_30(self):
        out = split_manifest(_manifest({"a": 100}), 0.7, 0.1, seed=42)
        counts = {s: sum(1 for e in out.entries if e.split == s) for s in ("train", "val", "test")}
        assert counts == {"train": 63, "val": 7, "test": 30}

    def test_deterministic_for_seed(self):
        m = _manifest({"a": 50, "b": 30})
        a = split_manifest(m, 0.7, 0.1, seed=7)
        b = split_manifest(m, 0.7, 0.1, seed=7)
        assert [e.split for e in a.entries] == [e.split for e in b.entries]

    def test_different_seed_differs(self):
        m = _manifest({"a": 60})
        a = split_manifest(m, 0.7, 0.1, seed=1)
        b = split_manifest(m, 0.7, 0.1, seed=2)
        assert [e.split for e in a.entries] != [e.split for e in b.entries]

    def test_stratified_per_class_floor_rules(self):
        # per 50-sample class: test floor(50*0.3)=15, val floor(35*0.1)=3, train 32
        out = split_manifest(_manifest({"a": 50, "b": 50}), 0.7, 0.1, seed=3)
        for label in ("a", "b"):
            per = [e.split for e in out.entries if e.label == label]
            assert (per.count("train"), per.count("val"), per.count("test")) == (32, 3, 15)

    def test_partitions_exactly(self):
        m = _manifest({"a": 37, "b": 11, "c": 5})
        out = split_manifest(m, 0.7, 0.1, seed=9)
        assert len(out.entries) == len(m.entries)
        assert {e.id for e in out.entries} == {e.id for e in m.entries}
        assert all(e.split in ("train", "val", "test") for e in out.entries)

    def test_small_class_goes_to_train_with_warning(self):
        warnings = []
        out = split_manifest(_manifest({"solo": 1, "big": 20}), 0.7, 0.1, seed=4, warn=warnings.append)
        assert [e.split for e in out.entries if e.label == "solo"] == ["train"]
        assert any("solo" in w for w in warnings)

    def test_bad_fractions(self):
        with pytest.raises(MalvisError, match="train fraction"):
            split_manifest(_manifest({"a": 10}), 1.2, 0.1)
        with pytest.raises(MalvisError, match="val fraction"):
            split_manifest(_manifest({"a": 10}), 0.7, 0.0)

    def test_order_preserved(self):
        m = _manifest({"a": 10, "b": 10})
        out = split_manifest(m, 0.7, 0.1, seed=5)
        assert [e.id for e in out.entries] == [e.id for e in m.entries]
