import json

import numpy as np
import pytest

from traject import (
    FormatError,
    RawActivationBundle,
    Trajectory,
    TrajectoryEnsemble,
    load_bundle,
    load_ensemble,
    load_manifest,
    save_bundle,
    save_ensemble,
    save_trajectory,
)

from .conftest import random_bundle


def f32_trajectory(rng, L, D) -> Trajectory:
    # values on the float32 grid so storage round-trips bitwise
    return Trajectory(rng.standard_normal((L, D)).astype(np.float32).astype(np.float64))


def f32_bundle(rng, L, T, D, K, sample_id="s0") -> RawActivationBundle:
    b = random_bundle(rng, L, T, D, K, sample_id)
    return RawActivationBundle(
        hidden=b.hidden.astype(np.float32).astype(np.float64),
        attn_last=b.attn_last.astype(np.float32).astype(np.float64),
        sample_id=sample_id,
    )


class TestTrjbRoundTrip:
    def test_single_trajectory_bitwise(self, rng, tmp_path):
        traj = f32_trajectory(rng, 36, 64)
        path = tmp_path / "one.trjb"
        save_trajectory(traj, path)
        loaded = load_ensemble(path)
        assert loaded.n_samples == 1
        np.testing.assert_array_equal(loaded.trajectories[0].points, traj.points)

    def test_ensemble_roundtrip(self, rng, tmp_path):
        ens = TrajectoryEnsemble(tuple(f32_trajectory(rng, 8, 5) for _ in range(4)))
        path = tmp_path / "ens.trjb"
        save_ensemble(ens, path)
        loaded = load_ensemble(path)
        assert loaded.n_samples == 4
        for orig, back in zip(ens.trajectories, loaded.trajectories):
            np.testing.assert_array_equal(orig.points, back.points)

    def test_truncated_payload_names_expected_vs_found(self, rng, tmp_path):
        traj = f32_trajectory(rng, 36, 4)
        path = tmp_path / "full.trjb"
        save_trajectory(traj, path)
        blob = path.read_bytes()
        cut = tmp_path / "cut.trjb"
        cut.write_bytes(blob[: len(blob) - 4 * 4])  # drop one row
        with pytest.raises(FormatError, match=r"36.*35"):
            load_ensemble(cut)

    def test_magic_mismatch_reports_offset(self, tmp_path):
        path = tmp_path / "bad.trjb"
        path.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(FormatError, match="magic"):
            load_ensemble(path)

    def test_bad_version_rejected(self, rng, tmp_path):
        traj = f32_trajectory(rng, 3, 2)
        path = tmp_path / "v.trjb"
        save_trajectory(traj, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="version"):
            load_ensemble(path)

    def test_trailing_bytes_rejected(self, rng, tmp_path):
        traj = f32_trajectory(rng, 3, 2)
        path = tmp_path / "t.trjb"
        save_trajectory(traj, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            load_ensemble(path)


class TestRactRoundTrip:
    def test_bundle_roundtrip_bitwise(self, rng, tmp_path):
        bundle = f32_bundle(rng, L=4, T=5, D=3, K=2, sample_id="sample-αβ")
        path = tmp_path / "b.ract"
        save_bundle(bundle, path)
        back = load_bundle(path)
        np.testing.assert_array_equal(back.hidden, bundle.hidden)
        np.testing.assert_array_equal(back.attn_last, bundle.attn_last)
        assert back.sample_id == bundle.sample_id

    def test_truncated_attention_block(self, rng, tmp_path):
        bundle = f32_bundle(rng, L=2, T=3, D=2, K=1)
        path = tmp_path / "b.ract"
        save_bundle(bundle, path)
        blob = path.read_bytes()
        cut = tmp_path / "cut.ract"
        cut.write_bytes(blob[:30])
        with pytest.raises(FormatError, match="truncated"):
            load_bundle(cut)


class TestManifest:
    def write_manifest(self, tmp_path, entries):
        path = tmp_path / "manifest.jsonl"
        path.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
        return path

    def test_groups_samples_into_ensemble(self, rng, tmp_path):
        for i in range(2):
            save_bundle(f32_bundle(rng, 3, 4, 5, 2, sample_id=f"s{i}"), tmp_path / f"s{i}.ract")
        manifest = self.write_manifest(
            tmp_path, [{"sample_id": f"s{i}", "path": f"s{i}.ract"} for i in range(2)]
        )
        ens = load_ensemble(manifest)
        assert ens.n_samples == 2
        assert [t.meta for t in ens.trajectories] == ["s0", "s1"]

    def test_mixed_dimension_samples_rejected(self, rng, tmp_path):
        save_bundle(f32_bundle(rng, 3, 4, 5, 2, sample_id="a"), tmp_path / "a.ract")
        save_bundle(f32_bundle(rng, 3, 4, 7, 2, sample_id="b"), tmp_path / "b.ract")
        manifest = self.write_manifest(
            tmp_path,
            [{"sample_id": "a", "path": "a.ract"}, {"sample_id": "b", "path": "b.ract"}],
        )
        with pytest.raises(FormatError, match="disagreement"):
            load_ensemble(manifest)

    def test_error_records_skipped(self, rng, tmp_path):
        save_bundle(f32_bundle(rng, 3, 4, 5, 2, sample_id="ok"), tmp_path / "ok.ract")
        manifest = self.write_manifest(
            tmp_path,
            [
                {"sample_id": "bad", "error": "tokenizer exploded"},
                {"sample_id": "ok", "path": "ok.ract"},
            ],
        )
        entries = load_manifest(manifest)
        assert len(entries) == 1
        assert entries[0]["sample_id"] == "ok"

    def test_manifest_without_usable_records_rejected(self, tmp_path):
        manifest = self.write_manifest(tmp_path, [{"sample_id": "x", "error": "boom"}])
        with pytest.raises(FormatError, match="no usable"):
            load_manifest(manifest)
