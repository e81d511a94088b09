"""Checkpoint container format and agent save/load round-trips."""

import numpy as np
import pytest

from snakedqn.agent import Hyperparams, load_agent, new_agent, save_agent
from snakedqn.checkpoint import (
    MAGIC,
    CheckpointError,
    read_records,
    write_records,
)


class TestRecordContainer:
    def test_roundtrip_dtypes(self, tmp_path):
        path = tmp_path / "c.bin"
        records = {
            "f32": np.arange(6, dtype=np.float32).reshape(2, 3),
            "f64": np.array([[1.5]], dtype=np.float64),
            "scalar": np.int64(42),
            "bytes": np.array([0, 255, 7], dtype=np.uint8),
        }
        write_records(path, records)
        out = read_records(path)
        assert set(out) == set(records)
        for name in records:
            want = np.asarray(records[name])
            assert out[name].dtype == want.dtype
            assert np.array_equal(out[name], want)

    def test_magic(self, tmp_path):
        path = tmp_path / "c.bin"
        write_records(path, {"x": np.zeros(2, dtype=np.float32)})
        blob = bytearray(path.read_bytes())
        assert blob[:8] == MAGIC
        blob[0] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="magic"):
            read_records(path)

    def test_checksum_detects_corruption(self, tmp_path):
        path = tmp_path / "c.bin"
        write_records(path, {"x": np.arange(100, dtype=np.float32)})
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="checksum"):
            read_records(path)

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "c.bin"
        write_records(path, {"x": np.arange(100, dtype=np.float32)})
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(CheckpointError):
            read_records(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"hello world, definitely not tensors")
        with pytest.raises(CheckpointError):
            read_records(path)


class TestAgentRoundTrip:
    def test_full_state_restored(self, tmp_path):
        hp = Hyperparams()
        agent = new_agent(hp, seed=5)
        # make the state non-trivial before saving
        x = np.random.default_rng(0).random((4, 84, 84, 4)).astype(np.float32)
        agent.online.forward(x, train=True)
        agent.adam.t = 17
        for name in agent.adam.m:
            agent.adam.m[name][...] = 0.25
        agent.frame_count = 123_456

        path = tmp_path / "agent.bin"
        save_agent(path, agent, hp)
        loaded = load_agent(path, hp)

        assert loaded.frame_count == 123_456
        assert loaded.adam.t == 17
        for name, arr in agent.online.state_arrays().items():
            assert np.array_equal(arr, loaded.online.state_arrays()[name]), name
        for name, arr in agent.target.state_arrays().items():
            assert np.array_equal(arr, loaded.target.state_arrays()[name]), name
        for name in agent.adam.m:
            assert np.array_equal(agent.adam.m[name], loaded.adam.m[name])
            assert np.array_equal(agent.adam.v[name], loaded.adam.v[name])

    def test_missing_record_rejected(self, tmp_path):
        hp = Hyperparams()
        agent = new_agent(hp, seed=1)
        path = tmp_path / "agent.bin"
        save_agent(path, agent, hp)
        records = read_records(path)
        del records["online/conv1.w"]
        write_records(path, records)
        with pytest.raises(CheckpointError, match="missing"):
            load_agent(path, hp)

    def test_shape_mismatch_rejected(self, tmp_path):
        hp = Hyperparams()
        agent = new_agent(hp, seed=1)
        path = tmp_path / "agent.bin"
        save_agent(path, agent, hp)
        records = read_records(path)
        records["online/conv1.w"] = records["online/conv1.w"][..., :16]
        write_records(path, records)
        with pytest.raises(CheckpointError, match="mismatch"):
            load_agent(path, hp)

    def test_eval_forward_identical_after_reload(self, tmp_path):
        hp = Hyperparams()
        agent = new_agent(hp, seed=9)
        path = tmp_path / "agent.bin"
        save_agent(path, agent, hp)
        loaded = load_agent(path, hp)
        x = np.random.default_rng(1).random((8, 84, 84, 4)).astype(np.float32)
        assert np.array_equal(agent.online.forward(x), loaded.online.forward(x))
