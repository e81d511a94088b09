"""FIFO replay buffer: eviction order, uniform sampling, byte accounting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snakedqn.preprocess import BinaryFrame, FrameStack, PixelFormat
from snakedqn.replay import (
    FRAMES_PER_EXPERIENCE,
    Experience,
    ReplayBuffer,
    memory_report,
)


def make_experience(tag: int) -> Experience:
    bits = np.zeros((84, 84), dtype=np.uint8)
    bits[tag % 84, (tag // 84) % 84] = 1
    frame = BinaryFrame.from_array(bits)
    stack = FrameStack((frame,) * 4)
    return Experience(stack, tag % 4, -0.1, stack, False)


class TestPush:
    def test_append_below_capacity(self):
        buf = ReplayBuffer(3)
        buf.push("a")
        assert len(buf) == 1
        assert buf.snapshot() == ["a"]

    def test_fifo_eviction(self):
        buf = ReplayBuffer(3)
        for item in "abcd":
            buf.push(item)
        assert len(buf) == 3
        assert buf.snapshot() == ["b", "c", "d"]

    def test_capacity_must_be_positive(self):
        with pytest.raises(ValueError):
            ReplayBuffer(0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 100).flatmap(
        lambda cap: st.tuples(st.just(cap), st.integers(0, cap * 5))))
    def test_retains_newest_in_order(self, case):
        cap, pushes = case
        buf = ReplayBuffer(cap)
        for i in range(pushes):
            buf.push(i)
        assert len(buf) == min(pushes, cap)
        assert buf.snapshot() == list(range(max(0, pushes - cap), pushes))


class TestSample:
    def test_exhaustive_when_len_equals_batch(self):
        buf = ReplayBuffer(32)
        for i in range(32):
            buf.push(i)
        out = buf.sample(32, np.random.default_rng(0))
        assert sorted(out) == list(range(32))

    def test_deterministic_given_rng_state(self):
        buf = ReplayBuffer(1000)
        for i in range(1000):
            buf.push(i)
        a = buf.sample(32, np.random.default_rng(123))
        b = buf.sample(32, np.random.default_rng(123))
        assert a == b

    def test_insufficient_data(self):
        buf = ReplayBuffer(10)
        buf.push("x")
        with pytest.raises(ValueError):
            buf.sample(2, np.random.default_rng(0))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 60), st.integers(0, 2**32 - 1))
    def test_no_duplicates_within_batch(self, n, seed):
        buf = ReplayBuffer(n)
        for i in range(n):
            buf.push(i)
        batch = min(n, 8)
        out = buf.sample(batch, np.random.default_rng(seed))
        assert len(set(out)) == batch
        assert all(0 <= v < n for v in out)

    def test_roughly_uniform(self):
        buf = ReplayBuffer(100)
        for i in range(100):
            buf.push(i)
        rng = np.random.default_rng(7)
        counts = np.zeros(100)
        draws = 2_000
        for _ in range(draws):
            for v in buf.sample(32, rng):
                counts[v] += 1
        freqs = counts / draws
        assert np.abs(freqs - 0.32).max() < 0.05


class TestMemoryReport:
    def test_table_values(self):
        rgb_bytes, rgb_gb = memory_report(1_000_000, PixelFormat.RGB_FLOAT64)
        gray_bytes, gray_gb = memory_report(1_000_000, PixelFormat.GRAY_FLOAT64)
        bin_bytes, bin_gb = memory_report(50_000, PixelFormat.BINARY_BYTE)
        assert rgb_bytes == 1_000_000 * 8 * 169_344
        assert gray_bytes == 1_000_000 * 8 * 56_448
        assert bin_bytes == 50_000 * 8 * 7_056
        assert abs(rgb_gb - 1261.71) <= 0.01
        assert abs(gray_gb - 420.57) <= 0.01
        assert abs(bin_gb - 2.628) <= 0.01

    def test_zero_capacity(self):
        assert memory_report(0, PixelFormat.RGB_FLOAT64) == (0, 0.0)

    def test_savings_vs_million_entry_grayscale(self):
        gray_bytes, _ = memory_report(1_000_000, PixelFormat.GRAY_FLOAT64)
        bin_bytes, _ = memory_report(50_000, PixelFormat.BINARY_BYTE)
        # 1 - 0.00625 = 99.375% saving, exact in integer arithmetic
        assert bin_bytes * 160 == gray_bytes

    def test_frames_per_experience_default(self):
        assert FRAMES_PER_EXPERIENCE == 8
        nbytes, _ = memory_report(10, PixelFormat.BINARY_BYTE)
        assert nbytes == 10 * 8 * 7_056


class TestLiveBytes:
    def test_packed_accounting(self):
        buf = ReplayBuffer(50)
        for i in range(20):
            buf.push(make_experience(i))
        assert buf.live_bytes() == 20 * 8 * 882

    def test_full_buffer_bound(self):
        cap = 200
        buf = ReplayBuffer(cap)
        for i in range(cap + 50):
            buf.push(make_experience(i))
        assert buf.live_bytes() <= cap * 8 * 882
