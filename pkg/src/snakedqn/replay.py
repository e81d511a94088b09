"""Fixed-capacity FIFO experience replay with uniform sampling.

Frames inside the stored stacks stay bit-packed, and consecutive stacks
share frame objects, so the live footprint of a full 50,000-entry buffer
is far below the byte-per-pixel accounting figure reported by
:func:`memory_report`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import FrameStack, PixelFormat, frame_bytes

FRAMES_PER_EXPERIENCE = 8  # 4 state frames + 4 next-state frames


@dataclass(frozen=True)
class Experience:
    state: FrameStack
    action: int
    reward: float
    next_state: FrameStack
    terminal: bool


class ReplayBuffer:
    """Ring buffer: oldest entry is overwritten first once full."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: list = []
        self._write = 0

    def __len__(self) -> int:
        return len(self._entries)

    def push(self, exp) -> None:
        if len(self._entries) < self.capacity:
            self._entries.append(exp)
        else:
            self._entries[self._write] = exp
        self._write = (self._write + 1) % self.capacity

    def snapshot(self) -> list:
        """Entries in insertion order, oldest first."""
        if len(self._entries) < self.capacity:
            return list(self._entries)
        return self._entries[self._write :] + self._entries[: self._write]

    def sample(self, batch: int, rng: np.random.Generator) -> list:
        """Uniform sample of ``batch`` distinct entries."""
        if len(self._entries) < batch:
            raise ValueError(f"buffer holds {len(self._entries)} < batch {batch}")
        idx = rng.choice(len(self._entries), size=batch, replace=False)
        return [self._entries[i] for i in idx]

    def live_bytes(self) -> int:
        """Packed frame bytes, counting every stack slot (no sharing credit)."""
        total = 0
        for exp in self._entries:
            total += sum(f.nbytes for f in exp.state.frames)
            total += sum(f.nbytes for f in exp.next_state.frames)
        return total


def memory_report(
    capacity: int,
    fmt: PixelFormat,
    frames_per_experience: int = FRAMES_PER_EXPERIENCE,
) -> tuple[int, float]:
    """Total (bytes, GiB) to hold ``capacity`` experiences in pixel format ``fmt``."""
    if capacity < 0:
        raise ValueError("capacity must be non-negative")
    total = capacity * frames_per_experience * frame_bytes(fmt)
    return total, total / 1024**3
