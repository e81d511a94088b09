"""Frame preprocessing: RGB -> grayscale -> 84x84 -> single-bit pixels.

The live representation of a processed frame is bit-packed (882 bytes for
84x84). Byte-per-pixel sizes are kept around as an accounting mode so the
reported numbers line up with storing one value per pixel in the replay
memory; see :func:`frame_bytes`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

FRAME_SIDE = 84
FRAME_PIXELS = FRAME_SIDE * FRAME_SIDE
PACKED_BYTES = FRAME_PIXELS // 8
STACK_DEPTH = 4
BINARIZE_THRESHOLD = 127.5


class PixelFormat(enum.Enum):
    RGB_FLOAT64 = "rgb_float64"
    GRAY_FLOAT64 = "gray_float64"
    BINARY_BYTE = "binary_byte"
    BINARY_PACKED = "binary_packed"


_BYTES_PER_FRAME = {
    PixelFormat.RGB_FLOAT64: FRAME_PIXELS * 3 * 8,
    PixelFormat.GRAY_FLOAT64: FRAME_PIXELS * 8,
    PixelFormat.BINARY_BYTE: FRAME_PIXELS,
    PixelFormat.BINARY_PACKED: PACKED_BYTES,
}


def frame_bytes(fmt: PixelFormat) -> int:
    """Bytes needed to store one 84x84 frame in the given pixel format."""
    return _BYTES_PER_FRAME[fmt]


def frame_kb(fmt: PixelFormat) -> float:
    return frame_bytes(fmt) / 1024


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """BT.601 luma, computed with integer weights so pure colors are exact.

    Input is (H, W, 3) with 8-bit channels; output is float64 in [0, 255].
    """
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB frame, got {frame.shape}")
    rgb = frame.astype(np.float64)
    gray = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2]) / 1000
    return gray


def downscale(gray: np.ndarray, factor: int = 3) -> np.ndarray:
    """Exact block-mean downscale; input must tile evenly by ``factor``."""
    h, w = gray.shape
    if h % factor or w % factor:
        raise ValueError(f"{gray.shape} does not tile by {factor}")
    oh, ow = h // factor, w // factor
    return gray.reshape(oh, factor, ow, factor).mean(axis=(1, 3))


class BinaryFrame:
    """An 84x84 single-bit image, stored bit-packed (882 bytes)."""

    __slots__ = ("_packed",)

    def __init__(self, packed: bytes):
        if len(packed) != PACKED_BYTES:
            raise ValueError(f"expected {PACKED_BYTES} packed bytes, got {len(packed)}")
        self._packed = bytes(packed)

    @classmethod
    def from_array(cls, bits: np.ndarray) -> "BinaryFrame":
        if bits.shape != (FRAME_SIDE, FRAME_SIDE):
            raise ValueError(f"expected {FRAME_SIDE}x{FRAME_SIDE} bits, got {bits.shape}")
        return cls(np.packbits(bits.astype(np.uint8).ravel()).tobytes())

    def to_array(self) -> np.ndarray:
        bits = np.unpackbits(np.frombuffer(self._packed, dtype=np.uint8))
        return bits.reshape(FRAME_SIDE, FRAME_SIDE)

    @property
    def packed(self) -> bytes:
        return self._packed

    @property
    def nbytes(self) -> int:
        return PACKED_BYTES

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryFrame) and self._packed == other._packed

    def __hash__(self) -> int:
        return hash(self._packed)


def binarize(gray: np.ndarray, threshold: float = BINARIZE_THRESHOLD) -> BinaryFrame:
    """Threshold to bits: 1 iff strictly above ``threshold``."""
    return BinaryFrame.from_array(gray > threshold)


def binary_observation(rgb_frame: np.ndarray) -> BinaryFrame:
    """The full pipeline from a rendered RGB frame to a packed binary frame."""
    gray = to_grayscale(rgb_frame)
    factor = gray.shape[0] // FRAME_SIDE
    return binarize(downscale(gray, factor))


@dataclass(frozen=True)
class FrameStack:
    """The last four binary frames, oldest first."""

    frames: tuple[BinaryFrame, ...]

    def __post_init__(self):
        if len(self.frames) != STACK_DEPTH:
            raise ValueError(f"stack must hold {STACK_DEPTH} frames")

    def to_input(self, dtype=np.float32) -> np.ndarray:
        """(84, 84, 4) tensor of 0.0/1.0 values, frames stacked channels-last."""
        return np.stack([f.to_array() for f in self.frames], axis=-1).astype(dtype)


def stack_init(first: BinaryFrame) -> FrameStack:
    return FrameStack((first,) * STACK_DEPTH)


def stack_push(stack: FrameStack, frame: BinaryFrame) -> FrameStack:
    return FrameStack(stack.frames[1:] + (frame,))


def write_pbm(path, frame: BinaryFrame) -> None:
    """Dump as binary PBM (P4). Rows are padded to whole bytes per the format."""
    bits = frame.to_array()
    header = f"P4\n{FRAME_SIDE} {FRAME_SIDE}\n".encode("ascii")
    packed_rows = np.packbits(bits, axis=1)  # pads each row to 11 bytes
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(packed_rows.tobytes())


def write_pgm(path, gray: np.ndarray) -> None:
    """Dump a grayscale image as binary PGM (P5), rounding to 8-bit."""
    data = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())
