"""Thermal frame I/O: a minimal NPY reader/writer, grayscale normalization,
and the sequence manifest that carries per-frame timestamps.

Only a strict NPY subset is supported: version 1.0, C-order, 2-D
little-endian float32/float64. Everything else is rejected rather than
guessed at.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, UnsupportedError, ValidationError

NPY_MAGIC = b"\x93NUMPY"

# Plausible clinical range for a ward thermal camera, in Celsius.
TEMP_MIN = -20.0
TEMP_MAX = 120.0


@dataclass(frozen=True)
class ThermalFrame:
    """A grid of Celsius readings plus a session-relative timestamp."""

    temps: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        temps = np.asarray(self.temps, dtype=np.float64)
        if temps.ndim != 2:
            raise ValidationError(f"temperature grid must be 2-D, got shape {temps.shape}")
        if not np.all(np.isfinite(temps)):
            raise ValidationError("temperature grid contains non-finite values")
        lo, hi = float(temps.min()), float(temps.max())
        if lo < TEMP_MIN or hi > TEMP_MAX:
            raise ValidationError(
                f"temperatures outside plausible range [{TEMP_MIN}, {TEMP_MAX}]: "
                f"min={lo}, max={hi}"
            )
        if self.timestamp < 0:
            raise ValidationError("timestamp must be non-negative")
        object.__setattr__(self, "temps", temps)

    @property
    def width(self) -> int:
        return self.temps.shape[1]

    @property
    def height(self) -> int:
        return self.temps.shape[0]

    def with_timestamp(self, t: float) -> "ThermalFrame":
        return ThermalFrame(self.temps, t)


@dataclass(frozen=True)
class GrayFrame:
    """8-bit grayscale frame produced by temperature windowing."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.dtype != np.uint8:
            raise ValidationError("gray frame must be a 2-D uint8 grid")
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def read_npy_frame(data: bytes, timestamp: float = 0.0) -> ThermalFrame:
    """Decode one thermal frame from NPY v1.0 bytes (C-order <f4/<f8 only)."""
    if len(data) < 10 or data[:6] != NPY_MAGIC:
        raise FormatError("missing NPY magic")
    major, minor = data[6], data[7]
    if (major, minor) != (1, 0):
        raise UnsupportedError(f"NPY version {major}.{minor} not supported (need 1.0)")
    (header_len,) = struct.unpack("<H", data[8:10])
    header_end = 10 + header_len
    if len(data) < header_end:
        raise FormatError("truncated NPY header")
    try:
        header = ast.literal_eval(data[10:header_end].decode("latin1"))
    except (SyntaxError, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"unparseable NPY header: {exc}") from exc
    if not isinstance(header, dict) or not {"descr", "fortran_order", "shape"} <= header.keys():
        raise FormatError("NPY header missing descr/fortran_order/shape")
    descr = header["descr"]
    if descr not in ("<f4", "<f8"):
        raise UnsupportedError(f"dtype {descr!r} not supported (need <f4 or <f8)")
    if header["fortran_order"]:
        raise UnsupportedError("Fortran-order arrays not supported")
    shape = header["shape"]
    if not (isinstance(shape, tuple) and len(shape) == 2
            and all(isinstance(n, int) and n > 0 for n in shape)):
        raise UnsupportedError(f"need a 2-D shape of positive ints, got {shape!r}")
    h, w = shape
    itemsize = int(descr[2])
    expected = h * w * itemsize
    payload = data[header_end:header_end + expected]
    if len(payload) < expected:
        raise FormatError(f"payload truncated: need {expected} bytes, have {len(payload)}")
    temps = np.frombuffer(payload, dtype=np.dtype(descr)).reshape(h, w)
    return ThermalFrame(temps, timestamp)


def write_npy_frame(frame: ThermalFrame) -> bytes:
    """Encode a frame in the same NPY subset; round-trips bit-exactly."""
    header = (
        f"{{'descr': '<f8', 'fortran_order': False, "
        f"'shape': ({frame.height}, {frame.width}), }}"
    )
    # Pad so the payload starts on a 64-byte boundary, per the NPY spec.
    base = len(NPY_MAGIC) + 2 + 2
    pad = 64 - (base + len(header) + 1) % 64
    header = header + " " * pad + "\n"
    out = bytearray()
    out += NPY_MAGIC
    out += bytes([1, 0])
    out += struct.pack("<H", len(header))
    out += header.encode("latin1")
    out += np.ascontiguousarray(frame.temps, dtype="<f8").tobytes()
    return bytes(out)


def normalize_to_gray(frame: ThermalFrame, lo: float, hi: float) -> GrayFrame:
    """Map temperatures in [lo, hi] linearly onto 0..255.

    Rounding is half-away-from-zero so outputs are bit-stable across
    platforms.
    """
    if lo >= hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    scaled = np.clip((frame.temps - lo) / (hi - lo), 0.0, 1.0) * 255.0
    return GrayFrame(np.floor(scaled + 0.5).astype(np.uint8))


def auto_window(frame: ThermalFrame) -> tuple[float, float]:
    """Contrast window from the 2nd/98th temperature percentiles.

    Robust to hot outliers (equipment, beverages); degenerate frames get
    a fixed +/-0.5 C widening.
    """
    lo, hi = np.percentile(frame.temps, [2.0, 98.0])
    if lo == hi:
        return float(lo) - 0.5, float(lo) + 0.5
    return float(lo), float(hi)


@dataclass
class FrameEntry:
    path: str
    t: float


@dataclass
class SequenceManifest:
    """Orders frame files in time and carries the nominal frame interval."""

    frames: list[FrameEntry] = field(default_factory=list)
    dt: float = 1.0
    resolution: tuple[int, int] | None = None  # (width, height)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("dt must be positive")
        times = [f.t for f in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("frame timestamps must be strictly increasing")


def load_manifest(path) -> SequenceManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "frames" not in doc:
        raise FormatError("manifest must be an object with a 'frames' list")
    try:
        frames = [FrameEntry(str(e["path"]), float(e["t"])) for e in doc["frames"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad frame entry in manifest: {exc}") from exc
    resolution = None
    if doc.get("resolution") is not None:
        w, h = doc["resolution"]
        resolution = (int(w), int(h))
    return SequenceManifest(frames, float(doc.get("dt", 1.0)), resolution)


def save_manifest(manifest: SequenceManifest, path) -> None:
    doc = {
        "dt": manifest.dt,
        "frames": [{"path": f.path, "t": f.t} for f in manifest.frames],
    }
    if manifest.resolution is not None:
        doc["resolution"] = list(manifest.resolution)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_sequence(manifest: SequenceManifest, base_dir) -> list[ThermalFrame]:
    """Read every frame in the manifest; all must share one resolution."""
    base = Path(base_dir)
    frames = []
    for entry in manifest.frames:
        frame = read_npy_frame((base / entry.path).read_bytes(), entry.t)
        if frames and (frame.width, frame.height) != (frames[0].width, frames[0].height):
            raise ValidationError(
                f"{entry.path}: resolution {frame.width}x{frame.height} differs "
                f"from first frame {frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    return frames
