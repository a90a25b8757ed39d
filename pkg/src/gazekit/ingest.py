"""Frame ingestion.

Recordings are consumed either as a directory of losslessly encoded
still images (one per frame, lexicographic filename order) or as a raw
packed RGB24 byte stream. Container demuxing/decoding is out of scope:
export frames with any decoder first (see the README recipe).

Each recorded canvas is split into two panes: the game scene on top and
the gaze-marker overlay below it. The split is described by a
:class:`RecordingLayout`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Callable, Iterator, Optional

import numpy as np

from .geometry import Rect

RASTER_EXTENSIONS = {".png", ".ppm", ".bmp", ".tif", ".tiff"}

FrameIter = Iterator[tuple[int, np.ndarray]]


@dataclass(frozen=True)
class RecordingLayout:
    """Canvas geometry of a recording: where the game scene and the gaze
    overlay live. Both panes must share the same width because the overlay
    mirrors the horizontal space of the game scene."""

    canvas_width: int
    canvas_height: int
    game_pane: Rect
    gaze_pane: Rect

    def __post_init__(self):
        if self.canvas_width < 1 or self.canvas_height < 1:
            raise ValueError("canvas dimensions must be positive")
        for name, pane in (("game_pane", self.game_pane), ("gaze_pane", self.gaze_pane)):
            if not pane.inside(self.canvas_width, self.canvas_height):
                raise ValueError(
                    f"{name} {pane.as_tuple()} extends outside the "
                    f"{self.canvas_width}x{self.canvas_height} canvas"
                )
        if self.game_pane.overlaps(self.gaze_pane):
            raise ValueError("game pane and gaze pane must not overlap")
        if self.game_pane.w != self.gaze_pane.w:
            raise ValueError(
                f"panes must share the same width, got game={self.game_pane.w} "
                f"gaze={self.gaze_pane.w}"
            )


#: Stacked-pane layout used by the supported recording setup: a
#: 1920x2160 canvas with the game scene in the top half and the gaze
#: overlay in the bottom half. Override through the config file for any
#: other geometry.
DEFAULT_LAYOUT = RecordingLayout(
    canvas_width=1920,
    canvas_height=2160,
    game_pane=Rect(0, 0, 1920, 1080),
    gaze_pane=Rect(0, 1080, 1920, 1080),
)


class FrameSource:
    """Ordered RGB frames with declared dimensions.

    Iterating yields ``(frame_index, frame)`` pairs where ``frame`` is an
    ``(height, width, 3)`` uint8 array and indices run 0..n-1. Sources are
    single-consumer; directory-backed sources can be iterated again from
    the start, stream-backed sources cannot.
    """

    def __init__(
        self,
        width: int,
        height: int,
        frames: Callable[[], FrameIter],
        count: Optional[int] = None,
        frame_rate_hint: Optional[float] = None,
    ):
        self.width = width
        self.height = height
        self.count = count
        self.frame_rate_hint = frame_rate_hint
        #: Frames produced by the most recent iteration; equals ``count``
        #: (when known) after an exhausted pass.
        self.yielded = 0
        self._frames = frames

    def __iter__(self) -> FrameIter:
        self.yielded = 0
        for item in self._frames():
            self.yielded += 1
            yield item


def read_ppm(data: bytes, source_name: str = "<ppm>") -> np.ndarray:
    """Decode a binary (P6, maxval 255) PPM image to an RGB uint8 array."""
    buf = io.BytesIO(data)

    def next_token() -> bytes:
        tok = b""
        while True:
            c = buf.read(1)
            if not c:
                raise ValueError(f"{source_name}: truncated PPM header")
            if c == b"#":  # comment runs to end of line
                while c not in (b"\n", b""):
                    c = buf.read(1)
                continue
            if c.isspace():
                if tok:
                    return tok
                continue
            tok += c

    if next_token() != b"P6":
        raise ValueError(f"{source_name}: not a binary PPM (P6) file")
    width, height, maxval = (int(next_token()) for _ in range(3))
    if maxval != 255:
        raise ValueError(f"{source_name}: unsupported PPM maxval {maxval}")
    pixels = buf.read(width * height * 3)
    if len(pixels) != width * height * 3:
        raise ValueError(f"{source_name}: truncated PPM pixel data")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(frame: np.ndarray, path: Path | str) -> None:
    """Write an RGB uint8 array as a binary (P6) PPM file."""
    frame = np.ascontiguousarray(frame, dtype=np.uint8)
    h, w = frame.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(frame.tobytes())


def load_rgb(path: Path | str) -> np.ndarray:
    """Load one raster file as an (h, w, 3) uint8 array."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        return read_ppm(path.read_bytes(), source_name=path.name)
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def open_image_dir(
    path: Path | str,
    width: int,
    height: int,
    frame_rate_hint: Optional[float] = None,
) -> FrameSource:
    """Frame source over a directory of still images.

    Files are ordered lexicographically by name (exports should zero-pad
    frame numbers) and indexed 0..n-1. Every image must match the declared
    dimensions; a mismatch is reported with the offending filename.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"frame directory not found: {root}")
    files = sorted(
        p for p in root.iterdir() if p.is_file() and p.suffix.lower() in RASTER_EXTENSIONS
    )

    def frames() -> FrameIter:
        for index, file in enumerate(files):
            frame = load_rgb(file)
            fh, fw = frame.shape[:2]
            if (fw, fh) != (width, height):
                raise ValueError(
                    f"{file.name}: expected {width}x{height} frame, got {fw}x{fh}"
                )
            yield index, frame

    return FrameSource(width, height, frames, count=len(files), frame_rate_hint=frame_rate_hint)


def open_raw_stream(
    stream: BinaryIO,
    width: int,
    height: int,
    frame_rate_hint: Optional[float] = None,
) -> FrameSource:
    """Frame source over a packed RGB24 byte stream.

    The stream must be a concatenation of ``3 * width * height`` byte
    frames. A trailing partial frame raises an error after the last
    complete frame was yielded.
    """
    frame_bytes = 3 * width * height

    def frames() -> FrameIter:
        index = 0
        while True:
            chunk = b""
            while len(chunk) < frame_bytes:
                got = stream.read(frame_bytes - len(chunk))
                if not got:
                    break
                chunk += got
            if not chunk:
                return
            if len(chunk) < frame_bytes:
                raise ValueError(
                    f"truncated stream: frame {index} has {len(chunk)} of "
                    f"{frame_bytes} bytes"
                )
            yield index, np.frombuffer(chunk, dtype=np.uint8).reshape(height, width, 3)
            index += 1

    return FrameSource(width, height, frames, count=None, frame_rate_hint=frame_rate_hint)


def split_panes(frame: np.ndarray, layout: RecordingLayout) -> tuple[np.ndarray, np.ndarray]:
    """Crop a canvas frame into its (game_pane, gaze_pane) views."""
    h, w = frame.shape[:2]
    if (w, h) != (layout.canvas_width, layout.canvas_height):
        raise ValueError(
            f"frame is {w}x{h} but layout declares a "
            f"{layout.canvas_width}x{layout.canvas_height} canvas"
        )
    gp, zp = layout.game_pane, layout.gaze_pane
    game = frame[gp.y : gp.bottom, gp.x : gp.right]
    gaze = frame[zp.y : zp.bottom, zp.x : zp.right]
    return game, gaze
