"""Parallel escape-time rendering of affine slices of C^2.

A slice picks a base point and two directions; each pixel's parameter
pair (s, t) at the pixel center gives a start point whose orbit is
iterated until log|z| crosses the escape radius.  Rows are rendered
independently (numpy-vectorized when the radius allows the native fast
path, scaled scalar arithmetic otherwise) and merged by index, so the
output is byte-identical for every worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import entire, numeric
from .entire import EntireFunction
from .errors import MagnitudeOverflow, ValidationError
from .henon import HenonMap
from .numeric import from_cartesian

MAX_PIXELS = 16384
# above this escape log-radius the native fast path cannot test escape
NATIVE_LOG_RADIUS = 690.0

# Hue wheel, index i at hue i/64 with full saturation and value
# (HSV -> RGB, channels rounded to 0..255).
PALETTE = (
    (255, 0, 0), (255, 24, 0), (255, 48, 0), (255, 72, 0), (255, 96, 0), (255, 120, 0), (255, 143, 0), (255, 167, 0),
    (255, 191, 0), (255, 215, 0), (255, 239, 0), (247, 255, 0), (223, 255, 0), (199, 255, 0), (175, 255, 0), (151, 255, 0),
    (128, 255, 0), (104, 255, 0), (80, 255, 0), (56, 255, 0), (32, 255, 0), (8, 255, 0), (0, 255, 16), (0, 255, 40),
    (0, 255, 64), (0, 255, 88), (0, 255, 112), (0, 255, 135), (0, 255, 159), (0, 255, 183), (0, 255, 207), (0, 255, 231),
    (0, 255, 255), (0, 231, 255), (0, 207, 255), (0, 183, 255), (0, 159, 255), (0, 135, 255), (0, 112, 255), (0, 88, 255),
    (0, 64, 255), (0, 40, 255), (0, 16, 255), (8, 0, 255), (32, 0, 255), (56, 0, 255), (80, 0, 255), (104, 0, 255),
    (128, 0, 255), (151, 0, 255), (175, 0, 255), (199, 0, 255), (223, 0, 255), (247, 0, 255), (255, 0, 239), (255, 0, 215),
    (255, 0, 191), (255, 0, 167), (255, 0, 143), (255, 0, 120), (255, 0, 96), (255, 0, 72), (255, 0, 48), (255, 0, 24),
)


@dataclass(frozen=True)
class SliceSpec:
    base: tuple            # (z, w) complex base point
    u: tuple               # complex-2 direction for s
    v: tuple               # complex-2 direction for t
    width: int
    height: int
    window: tuple          # (s_min, s_max, t_min, t_max)
    max_iter: int
    log_escape_radius: float

    def validate(self) -> None:
        if not (1 <= self.width <= MAX_PIXELS
                and 1 <= self.height <= MAX_PIXELS):
            raise ValidationError(
                f"pixel counts must lie in [1, {MAX_PIXELS}]")
        if self.u == (0j, 0j) or self.v == (0j, 0j):
            raise ValidationError("slice directions must be nonzero")
        s0, s1, t0, t1 = self.window
        if not (s0 < s1 and t0 < t1):
            raise ValidationError("window must have positive extent")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")


@dataclass(frozen=True)
class EscapeGrid:
    counts: np.ndarray     # row-major int32, shape (height, width)
    meta: SliceSpec

    def tobytes(self) -> bytes:
        return self.counts.tobytes()


# The documented reference slice: the z-plane through w = 0 for the
# exponential map with delta = 1.
STANDARD_SLICE = SliceSpec(
    base=(0j, 0j),
    u=(1 + 0j, 0j),
    v=(1j, 0j),
    width=256,
    height=256,
    window=(-3.0, 3.0, -3.0, 3.0),
    max_iter=50,
    log_escape_radius=math.log(1e6),
)

# SHA-256 of the PPM rendered from STANDARD_SLICE with exp and delta = 1.
STANDARD_SLICE_SHA256 = \
    "1625a35ceddc98b70fc779ed138f4f55f36542a561ed5b05f2a9f2b34113e791"


def _vector_eval(f: EntireFunction, z: np.ndarray) -> np.ndarray:
    if f.name == "exp":
        return np.exp(z)
    if f.name == "sin":
        return np.sin(z)
    return np.array([f.evaluator(complex(x)) for x in z], dtype=complex)


def _row_params(spec: SliceSpec, j: int):
    s0, s1, t0, t1 = spec.window
    s = s0 + (np.arange(spec.width) + 0.5) * (s1 - s0) / spec.width
    t = t1 - (j + 0.5) * (t1 - t0) / spec.height
    return s, t


def _render_row_fast(m: HenonMap, spec: SliceSpec, j: int) -> np.ndarray:
    s, t = _row_params(spec, j)
    bz, bw = spec.base
    uz, uw = spec.u
    vz, vw = spec.v
    z = bz + s * uz + t * vz
    w = bw + s * uw + t * vw
    counts = np.full(spec.width, spec.max_iter, dtype=np.int32)
    radius = math.exp(spec.log_escape_radius)
    alive = np.abs(z) <= radius
    counts[~alive] = 0
    n = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while n < spec.max_iter and alive.any():
            n += 1
            zn = _vector_eval(m.f, z[alive]) - m.delta * w[alive]
            w[alive] = z[alive]
            z[alive] = zn
            escaped_now = ~(np.abs(zn) <= radius)  # catches inf and nan
            idx = np.flatnonzero(alive)
            counts[idx[escaped_now]] = n
            alive[idx[escaped_now]] = False
    return counts


def _render_row_scaled(m: HenonMap, spec: SliceSpec, j: int) -> np.ndarray:
    s, t = _row_params(spec, j)
    bz, bw = spec.base
    uz, uw = spec.u
    vz, vw = spec.v
    counts = np.full(spec.width, spec.max_iter, dtype=np.int32)
    delta = from_cartesian(m.delta)
    for i in range(spec.width):
        z = from_cartesian(bz + s[i] * uz + t * vz)
        w = from_cartesian(bw + s[i] * uw + t * vw)
        if z.log_abs > spec.log_escape_radius:
            counts[i] = 0
            continue
        for n in range(1, spec.max_iter + 1):
            try:
                zn = entire.evaluate_scaled(m.f, z) - delta * w
            except MagnitudeOverflow:
                counts[i] = n
                break
            w, z = z, zn
            if z.log_abs > spec.log_escape_radius:
                counts[i] = n
                break
    return counts


def render_slice(m: HenonMap, spec: SliceSpec,
                 threads: int = 1) -> EscapeGrid:
    """Escape counts per pixel; identical output for any thread count."""
    spec.validate()
    if threads < 1:
        raise ValidationError("threads must be >= 1")
    fast = spec.log_escape_radius <= NATIVE_LOG_RADIUS
    row = _render_row_fast if fast else _render_row_scaled
    counts = np.empty((spec.height, spec.width), dtype=np.int32)
    if threads == 1:
        for j in range(spec.height):
            counts[j] = row(m, spec, j)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for j, result in enumerate(pool.map(
                    lambda jj: row(m, spec, jj), range(spec.height))):
                counts[j] = result
    return EscapeGrid(counts=counts, meta=spec)


def write_ppm(grid: EscapeGrid, path: str) -> None:
    """Binary PPM; counts below max_iter map through the palette wheel,
    pixels that never escaped stay black.  Row 0 is the t_max edge."""
    h, w = grid.counts.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    palette = np.array(PALETTE, dtype=np.uint8)
    img = np.zeros((h, w, 3), dtype=np.uint8)
    escaped = grid.counts < grid.meta.max_iter
    img[escaped] = palette[grid.counts[escaped] % 64]
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(img.tobytes())
