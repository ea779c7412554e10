"""Pixel and geometry operations for false-colour scan processing.

Images are plain numpy arrays:

* BGR image  -- ``uint8`` array of shape ``(H, W, 3)``, channels ordered B, G, R.
* HSV image  -- ``uint8`` array of shape ``(H, W, 3)`` with H in ``[0, 180]``
  (degrees / 2, rounded half-up) and S, V in ``[0, 255]``.
* binary mask -- ``uint8`` array of shape ``(H, W)`` with values in ``{0, 1}``.

Conventions pinned here and used everywhere else in the package:

* x is the column coordinate, y is the row coordinate.
* rounding of real channel values to integers is half-up (``floor(x + 0.5)``).
* morphology treats cells outside the image as 0; a square structuring
  element of size n is anchored at ``(n // 2, n // 2)``.  Dilation is the
  Minkowski adjoint of erosion (the footprint is stamped onto each set
  pixel), which makes closing extensive, idempotent, and independent of
  the anchor choice for even-sized elements.
* resizing is bilinear with half-pixel-centre sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CropBoundsError, EmptyMaskError

WHITE_BGR = (255, 255, 255)
WHITE_HSV = (0, 0, 255)

HueSatVal = tuple[int, int, int]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle; x/y are the column/row of the top-left cell."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError(f"rect must have positive size, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"rect offset must be non-negative, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Centroid:
    """Real-valued mask centroid; cx is a column coordinate, cy a row coordinate."""

    cx: float
    cy: float


@dataclass(frozen=True)
class HsvBounds:
    """Inclusive per-channel HSV box used for range thresholding."""

    lower: HueSatVal
    upper: HueSatVal

    def __post_init__(self) -> None:
        for lo, hi, cap in zip(self.lower, self.upper, (180, 255, 255)):
            if not (0 <= lo <= hi <= cap):
                raise ValueError(
                    f"bounds must satisfy 0 <= lower <= upper <= {cap}, "
                    f"got {self.lower}..{self.upper}"
                )


def check_image(image: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate a 3-channel uint8 image and return it."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"{name} must be uint8, got {arr.dtype}")
    return arr


def check_mask(mask: np.ndarray, name: str = "mask") -> np.ndarray:
    """Validate a binary {0,1} uint8 mask and return it."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"{name} must be uint8, got {arr.dtype}")
    if arr.size and arr.max() > 1:
        raise ValueError(f"{name} cells must be 0 or 1")
    return arr


def round_half_up(values: np.ndarray | float) -> np.ndarray | int:
    """Round non-negative reals half-up (0.5 -> 1), elementwise."""
    return np.floor(np.asarray(values) + 0.5).astype(np.int64)


def bgr_to_hsv(image: np.ndarray) -> np.ndarray:
    """Convert a BGR image to HSV with hue on the half-degree [0, 180] scale."""
    check_image(image)
    bgr = image.astype(np.float64)
    b, g, r = bgr[..., 0], bgr[..., 1], bgr[..., 2]
    mx = np.max(bgr, axis=2)
    mn = np.min(bgr, axis=2)
    delta = mx - mn
    safe = np.where(delta == 0, 1.0, delta)
    hue = np.select(
        [delta == 0, mx == r, mx == g],
        [0.0, (60.0 * (g - b) / safe) % 360.0, 60.0 * (b - r) / safe + 120.0],
        default=60.0 * (r - g) / safe + 240.0,
    )
    sat = np.where(mx == 0, 0.0, 255.0 * delta / np.where(mx == 0, 1.0, mx))
    out = np.empty(image.shape, dtype=np.uint8)
    out[..., 0] = round_half_up(hue / 2.0)
    out[..., 1] = round_half_up(sat)
    out[..., 2] = mx.astype(np.uint8)
    return out


def hsv_to_bgr(image: np.ndarray) -> np.ndarray:
    """Invert :func:`bgr_to_hsv` (up to channel quantization)."""
    check_image(image)
    h_deg = image[..., 0].astype(np.float64) * 2.0
    s = image[..., 1].astype(np.float64) / 255.0
    v = image[..., 2].astype(np.float64) / 255.0
    c = v * s
    hp = h_deg / 60.0
    x = c * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    m = v - c
    k = np.floor(hp).astype(np.int64) % 6
    zeros = np.zeros_like(c)
    r1 = np.choose(k, [c, x, zeros, zeros, x, c])
    g1 = np.choose(k, [x, c, c, x, zeros, zeros])
    b1 = np.choose(k, [zeros, zeros, x, c, c, x])
    out = np.empty(image.shape, dtype=np.uint8)
    out[..., 0] = np.clip(round_half_up(255.0 * (b1 + m)), 0, 255)
    out[..., 1] = np.clip(round_half_up(255.0 * (g1 + m)), 0, 255)
    out[..., 2] = np.clip(round_half_up(255.0 * (r1 + m)), 0, 255)
    return out


def in_range(image: np.ndarray, bounds: HsvBounds) -> np.ndarray:
    """Mask cells whose three channels all lie within ``bounds`` (inclusive)."""
    check_image(image)
    lower = np.asarray(bounds.lower, dtype=np.uint8)
    upper = np.asarray(bounds.upper, dtype=np.uint8)
    ok = np.all((image >= lower) & (image <= upper), axis=2)
    return ok.astype(np.uint8)


def square_element(size: int) -> np.ndarray:
    """All-ones square structuring element of the given side length."""
    if size < 1:
        raise ValueError(f"structuring element size must be >= 1, got {size}")
    return np.ones((size, size), dtype=np.uint8)


def _element_size(se: np.ndarray | int) -> int:
    if isinstance(se, (int, np.integer)):
        if se < 1:
            raise ValueError(f"structuring element size must be >= 1, got {se}")
        return int(se)
    arr = np.asarray(se)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or not np.all(arr == 1):
        raise ValueError("only all-ones square structuring elements are supported")
    return arr.shape[0]


def _shifted(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """out[y, x] = mask[y + dy, x + dx], zero outside the image."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    y0, y1 = max(0, -dy), min(h, h - dy)
    x0, x1 = max(0, -dx), min(w, w - dx)
    if y0 < y1 and x0 < x1:
        out[y0:y1, x0:x1] = mask[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
    return out


def _axis_offsets(size: int) -> range:
    centre = size // 2
    return range(-centre, size - centre)


def erode(mask: np.ndarray, se: np.ndarray | int) -> np.ndarray:
    """Binary erosion: a cell survives iff the whole footprint lies on 1-cells.

    Out-of-bounds cells count as 0, so set pixels at the border always erode.
    The square element is separable, so the AND runs per axis.
    """
    check_mask(mask)
    size = _element_size(se)
    out = mask.astype(bool)
    for axis in range(2):
        acc = np.ones_like(out)
        for off in _axis_offsets(size):
            shift = (off, 0) if axis == 0 else (0, off)
            acc &= _shifted(out, *shift)
        out = acc
    return out.astype(np.uint8)


def dilate(mask: np.ndarray, se: np.ndarray | int) -> np.ndarray:
    """Binary dilation: the footprint is stamped onto every set cell.

    This is the Minkowski adjoint of :func:`erode` (reflected footprint),
    so ``close`` below is extensive and idempotent for any element size.
    """
    check_mask(mask)
    size = _element_size(se)
    out = mask.astype(bool)
    for axis in range(2):
        acc = np.zeros_like(out)
        for off in _axis_offsets(size):
            shift = (-off, 0) if axis == 0 else (0, -off)
            acc |= _shifted(out, *shift)
        out = acc
    return out.astype(np.uint8)


def close(mask: np.ndarray, se: np.ndarray | int) -> np.ndarray:
    """Binary closing: dilation followed by erosion with the same element."""
    return erode(dilate(mask, se), se)


def centroid(mask: np.ndarray) -> Centroid:
    """Unweighted mean (column, row) position of the nonzero cells."""
    check_mask(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise EmptyMaskError("centroid of an all-zero mask is undefined")
    return Centroid(cx=float(xs.mean()), cy=float(ys.mean()))


def bounding_rect(mask: np.ndarray) -> Rect:
    """Tightest axis-aligned rectangle covering all nonzero cells."""
    check_mask(mask)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise EmptyMaskError("bounding rect of an all-zero mask is undefined")
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return Rect(x=x0, y=y0, w=x1 - x0 + 1, h=y1 - y0 + 1)


def pad(
    image: np.ndarray,
    top: int,
    bottom: int,
    left: int,
    right: int,
    fill: HueSatVal = WHITE_BGR,
) -> np.ndarray:
    """Pad with whitespace; pass ``fill=WHITE_HSV`` for HSV-space images."""
    check_image(image)
    if min(top, bottom, left, right) < 0:
        raise ValueError("pad amounts must be non-negative")
    h, w = image.shape[:2]
    out = np.empty((h + top + bottom, w + left + right, 3), dtype=np.uint8)
    out[:, :] = np.asarray(fill, dtype=np.uint8)
    out[top:top + h, left:left + w] = image
    return out


def crop(image: np.ndarray, window: Rect) -> np.ndarray:
    """Extract the sub-grid covered by ``window``; it must fit in the image."""
    check_image(image)
    h, w = image.shape[:2]
    if window.x + window.w > w or window.y + window.h > h:
        raise CropBoundsError(
            f"window {window} exceeds the {h}x{w} image extent"
        )
    return image[window.y:window.y + window.h, window.x:window.x + window.w].copy()


def resize(image: np.ndarray, factor) -> np.ndarray:
    """Bilinear resize by a scale factor or to explicit ``(height, width)``.

    A numeric factor f maps to target dims ``(max(1, floor(h*f)), max(1, floor(w*f)))``;
    sampling uses half-pixel centres, so resizing to the same dims is exact.
    """
    check_image(image)
    h, w = image.shape[:2]
    if isinstance(factor, tuple):
        th, tw = int(factor[0]), int(factor[1])
        if th < 1 or tw < 1:
            raise ValueError(f"target dims must be >= 1x1, got {factor}")
    else:
        f = float(factor)
        if f <= 0:
            raise ValueError(f"resize factor must be positive, got {factor}")
        th = max(1, int(np.floor(h * f)))
        tw = max(1, int(np.floor(w * f)))
    if (th, tw) == (h, w):
        return image.copy()
    src = image.astype(np.float64)
    ys = np.clip((np.arange(th) + 0.5) * (h / th) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(tw) + 0.5) * (w / tw) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    blended = top * (1 - wy) + bot * wy
    return np.clip(round_half_up(blended), 0, 255).astype(np.uint8)


def shorter_side_crop(image: np.ndarray, target: int) -> np.ndarray:
    """Scale so the shorter side equals ``target``, then centre-crop to square.

    The aspect ratio is preserved up to integer rounding of the longer side.
    """
    check_image(image)
    if target < 1:
        raise ValueError(f"target side must be >= 1, got {target}")
    h, w = image.shape[:2]
    if h <= w:
        th = target
        tw = int(round_half_up(w * target / h))
    else:
        tw = target
        th = int(round_half_up(h * target / w))
    scaled = resize(image, (th, tw))
    x0 = (tw - target) // 2
    y0 = (th - target) // 2
    return crop(scaled, Rect(x=x0, y=y0, w=target, h=target))
