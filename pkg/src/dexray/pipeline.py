"""Two-pass metallic-response window extraction.

Dual-energy scanners render high effective-atomic-weight material in blue
hues, so an HSV band threshold isolates the metallic response.  Pass one
computes, per image, the morphologically cleaned response mask's centroid
and bounding rectangle, and reduces all bounding rectangles to one corpus
mean response window.  Pass two crops a mean-window-sized region centred on
each image's response centroid (padding with whitespace so the window always
fits) and downscales it, producing uniformly sized outputs.

``ResponseWindowCropper`` wraps the two passes as a scikit-learn
transformer: ``fit`` learns the mean window from a corpus, ``transform``
crops any images with it, so new scans are prepared for inference exactly
like the training data.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dataset import DatasetManifest
from .errors import NoContributorsError
from .imaging import (
    Centroid,
    HsvBounds,
    Rect,
    bgr_to_hsv,
    bounding_rect,
    centroid,
    close,
    crop,
    erode,
    in_range,
    pad,
    resize,
    shorter_side_crop,
)
from .pngio import load_bgr_png, save_bgr_png

logger = logging.getLogger(__name__)

# Default HSV slice for high-Z (metallic) responses in false-colour scans.
DEFAULT_HSV_LOWER = (90, 100, 100)
DEFAULT_HSV_UPPER = (180, 255, 255)
METALLIC_BOUNDS = HsvBounds(lower=DEFAULT_HSV_LOWER, upper=DEFAULT_HSV_UPPER)

DEFAULT_ERODE_SIZE = 3
DEFAULT_CLOSE_SIZE = 10
DEFAULT_RESIZE_FACTOR = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    hsv_lower: tuple[int, int, int] = DEFAULT_HSV_LOWER
    hsv_upper: tuple[int, int, int] = DEFAULT_HSV_UPPER
    erode_size: int = DEFAULT_ERODE_SIZE
    close_size: int = DEFAULT_CLOSE_SIZE
    resize_factor: float = DEFAULT_RESIZE_FACTOR
    network_input: int | None = None

    def __post_init__(self) -> None:
        HsvBounds(self.hsv_lower, self.hsv_upper)
        if self.erode_size < 1 or self.close_size < 1:
            raise ValueError("structuring element sizes must be >= 1")
        if not (0.0 < float(self.resize_factor)):
            raise ValueError("resize factor must be positive")
        if self.network_input is not None and self.network_input not in (224, 299):
            raise ValueError("network input size must be 224 or 299")

    @property
    def bounds(self) -> HsvBounds:
        return HsvBounds(self.hsv_lower, self.hsv_upper)

    def to_dict(self) -> dict:
        return {
            "hsv_lower": list(self.hsv_lower),
            "hsv_upper": list(self.hsv_upper),
            "erode_size": self.erode_size,
            "close_size": self.close_size,
            "resize_factor": self.resize_factor,
            "network_input": self.network_input,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = dict(data)
        for key in ("hsv_lower", "hsv_upper"):
            if key in kwargs:
                kwargs[key] = tuple(int(v) for v in kwargs[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class PassOneRecord:
    image_id: str
    centroid: Centroid | None
    brect: Rect | None
    empty_mask: bool


@dataclass(frozen=True)
class MeanWindow:
    """Arithmetic mean (w, h) of contributing response rectangles."""

    w: float
    h: float
    count: int


def response_mask(image: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Thresholded and morphologically cleaned metallic-response mask."""
    raw = in_range(bgr_to_hsv(image), cfg.bounds)
    return close(erode(raw, cfg.erode_size), cfg.close_size)


def analyze_image(
    image: np.ndarray, cfg: PipelineConfig, image_id: str = ""
) -> PassOneRecord:
    """Pass-one geometry for one image; an empty mask is recorded, not an error."""
    mask = response_mask(image, cfg)
    if not mask.any():
        return PassOneRecord(image_id=image_id, centroid=None, brect=None, empty_mask=True)
    return PassOneRecord(
        image_id=image_id,
        centroid=centroid(mask),
        brect=bounding_rect(mask),
        empty_mask=False,
    )


def compute_mean_window(records: list[PassOneRecord]) -> MeanWindow:
    """Mean response-rectangle size over records with a nonempty mask.

    Uses a sum/count mean, which is order-independent (and therefore safe
    under parallel pass-one scheduling); it is algebraically identical to
    the sequential running-mean update.
    """
    sizes = [(r.brect.w, r.brect.h) for r in records if not r.empty_mask]
    if not sizes:
        raise NoContributorsError("every image produced an empty response mask")
    ws, hs = zip(*sizes)
    return MeanWindow(w=sum(ws) / len(sizes), h=sum(hs) / len(sizes), count=len(sizes))


def _fallback_record(image: np.ndarray, image_id: str = "") -> PassOneRecord:
    """Whole-frame stand-in geometry for an image with no metallic response."""
    h, w = image.shape[:2]
    return PassOneRecord(
        image_id=image_id,
        centroid=Centroid(cx=(w - 1) / 2.0, cy=(h - 1) / 2.0),
        brect=Rect(x=0, y=0, w=w, h=h),
        empty_mask=False,
    )


def window_dims(mw: MeanWindow) -> tuple[int, int]:
    """Integer (width, height) of the crop window: ceiling of the mean."""
    return max(1, math.ceil(mw.w)), max(1, math.ceil(mw.h))


def extract_window(
    image: np.ndarray,
    rec: PassOneRecord,
    mw: MeanWindow,
    cfg: PipelineConfig,
    fill: tuple[int, int, int] = (255, 255, 255),
) -> np.ndarray:
    """Crop the mean-window region centred on the response centroid, then resize.

    The image is padded by half the window on every side, so a window whose
    origin sits at the rounded centroid (in padded coordinates) always fits
    and is centred on the centroid to within one pixel in original
    coordinates.  Empty-mask records fall back to the whole frame.
    """
    if rec.empty_mask or rec.centroid is None:
        rec = _fallback_record(image, rec.image_id)
    win_w, win_h = window_dims(mw)
    top, left = win_h // 2, win_w // 2
    padded = pad(image, top, win_h - top, left, win_w - left, fill=fill)
    ox = int(math.floor(rec.centroid.cx + 0.5))
    oy = int(math.floor(rec.centroid.cy + 0.5))
    window = crop(padded, Rect(x=ox, y=oy, w=win_w, h=win_h))
    return resize(window, output_dims(mw, cfg))


def output_dims(mw: MeanWindow, cfg: PipelineConfig) -> tuple[int, int]:
    """Final (height, width) of every pass-two output for this corpus."""
    win_w, win_h = window_dims(mw)
    f = float(cfg.resize_factor)
    return max(1, int(math.floor(win_h * f))), max(1, int(math.floor(win_w * f)))


@dataclass(frozen=True)
class PreprocessReport:
    mean_window: MeanWindow
    output_height: int
    output_width: int
    records: tuple[PassOneRecord, ...]
    empty_ids: tuple[str, ...]
    failures: tuple[tuple[str, str], ...]
    wall_seconds: float

    def to_dict(self) -> dict:
        return {
            "mean_window": {
                "w": self.mean_window.w,
                "h": self.mean_window.h,
                "count": self.mean_window.count,
            },
            "output_height": self.output_height,
            "output_width": self.output_width,
            "colour_space": "bgr",
            "records": [
                {
                    "image_id": r.image_id,
                    "empty_mask": r.empty_mask,
                    "centroid": None
                    if r.centroid is None
                    else {"cx": r.centroid.cx, "cy": r.centroid.cy},
                    "brect": None
                    if r.brect is None
                    else {"x": r.brect.x, "y": r.brect.y, "w": r.brect.w, "h": r.brect.h},
                }
                for r in self.records
            ],
            "empty_ids": list(self.empty_ids),
            "failures": [{"image_id": i, "error": e} for i, e in self.failures],
            "wall_seconds": self.wall_seconds,
        }


def preprocess_corpus(
    manifest: DatasetManifest,
    cfg: PipelineConfig,
    output_dir: str | Path,
    workers: int = 1,
) -> PreprocessReport:
    """Run both passes over a manifest and write one processed PNG per record.

    Outputs land in ``<output_dir>/processed/<image_id>.png``; when
    ``cfg.network_input`` is set a square network-ready copy is also written
    to ``<output_dir>/net<size>/<image_id>.png``.  Per-file I/O errors are
    collected in the report rather than aborting the run.
    """
    output_dir = Path(output_dir)
    start = time.perf_counter()

    def analyze_one(record):
        try:
            return record, analyze_image(load_bgr_png(record.path), cfg, record.image_id)
        except OSError as exc:
            return record, (record.image_id, str(exc))

    def run(fn, items):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]

    outcomes = run(analyze_one, manifest.records)
    failures = [o for _, o in outcomes if isinstance(o, tuple)]
    pairs = [(rec, o) for rec, o in outcomes if isinstance(o, PassOneRecord)]
    records = [o for _, o in pairs]
    contributors = [r for r in records if not r.empty_mask]
    if not contributors:
        raise NoContributorsError("every readable image produced an empty response mask")
    mw = compute_mean_window(contributors)
    out_h, out_w = output_dims(mw, cfg)

    def emit_one(pair):
        record, rec = pair
        try:
            image = load_bgr_png(record.path)
            processed = extract_window(image, rec, mw, cfg)
            save_bgr_png(output_dir / "processed" / f"{record.image_id}.png", processed)
            if cfg.network_input:
                net = shorter_side_crop(processed, cfg.network_input)
                save_bgr_png(
                    output_dir / f"net{cfg.network_input}" / f"{record.image_id}.png", net
                )
            return None
        except OSError as exc:
            return (record.image_id, str(exc))

    emit_failures = [f for f in run(emit_one, pairs) if f is not None]

    report = PreprocessReport(
        mean_window=mw,
        output_height=out_h,
        output_width=out_w,
        records=tuple(records),
        empty_ids=tuple(r.image_id for r in records if r.empty_mask),
        failures=tuple(failures + emit_failures),
        wall_seconds=time.perf_counter() - start,
    )
    logger.info(
        "preprocessed %d images to %dx%d (mean window %.2fx%.2f, %d empty masks)",
        len(records), out_h, out_w, mw.w, mw.h, len(report.empty_ids),
    )
    return report


class ResponseWindowCropper(BaseEstimator, TransformerMixin):
    """Learn a corpus mean response window, then crop images with it.

    Parameters mirror :class:`PipelineConfig`; defaults segment the metallic
    HSV band, erode with a 3x3 element, close with a 10x10 element, and
    halve the cropped window.
    """

    def __init__(
        self,
        hsv_lower: tuple[int, int, int] = DEFAULT_HSV_LOWER,
        hsv_upper: tuple[int, int, int] = DEFAULT_HSV_UPPER,
        erode_size: int = DEFAULT_ERODE_SIZE,
        close_size: int = DEFAULT_CLOSE_SIZE,
        resize_factor: float = DEFAULT_RESIZE_FACTOR,
        network_input: int | None = None,
    ):
        self.hsv_lower = hsv_lower
        self.hsv_upper = hsv_upper
        self.erode_size = erode_size
        self.close_size = close_size
        self.resize_factor = resize_factor
        self.network_input = network_input

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            hsv_lower=tuple(self.hsv_lower),
            hsv_upper=tuple(self.hsv_upper),
            erode_size=self.erode_size,
            close_size=self.close_size,
            resize_factor=self.resize_factor,
            network_input=self.network_input,
        )

    def fit(self, X, y=None):
        """Learn the mean response window from an iterable of BGR images."""
        cfg = self._config()
        records = [analyze_image(img, cfg, image_id=str(i)) for i, img in enumerate(X)]
        contributors = [r for r in records if not r.empty_mask]
        self.mean_window_ = compute_mean_window(contributors)
        self.n_empty_ = len(records) - len(contributors)
        return self

    def transform(self, X) -> list[np.ndarray]:
        """Crop each image around its own response centroid at the fitted window."""
        if not hasattr(self, "mean_window_"):
            raise RuntimeError("fit must run before transform")
        cfg = self._config()
        out = []
        for i, img in enumerate(X):
            rec = analyze_image(img, cfg, image_id=str(i))
            window = extract_window(img, rec, self.mean_window_, cfg)
            if cfg.network_input:
                window = shorter_side_crop(window, cfg.network_input)
            out.append(window)
        return out
