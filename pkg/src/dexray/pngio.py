"""PNG reading and writing for BGR images and debug masks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .imaging import check_image, check_mask


def load_bgr_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit PNG as a BGR uint8 array."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return np.ascontiguousarray(rgb[..., ::-1])


def save_bgr_png(path: str | Path, image: np.ndarray) -> None:
    """Write a BGR uint8 array as an 8-bit 3-channel PNG."""
    check_image(image)
    rgb = np.ascontiguousarray(image[..., ::-1])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


def save_mask_png(path: str | Path, mask: np.ndarray) -> None:
    """Write a {0,1} mask as a single-channel PNG with values {0,255}."""
    check_mask(mask)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask * np.uint8(255), mode="L").save(path, format="PNG")
