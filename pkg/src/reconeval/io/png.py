"""Lossless 8-bit PNG reading and writing (gray or RGB, no alpha)."""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from ..errors import ParseError
from ..radiometry import Image8

_SUPPORTED_MODES = {"L": 1, "RGB": 3}


def read_png(path) -> Image8:
    """Read an 8-bit gray or RGB PNG; other depths and palettes are errors."""
    try:
        with PILImage.open(path) as pil:
            if pil.format != "PNG":
                raise ParseError(f"{path}: not a PNG file (format {pil.format})")
            if pil.mode not in _SUPPORTED_MODES:
                raise ParseError(f"{path}: unsupported bit depth/format (mode {pil.mode})")
            data = np.asarray(pil)
    except UnidentifiedImageError:
        raise ParseError(f"{path}: not a recognizable PNG file") from None
    except (OSError, SyntaxError) as exc:
        raise ParseError(f"{path}: corrupt PNG ({exc})") from None
    if data.ndim == 2:
        data = data[:, :, None]
    return Image8(data.astype(np.uint8))


def write_png(img: Image8, path) -> None:
    """Write an image as PNG; reading it back yields identical pixels."""
    px = img.pixels
    if img.channels == 1:
        PILImage.fromarray(px[:, :, 0], mode="L").save(path, format="PNG")
    else:
        PILImage.fromarray(px, mode="RGB").save(path, format="PNG")
