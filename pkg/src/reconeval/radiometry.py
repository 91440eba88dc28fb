"""Color conversion, perceptual image metrics, and preprocessing operations.

Images are 8-bit, stored as (height, width, channels) arrays with 1 (gray)
or 3 (sRGB) channels. Color math uses the sRGB transfer curve with D65
primaries; the Lab conversion therefore maps sRGB white to exactly
L=100, a=0, b=0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

# sRGB (D65) linear RGB -> XYZ; row sums equal the D65 white point.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE_D65 = _RGB_TO_XYZ.sum(axis=1)  # (0.95047, 1.0, 1.08883)

_LUMA_601 = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Image8:
    """8-bit image, (h, w, c) uint8 with c in {1, 3}."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"image must be (h, w, 1) or (h, w, 3), got {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"image must be uint8, got {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])


def _require_rgb(img: Image8, what: str) -> None:
    if img.channels != 3:
        raise ValueError(f"{what}: expected 3 channels, got {img.channels}")


def _require_same_shape(a: Image8, b: Image8) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(
            f"image dimensions differ: {a.pixels.shape} vs {b.pixels.shape}"
        )


def _round_u8(values: np.ndarray) -> np.ndarray:
    """Round half up and clip into the 8-bit range."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# transfer curve and color spaces


def srgb_to_linear(u: np.ndarray) -> np.ndarray:
    """sRGB-encoded [0, 1] -> linear [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    return np.where(u <= 0.04045, u / 12.92, ((u + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(u: np.ndarray) -> np.ndarray:
    """Linear [0, 1] -> sRGB-encoded [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    return np.where(u <= 0.0031308, u * 12.92, 1.055 * np.maximum(u, 0.0) ** (1 / 2.4) - 0.055)


def srgb_to_lab(img: Image8) -> np.ndarray:
    """Convert an sRGB image to CIE Lab (D65 reference white).

    Returns an (h, w, 3) float array holding L in [0, 100] and signed a, b.
    """
    _require_rgb(img, "srgb_to_lab")
    linear = srgb_to_linear(img.pixels.astype(np.float64) / 255.0)
    xyz = linear @ _RGB_TO_XYZ.T
    return _xyz_to_lab(xyz)


def _lab_f(t: np.ndarray) -> np.ndarray:
    delta = 6.0 / 29.0
    return np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    delta = 6.0 / 29.0
    return np.where(t > delta, t**3, 3 * delta**2 * (t - 4.0 / 29.0))


def _xyz_to_lab(xyz: np.ndarray) -> np.ndarray:
    ratios = _lab_f(xyz / _WHITE_D65)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * ratios[..., 1] - 16.0
    lab[..., 1] = 500.0 * (ratios[..., 0] - ratios[..., 1])
    lab[..., 2] = 200.0 * (ratios[..., 1] - ratios[..., 2])
    return lab


def lab_to_srgb(lab: np.ndarray) -> Image8:
    """Inverse of :func:`srgb_to_lab`, with out-of-gamut values clipped."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * _WHITE_D65
    linear = np.clip(xyz @ _XYZ_TO_RGB.T, 0.0, 1.0)
    return Image8(_round_u8(linear_to_srgb(linear) * 255.0))


def luma(img: Image8) -> np.ndarray:
    """BT.601 luma of an image as (h, w) float64 (gray images pass through)."""
    px = img.pixels.astype(np.float64)
    if img.channels == 1:
        return px[:, :, 0]
    return px @ _LUMA_601


# ---------------------------------------------------------------------------
# color difference


@dataclass(frozen=True)
class DeltaEStats:
    """Euclidean-Lab color difference statistics over (masked) pixels.

    Channel differences are signed means of (first image - second image).
    """

    mean: float
    std: float
    min: float
    max: float
    mean_l_diff: float
    mean_a_diff: float
    mean_b_diff: float


def _normalize_mask(mask, shape) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    m = np.asarray(mask)
    if isinstance(mask, Image8):
        m = mask.pixels[:, :, 0]
    if m.shape != shape:
        raise ValueError(f"mask shape {m.shape} does not match image shape {shape}")
    m = m.astype(bool)
    if not m.any():
        raise ValueError("mask selects no pixels")
    return m


def delta_e_from_lab(lab_a: np.ndarray, lab_b: np.ndarray, mask=None) -> DeltaEStats:
    """Delta-E statistics for two precomputed Lab images."""
    lab_a = np.asarray(lab_a, dtype=np.float64)
    lab_b = np.asarray(lab_b, dtype=np.float64)
    if lab_a.shape != lab_b.shape:
        raise ValueError(f"Lab image shapes differ: {lab_a.shape} vs {lab_b.shape}")
    m = _normalize_mask(mask, lab_a.shape[:2])
    diff = lab_a[m] - lab_b[m]
    de = np.sqrt((diff**2).sum(axis=1))
    return DeltaEStats(
        mean=float(de.mean()),
        std=float(de.std()),
        min=float(de.min()),
        max=float(de.max()),
        mean_l_diff=float(diff[:, 0].mean()),
        mean_a_diff=float(diff[:, 1].mean()),
        mean_b_diff=float(diff[:, 2].mean()),
    )


def delta_e_stats(a: Image8, b: Image8, mask=None) -> DeltaEStats:
    """Per-pixel Euclidean Lab difference between two sRGB images.

    The first argument is the image under evaluation, the second the
    reference; channel means are signed (a minus b).
    """
    _require_same_shape(a, b)
    _require_rgb(a, "delta_e_stats")
    return delta_e_from_lab(srgb_to_lab(a), srgb_to_lab(b), mask)


# ---------------------------------------------------------------------------
# fidelity metrics


def psnr(a: Image8, b: Image8) -> float:
    """Peak signal-to-noise ratio in dB over all channels (inf if identical)."""
    _require_same_shape(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float((diff**2).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def _gaussian_kernel(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return k / k.sum()


def _window_mean(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    half = kernel.size // 2
    out = correlate1d(values, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(a: Image8, b: Image8) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    Uses the original constants (sigma = 1.5, K1 = 0.01, K2 = 0.03, dynamic
    range 255) and BT.601 luma for RGB inputs.
    """
    _require_same_shape(a, b)
    kernel = _gaussian_kernel()
    if a.height < kernel.size or a.width < kernel.size:
        raise ValueError(
            f"image {a.width}x{a.height} smaller than the {kernel.size}x{kernel.size} window"
        )
    x = luma(a)
    y = luma(b)
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    mu_x = _window_mean(x, kernel)
    mu_y = _window_mean(y, kernel)
    xx = _window_mean(x * x, kernel) - mu_x**2
    yy = _window_mean(y * y, kernel) - mu_y**2
    xy = _window_mean(x * y, kernel) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    return float((num / den).mean())


# ---------------------------------------------------------------------------
# preprocessing


def crop(img: Image8, rect) -> Image8:
    """Crop to rect = (x, y, width, height) in pixel coordinates."""
    x, y, w, h = (int(v) for v in rect)
    if w <= 0 or h <= 0:
        raise ValueError(f"crop rectangle must be non-empty, got {rect}")
    if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise ValueError(
            f"crop rectangle {rect} exceeds image bounds {img.width}x{img.height}"
        )
    return Image8(img.pixels[y : y + h, x : x + w].copy())


def _histogram_mapping(channel: np.ndarray, clip_limit: float) -> np.ndarray:
    """Equalization lookup table (float, 0..255) for one pixel region.

    With a finite clip limit the histogram is clipped at
    clip_limit * n_pixels / 256 and the excess is redistributed uniformly
    over all bins, which preserves the total count.
    """
    hist = np.bincount(channel.ravel(), minlength=256).astype(np.float64)
    n = float(channel.size)
    if math.isfinite(clip_limit):
        limit = clip_limit * n / 256.0
        excess = np.clip(hist - limit, 0.0, None).sum()
        hist = np.minimum(hist, limit) + excess / 256.0
    cdf = np.cumsum(hist)
    return 255.0 * cdf / n


def _clahe_gray(channel: np.ndarray, clip_limit: float, tiles_x: int, tiles_y: int) -> np.ndarray:
    h, w = channel.shape
    xb = (np.arange(tiles_x + 1) * w) // tiles_x
    yb = (np.arange(tiles_y + 1) * h) // tiles_y
    maps = np.empty((tiles_y, tiles_x, 256))
    for r in range(tiles_y):
        for c in range(tiles_x):
            tile = channel[yb[r] : yb[r + 1], xb[c] : xb[c + 1]]
            maps[r, c] = _histogram_mapping(tile, clip_limit)

    def interp_coords(coords: np.ndarray, bounds: np.ndarray, n_tiles: int):
        centers = (bounds[:-1] + bounds[1:] - 1) / 2.0
        hi = np.searchsorted(centers, coords, side="right")
        lo = np.clip(hi - 1, 0, n_tiles - 1)
        hi = np.clip(hi, 0, n_tiles - 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            weight = np.where(
                hi == lo, 0.0, (coords - centers[lo]) / (centers[hi] - centers[lo])
            )
        return lo, hi, weight

    r0, r1, wy = interp_coords(np.arange(h, dtype=np.float64), yb, tiles_y)
    c0, c1, wx = interp_coords(np.arange(w, dtype=np.float64), xb, tiles_x)
    r0 = r0[:, None]
    r1 = r1[:, None]
    wy = wy[:, None]
    c0 = c0[None, :]
    c1 = c1[None, :]
    wx = wx[None, :]
    out = (1 - wy) * ((1 - wx) * maps[r0, c0, channel] + wx * maps[r0, c1, channel]) + wy * (
        (1 - wx) * maps[r1, c0, channel] + wx * maps[r1, c1, channel]
    )
    return _round_u8(out)


def clahe(img: Image8, clip_limit: float = 2.0, tiles: tuple[int, int] = (8, 8)) -> Image8:
    """Contrast-limited adaptive histogram equalization.

    The image is split into tiles[0] x tiles[1] regions (columns x rows);
    each tile's clipped-histogram equalization mapping is interpolated
    bilinearly between tile centers. clip_limit is a multiple of the uniform
    histogram height (>= 1); pass math.inf to disable clipping, in which
    case a 1x1 tiling reduces to plain global histogram equalization.

    RGB images are equalized on BT.601 luma and the result is recombined by
    scaling each pixel's RGB by the luma gain (chroma-preserving; pure black
    pixels stay black).
    """
    tiles_x, tiles_y = (int(t) for t in tiles)
    if tiles_x < 1 or tiles_y < 1:
        raise ValueError(f"tile counts must be >= 1, got {tiles}")
    if tiles_x > img.width or tiles_y > img.height:
        raise ValueError(
            f"tiling {tiles_x}x{tiles_y} larger than image {img.width}x{img.height}"
        )
    if not clip_limit >= 1.0:
        raise ValueError(f"clip_limit must be >= 1, got {clip_limit}")
    if img.channels == 1:
        return Image8(_clahe_gray(img.pixels[:, :, 0], clip_limit, tiles_x, tiles_y))
    y = _round_u8(luma(img))
    y_eq = _clahe_gray(y, clip_limit, tiles_x, tiles_y).astype(np.float64)
    gain = np.divide(y_eq, y, out=np.zeros_like(y_eq), where=y > 0)
    return Image8(_round_u8(img.pixels.astype(np.float64) * gain[:, :, None]))


def white_balance_grayworld(img: Image8) -> Image8:
    """Gray-world white balance in linear RGB.

    Each channel is scaled so its linear-domain mean matches the green
    channel's, with gains clamped to [0.25, 4].
    """
    _require_rgb(img, "white_balance_grayworld")
    linear = srgb_to_linear(img.pixels.astype(np.float64) / 255.0)
    means = linear.reshape(-1, 3).mean(axis=0)
    if np.any(means <= 0.0):
        raise ValueError("zero-mean channel")
    gains = np.clip(means[1] / means, 0.25, 4.0)
    balanced = np.clip(linear * gains, 0.0, 1.0)
    return Image8(_round_u8(linear_to_srgb(balanced) * 255.0))


def exposure_normalize(img: Image8, exposure: float, reference_exposure: float) -> Image8:
    """Rescale linear intensities as if captured at the reference exposure."""
    if exposure <= 0.0 or reference_exposure <= 0.0:
        raise ValueError("exposures must be positive")
    linear = srgb_to_linear(img.pixels.astype(np.float64) / 255.0)
    scaled = np.clip(linear * (reference_exposure / exposure), 0.0, 1.0)
    return Image8(_round_u8(linear_to_srgb(scaled) * 255.0))
