"""Emulated camera acquisition: pixelized images, filtering, moments, calibration.

Sensor coordinates are in micrometres with pixel (i, j) centred at
((i + 1/2) pitch, (j + 1/2) pitch); ``pixels[j, i]`` is row j (y), column i (x).
Fourier-plane images live on the same sensor; a momentum scale (inverse
micrometres per micrometre on the sensor) maps sensor offsets to momenta.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .noise import NoiseModel
from .pointer import (
    ExpectationSet,
    PointerConfig,
    PointerField,
    amplitude_grid,
    initial_field,
    sequence_field,
)
from .states import KETS, Projector, eigh_hermitian

Plane = Literal["image", "fourier_full", "fourier_x_only", "fourier_y_only"]
PLANES: tuple[Plane, ...] = ("image", "fourier_full", "fourier_x_only", "fourier_y_only")

PIXEL_PITCH_UM = 2.2
SENSOR_SHAPE = (2560, 1920)
#: Square crop of the sensor; keeps the pointer plus shift inside about 5 sigma of every edge.
CROP_PX = 1280
#: Measured Fourier-plane width of the pointer (standard deviation).
FOURIER_WIDTH_UM = 90.0

#: moment name -> plane it is measured in
MOMENT_PLANES = {"m_xy": "image", "m_pxpy": "fourier_full", "m_pxy": "fourier_x_only", "m_xpy": "fourier_y_only"}


class ImageError(ValueError):
    pass


@dataclass(frozen=True)
class CameraFrame:
    width_px: int
    height_px: int
    pitch: float = PIXEL_PITCH_UM
    origin_x: float | None = None
    origin_y: float | None = None

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("frame needs at least one pixel")
        if not self.pitch > 0:
            raise ValueError("pixel pitch must be positive")
        if self.origin_x is None:
            object.__setattr__(self, "origin_x", self.width_um / 2)
        if self.origin_y is None:
            object.__setattr__(self, "origin_y", self.height_um / 2)
        if not (0 <= self.origin_x <= self.width_um and 0 <= self.origin_y <= self.height_um):
            raise ValueError("frame origin lies outside the sensor")

    @property
    def width_um(self) -> float:
        return self.width_px * self.pitch

    @property
    def height_um(self) -> float:
        return self.height_px * self.pitch

    def offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-centre offsets from the origin along x and y (micrometres)."""
        u = (np.arange(self.width_px) + 0.5) * self.pitch - self.origin_x
        v = (np.arange(self.height_px) + 0.5) * self.pitch - self.origin_y
        return u, v


def default_frame(config: PointerConfig | None = None, size: int = CROP_PX,
                  pitch: float = PIXEL_PITCH_UM) -> CameraFrame:
    """Square crop with the unshifted pointer placed so the shifted pattern is centred."""
    config = PointerConfig() if config is None else config
    side = size * pitch
    return CameraFrame(size, size, pitch,
                       side / 2 - config.delta_x / 2, side / 2 - config.delta_y / 2)


def physical_momentum_scale(config: PointerConfig, fourier_width: float = FOURIER_WIDTH_UM) -> float:
    """Momentum per sensor micrometre for a lens giving ``fourier_width`` spot size."""
    return config.sigma_px / fourier_width


@dataclass(frozen=True)
class SyntheticImage:
    frame: CameraFrame
    pixels: np.ndarray
    plane: Plane = "image"
    normalization: float = 1.0
    momentum_scale: float | None = None

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.shape != (self.frame.height_px, self.frame.width_px):
            raise ValueError(f"pixel array {px.shape} does not match frame")
        if not np.all(np.isfinite(px)):
            raise ValueError("non-finite pixel values")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    def with_pixels(self, pixels) -> SyntheticImage:
        return replace(self, pixels=pixels)


def _check_on_sensor(field: PointerField, frame: CameraFrame, plane: Plane):
    cfg = field.config
    u_lo, v_lo = -frame.origin_x, -frame.origin_y
    u_hi, v_hi = frame.width_um - frame.origin_x, frame.height_um - frame.origin_y
    for t in field.terms():
        if plane in ("image", "fourier_y_only"):
            if t.center_x - 3 * cfg.sigma_x < u_lo or t.center_x + 3 * cfg.sigma_x > u_hi:
                warnings.warn("pointer extends beyond the sensor along x; image is clipped", stacklevel=3)
                return
        if plane in ("image", "fourier_x_only"):
            if t.center_y - 3 * cfg.sigma_y < v_lo or t.center_y + 3 * cfg.sigma_y > v_hi:
                warnings.warn("pointer extends beyond the sensor along y; image is clipped", stacklevel=3)
                return


def _noiseless_pixels(field: PointerField, frame: CameraFrame, plane: Plane, momentum_scale: float | None):
    u, v = frame.offsets()
    sx = momentum_scale if plane in ("fourier_full", "fourier_x_only") else 1.0
    sy = momentum_scale if plane in ("fourier_full", "fourier_y_only") else 1.0
    density = np.abs(amplitude_grid(field, u * sx, v * sy, plane)) ** 2
    # midpoint rule: density at the pixel centre times the pixel area in sampled units
    return density * (frame.pitch * sx) * (frame.pitch * sy)


def render_image(field: PointerField, frame: CameraFrame, plane: Plane = "image",
                 noise: NoiseModel | None = None, momentum_scale: float | None = None,
                 frame_index: int | tuple[int, ...] = 0) -> SyntheticImage:
    """Expose one frame of a single-branch field.

    With ``noise``, the frame intensity is multiplied by one Gaussian factor
    drawn from sub-stream ``frame_index`` and ``background_level`` is added.
    """
    if plane not in PLANES:
        raise ValueError(f"unknown plane {plane!r}")
    if plane != "image" and momentum_scale is None:
        momentum_scale = physical_momentum_scale(field.config)
    _check_on_sensor(field, frame, plane)
    pixels = _noiseless_pixels(field, frame, plane, momentum_scale)
    if noise is not None:
        factor = noise.frame_factors(noise.rng(*np.atleast_1d(frame_index)))[0]
        pixels = pixels * factor + noise.background_level
    return SyntheticImage(frame, pixels, plane, 1.0, momentum_scale if plane != "image" else None)


def background_image(frame: CameraFrame, noise: NoiseModel | None = None, plane: Plane = "image") -> SyntheticImage:
    """Exposure with the laser blocked."""
    level = 0.0 if noise is None else noise.background_level
    return SyntheticImage(frame, np.full((frame.height_px, frame.width_px), level), plane)


@lru_cache(maxsize=8)
def _raised_cosine(frame: CameraFrame, cutoff: float, rolloff: float = 0.5) -> np.ndarray:
    fy = np.fft.fftfreq(frame.height_px)
    fx = np.fft.rfftfreq(frame.width_px)
    # radial frequency in units of Nyquist (0.5 cycles per pixel)
    r = np.hypot(*np.meshgrid(fx, fy)) / 0.5
    lo, hi = cutoff * (1 - rolloff), cutoff * (1 + rolloff)
    h = np.where(r <= lo, 1.0, 0.0)
    band = (r > lo) & (r < hi)
    h[band] = 0.5 * (1 + np.cos(np.pi * (r[band] - lo) / (hi - lo)))
    return h


def preprocess(image: SyntheticImage, background: SyntheticImage,
               filter_cutoff: float | None = 0.5) -> SyntheticImage:
    """Background subtraction, raised-cosine low-pass, negative pixels clipped to 0."""
    if image.frame != background.frame:
        raise ImageError("image and background frames differ")
    data = image.pixels - background.pixels
    if filter_cutoff is not None:
        spec = np.fft.rfft2(data) * _raised_cosine(image.frame, filter_cutoff)
        data = np.fft.irfft2(spec, s=data.shape)
    return image.with_pixels(np.clip(data, 0, None))


def average_frames(images) -> SyntheticImage:
    images = list(images)
    if not images:
        raise ImageError("no frames to average")
    first = images[0]
    for im in images[1:]:
        if im.frame != first.frame or im.plane != first.plane:
            raise ImageError("frames to average do not match")
    return first.with_pixels(np.mean([im.pixels for im in images], axis=0))


def _axis_coords(image: SyntheticImage, momentum_scale: float | None):
    u, v = image.frame.offsets()
    scale = image.momentum_scale if momentum_scale is None else momentum_scale
    if image.plane in ("fourier_full", "fourier_x_only"):
        u = u * scale
    if image.plane in ("fourier_full", "fourier_y_only"):
        v = v * scale
    return u, v


def image_moment(image: SyntheticImage, momentum_scale: float | None = None) -> float:
    """sum (u_i - u0)(v_j - v0) I(i, j) / normalization, momentum axes converted by scale."""
    if image.pixels.sum() <= 0:
        raise ImageError("image has zero total intensity")
    if image.normalization <= 0:
        raise ImageError("image normalization must be positive")
    u, v = _axis_coords(image, momentum_scale)
    return float(v @ image.pixels @ u) / image.normalization


def centroid(image: SyntheticImage) -> tuple[float, float]:
    """Intensity-weighted mean offset from the frame origin (micrometres)."""
    total = image.pixels.sum()
    if total <= 0:
        raise ImageError("image has zero total intensity")
    u, v = image.frame.offsets()
    return float(image.pixels.sum(axis=0) @ u / total), float(image.pixels.sum(axis=1) @ v / total)


def calibrate_shift(shifted: SyntheticImage, reference: SyntheticImage, axis: Literal["x", "y"] = "x") -> float:
    """Crystal shift as the centroid difference <z> - z0 along ``axis``."""
    if shifted.frame != reference.frame:
        raise ImageError("images come from different frames")
    k = 0 if axis == "x" else 1
    return centroid(shifted)[k] - centroid(reference)[k]


def calibrate_momentum_scale(fourier_reference: SyntheticImage, config: PointerConfig,
                             axis: Literal["x", "y"] = "x", max_residual: float = 0.05) -> float:
    """Momentum per sensor micrometre from the unshifted pointer's Fourier image.

    The measured spot width w must correspond to 1/(2 sigma), so the scale
    is 1/(2 sigma w). A Gaussian with the measured moments has to reproduce
    the image to within ``max_residual`` (relative L2) or the fit is rejected.
    """
    img = fourier_reference.pixels
    total = img.sum()
    if total <= 0:
        raise ImageError("reference image has zero total intensity")
    u, v = fourier_reference.frame.offsets()
    pu, pv = img.sum(axis=0) / total, img.sum(axis=1) / total
    mu, mv = pu @ u, pv @ v
    wu = np.sqrt(pu @ (u - mu) ** 2)
    wv = np.sqrt(pv @ (v - mv) ** 2)
    gu = np.exp(-((u - mu) ** 2) / (2 * wu**2))
    gv = np.exp(-((v - mv) ** 2) / (2 * wv**2))
    model = np.outer(gv, gu)
    model *= total / model.sum()
    residual = np.linalg.norm(img - model) / np.linalg.norm(img)
    if residual > max_residual:
        raise ImageError(f"reference is not Gaussian (relative residual {residual:.3g})")
    if axis == "x":
        return config.sigma_px / wu
    return config.sigma_py / wv


# -- end-to-end pipeline ----------------------------------------------------------


def reference_intensity(config: PointerConfig, frame: CameraFrame) -> float:
    """Pixel sum of a no-crystal, no-polarizer exposure: the moment normalization."""
    image = render_image(initial_field(KETS["H"], config), frame, "image")
    return float(image.pixels.sum())


def render_state(rho, first: Projector, final: Projector, config: PointerConfig, frame: CameraFrame,
                 plane: Plane, momentum_scale: float | None = None) -> SyntheticImage:
    """Noiseless image of a (possibly mixed) state after the full sequence.

    Intensities add over the eigen-ensemble of ``rho``.
    """
    rho = np.asarray(rho, dtype=complex)
    if plane != "image" and momentum_scale is None:
        momentum_scale = physical_momentum_scale(config)
    vals, vecs = eigh_hermitian(rho)
    pixels = np.zeros((frame.height_px, frame.width_px))
    for weight, psi in zip(vals, vecs.T):
        if weight != 0:
            f = sequence_field(psi, first, final, config)
            pixels += weight * render_image(f, frame, plane, None, momentum_scale).pixels
    return SyntheticImage(frame, pixels, plane, 1.0, momentum_scale if plane != "image" else None)


def expose_frames(image: SyntheticImage, noise: NoiseModel | None, stream: tuple[int, ...] = ()) -> list[SyntheticImage]:
    """``noise.trials`` noisy exposures of a noiseless image (one frame without noise)."""
    if noise is None:
        return [image]
    factors = noise.frame_factors(noise.rng(*stream))
    return [image.with_pixels(image.pixels * f + noise.background_level) for f in factors]


def camera_expectation_set(rho, first: Projector, final: Projector, config: PointerConfig,
                           frame: CameraFrame | None = None, noise: NoiseModel | None = None,
                           filter_cutoff: float | None = 0.5, stream: int = 0) -> ExpectationSet:
    """The four moments as the lab measures them: render, clean, average, integrate.

    The momentum scale is recovered from a Fourier image of the unshifted
    pointer rather than taken from the rendering lens. Frames for moment
    ``m`` draw noise from sub-stream (stream, m).
    """
    frame = default_frame(config) if frame is None else frame
    norm = reference_intensity(config, frame)
    scale = physical_momentum_scale(config)
    ref = render_image(initial_field(KETS["H"], config), frame, "fourier_full", None, scale)
    scale_x = calibrate_momentum_scale(ref, config, "x")
    scale_y = calibrate_momentum_scale(ref, config, "y")
    values = {}
    for m, (name, plane) in enumerate(MOMENT_PLANES.items()):
        bg = background_image(frame, noise, plane)
        clean = render_state(rho, first, final, config, frame, plane, scale)
        frames = [preprocess(f, bg, filter_cutoff) for f in expose_frames(clean, noise, (stream, m))]
        avg = average_frames(frames)
        u, v = avg.frame.offsets()
        if plane in ("fourier_full", "fourier_x_only"):
            u = u * scale_x
        if plane in ("fourier_full", "fourier_y_only"):
            v = v * scale_y
        values[name] = float(v @ avg.pixels @ u) / norm
    return ExpectationSet(**values)


# -- serialization ----------------------------------------------------------------


def write_pgm(image: SyntheticImage, path) -> float:
    """16-bit binary PGM with a metadata comment; returns the intensity per count."""
    px = image.pixels
    peak = float(px.max())
    scale = peak / 65535 if peak > 0 else 1.0
    counts = np.rint(px / scale).clip(0, 65535).astype(">u2")
    meta = (f"# dmsim pitch={image.frame.pitch!r} origin_x={image.frame.origin_x!r} "
            f"origin_y={image.frame.origin_y!r} plane={image.plane} scale={scale!r} "
            f"normalization={image.normalization!r} momentum_scale={image.momentum_scale!r}")
    header = f"P5\n{meta}\n{image.frame.width_px} {image.frame.height_px}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + counts.tobytes())
    return scale


def read_pgm(path) -> SyntheticImage:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 4)
    if len(parts) < 5:
        raise ImageError(f"{path}: truncated PGM header")
    try:
        magic, meta, dims, maxval = (p.decode("ascii") for p in parts[:4])
    except UnicodeDecodeError:
        raise ImageError(f"{path}: not a dmsim 16-bit PGM") from None
    if magic != "P5" or maxval != "65535" or not meta.startswith("# dmsim"):
        raise ImageError(f"{path}: not a dmsim 16-bit PGM")
    fields = dict(item.split("=", 1) for item in meta.split()[2:])
    width, height = (int(t) for t in dims.split())
    counts = np.frombuffer(parts[4], dtype=">u2")
    if counts.size != width * height:
        raise ImageError(f"{path}: expected {width * height} pixels, found {counts.size}")
    counts = counts.reshape(height, width)
    momentum_scale = None if fields["momentum_scale"] == "None" else float(fields["momentum_scale"])
    frame = CameraFrame(width, height, float(fields["pitch"]), float(fields["origin_x"]), float(fields["origin_y"]))
    return SyntheticImage(frame, counts.astype(float) * float(fields["scale"]), fields["plane"],
                          float(fields["normalization"]), momentum_scale)


def write_csv_grid(image: SyntheticImage, path) -> None:
    """Plain-text pixel grid, one row per line, exact float repr."""
    rows = (",".join(repr(float(x)) for x in row) for row in image.pixels)
    Path(path).write_text("\n".join(rows) + "\n")


def read_csv_grid(path, frame: CameraFrame, plane: Plane = "image") -> SyntheticImage:
    rows = Path(path).read_text().splitlines()
    pixels = np.array([[float(x) for x in r.split(",")] for r in rows])
    return SyntheticImage(frame, pixels, plane)
