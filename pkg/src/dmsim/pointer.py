"""Polarization qubit coupled to two Gaussian transverse pointers.

The pointer wavefunction along each axis is

    chi(z) = (2 pi sigma^2)^(-1/4) exp(-z^2 / (4 sigma^2)),

so ``sigma`` is the standard deviation of the intensity profile. We use
hbar = 1, momentum p = -i d/dz, and the momentum width is 1/(2 sigma).

A walk-off crystal displaces the pointer of one polarization component.
Every field produced here is therefore a finite sum of displaced Gaussians,
and all position/momentum moments have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .states import KETS, PARTNER, Projector, check_pure, eigh_hermitian, projector

Axis = Literal["x", "y"]
Operator = Literal["position", "momentum"]

DEFAULT_SIGMA_UM = 250.0
DEFAULT_DELTA_UM = 176.0


class ResolutionError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PointerConfig:
    sigma_x: float = DEFAULT_SIGMA_UM
    sigma_y: float = DEFAULT_SIGMA_UM
    delta_x: float = DEFAULT_DELTA_UM
    delta_y: float = DEFAULT_DELTA_UM

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "delta_x", "delta_y"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_strength(cls, strength: float, sigma: float = DEFAULT_SIGMA_UM) -> PointerConfig:
        """Symmetric geometry with delta/sigma = ``strength``."""
        return cls(sigma, sigma, strength * sigma, strength * sigma)

    @property
    def sigma_px(self) -> float:
        return 1 / (2 * self.sigma_x)

    @property
    def sigma_py(self) -> float:
        return 1 / (2 * self.sigma_y)

    @property
    def strength(self) -> float:
        return self.delta_x / self.sigma_x


@dataclass(frozen=True)
class GaussianTerm:
    coeff: complex
    center_x: float
    center_y: float


@dataclass(frozen=True)
class PointerField:
    """System-pointer state as {polarization label: Gaussian terms}."""

    config: PointerConfig
    branches: dict[str, tuple[GaussianTerm, ...]] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.branches)

    def terms(self) -> list[GaussianTerm]:
        """Terms of the only populated branch."""
        occupied = [terms for terms in self.branches.values() if terms]
        if len(occupied) > 1:
            raise ValueError(f"expected a single-branch field, got {self.labels}")
        return list(occupied[0]) if occupied else []

    def total_probability(self) -> float:
        return sum(_norm2(terms, self.config) for terms in self.branches.values())


@dataclass(frozen=True)
class MomentSpec:
    x_operator: Operator
    y_operator: Operator

    @property
    def key(self) -> str:
        return {
            ("position", "position"): "m_xy",
            ("momentum", "momentum"): "m_pxpy",
            ("momentum", "position"): "m_pxy",
            ("position", "momentum"): "m_xpy",
        }[self.x_operator, self.y_operator]


XY = MomentSpec("position", "position")
PXPY = MomentSpec("momentum", "momentum")
PXY = MomentSpec("momentum", "position")
XPY = MomentSpec("position", "momentum")
ALL_MOMENTS = (XY, PXPY, PXY, XPY)


@dataclass(frozen=True)
class ExpectationSet:
    """The four joint pointer moments, un-normalized (weighted by survival probability)."""

    m_xy: float
    m_pxpy: float
    m_pxy: float
    m_xpy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.m_xy, self.m_pxpy, self.m_pxy, self.m_xpy])

    @classmethod
    def from_array(cls, values) -> ExpectationSet:
        return cls(*(float(v) for v in values))

    def __add__(self, other: ExpectationSet) -> ExpectationSet:
        return ExpectationSet.from_array(self.as_array() + other.as_array())

    def __mul__(self, k: float) -> ExpectationSet:
        return ExpectationSet.from_array(k * self.as_array())

    __rmul__ = __mul__


# -- 1-D Gaussian overlap algebra ---------------------------------------------
# For chi_a(z) = chi(z - a):
#   <chi_a|chi_b>   = exp(-(a-b)^2 / (8 sigma^2))
#   <chi_a|z|chi_b> = (a+b)/2 * <chi_a|chi_b>
#   <chi_a|p|chi_b> = i (a-b) / (4 sigma^2) * <chi_a|chi_b>


def _overlap_matrices(centers: np.ndarray, sigma: float, op: Operator | None) -> np.ndarray:
    a = centers[:, None]
    b = centers[None, :]
    base = np.exp(-((a - b) ** 2) / (8 * sigma**2))
    if op is None:
        return base.astype(complex)
    if op == "position":
        return (a + b) / 2 * base + 0j
    if op == "momentum":
        return 1j * (a - b) / (4 * sigma**2) * base
    raise ValueError(f"unknown operator {op!r}")


def _coeff_centers(terms) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c = np.array([t.coeff for t in terms], dtype=complex)
    cx = np.array([t.center_x for t in terms], dtype=float)
    cy = np.array([t.center_y for t in terms], dtype=float)
    return c, cx, cy


def _bilinear(terms, config: PointerConfig, x_op: Operator | None, y_op: Operator | None) -> float:
    if not terms:
        return 0.0
    c, cx, cy = _coeff_centers(terms)
    gram = _overlap_matrices(cx, config.sigma_x, x_op) * _overlap_matrices(cy, config.sigma_y, y_op)
    return float(np.real(c.conj() @ gram @ c))


def _norm2(terms, config: PointerConfig) -> float:
    return _bilinear(terms, config, None, None)


def _merge(terms) -> tuple[GaussianTerm, ...]:
    """Combine terms sharing a center; drop exact zeros."""
    acc: dict[tuple[float, float], complex] = {}
    for t in terms:
        key = (t.center_x, t.center_y)
        acc[key] = acc.get(key, 0) + t.coeff
    return tuple(GaussianTerm(c, x, y) for (x, y), c in acc.items() if c != 0)


# -- pipeline -----------------------------------------------------------------


def initial_field(state, config: PointerConfig) -> PointerField:
    """Unshifted pointers times a|H> + b|V>."""
    a, b = check_pure(state)
    branches = {
        "H": _merge([GaussianTerm(complex(a), 0.0, 0.0)]),
        "V": _merge([GaussianTerm(complex(b), 0.0, 0.0)]),
    }
    return PointerField(config, branches)


def rebase(field: PointerField, labels: tuple[str, str]) -> PointerField:
    """Re-express the polarization part in another named orthonormal basis."""
    if set(labels) == set(field.branches) or not field.branches:
        return replace(field, branches={k: field.branches.get(k, ()) for k in labels})
    new = {}
    for new_label in labels:
        bra = KETS[new_label].conj()
        terms = []
        for old_label, old_terms in field.branches.items():
            amp = bra @ KETS[old_label]
            if amp != 0:
                terms.extend(GaussianTerm(amp * t.coeff, t.center_x, t.center_y) for t in old_terms)
        new[new_label] = _merge(terms)
    return PointerField(field.config, new)


def _label_of(target: Projector) -> str:
    if target.label in KETS:
        return target.label
    for label, ket in KETS.items():
        if abs(abs(np.vdot(ket, target.ket)) - 1) < 1e-12:
            return label
    raise ValueError(f"{target!r} is not one of the named polarization states")


def apply_weak_shift(field: PointerField, target: Projector, axis: Axis, delta: float) -> PointerField:
    """Walk-off crystal: displace the pointer of the ``target`` component along ``axis``."""
    if not delta > 0:
        raise ValueError(f"crystal shift must be positive, got {delta}")
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    label = _label_of(target)
    out = rebase(field, (label, PARTNER[label]))
    dx, dy = (delta, 0.0) if axis == "x" else (0.0, delta)
    shifted = tuple(GaussianTerm(t.coeff, t.center_x + dx, t.center_y + dy) for t in out.branches[label])
    return replace(out, branches={**out.branches, label: shifted})


def apply_strong_projection(field: PointerField, final: Projector) -> PointerField:
    """Polarizer onto ``final``; the surviving amplitude is not renormalized."""
    bra = final.ket.conj()
    terms = []
    for label, branch in field.branches.items():
        amp = bra @ KETS[label]
        terms.extend(GaussianTerm(amp * t.coeff, t.center_x, t.center_y) for t in branch)
    label = final.label or "final"
    return PointerField(field.config, {label: _merge(terms)})


def sequence_field(state, first: Projector, final: Projector, config: PointerConfig,
                   middle: Projector | None = None) -> PointerField:
    """Full weak(x) -> weak(y) -> strong pipeline for a pure input state."""
    middle = projector("D") if middle is None else middle
    f = initial_field(state, config)
    f = apply_weak_shift(f, first, "x", config.delta_x)
    f = apply_weak_shift(f, middle, "y", config.delta_y)
    return apply_strong_projection(f, final)


# -- amplitudes on grids --------------------------------------------------------


def _chi(z, center, sigma):
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((z - center) ** 2) / (4 * sigma**2))


def _chi_tilde(p, center, sigma):
    # (2 pi)^(-1/2) int chi(z - center) exp(-i p z) dz
    return (2 * sigma**2 / np.pi) ** 0.25 * np.exp(-(sigma**2) * p**2 - 1j * p * center)


def amplitude(field: PointerField, u, v, plane: str = "image") -> np.ndarray:
    """Single-branch amplitude in the requested representation.

    ``plane`` picks which axes are Fourier transformed: "image" (x, y),
    "fourier_full" (p_x, p_y), "fourier_x_only" (p_x, y), "fourier_y_only" (x, p_y).
    """
    fx = _chi_tilde if plane in ("fourier_full", "fourier_x_only") else _chi
    fy = _chi_tilde if plane in ("fourier_full", "fourier_y_only") else _chi
    if plane not in ("image", "fourier_full", "fourier_x_only", "fourier_y_only"):
        raise ValueError(f"unknown plane {plane!r}")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cfg = field.config
    out = np.zeros(np.broadcast(u, v).shape, dtype=complex)
    for t in field.terms():
        out += t.coeff * fx(u, t.center_x, cfg.sigma_x) * fy(v, t.center_y, cfg.sigma_y)
    return out


def amplitude_grid(field: PointerField, u, v, plane: str = "image") -> np.ndarray:
    """Amplitude on the tensor grid v x u, shape (len(v), len(u)); separable fast path."""
    if plane not in ("image", "fourier_full", "fourier_x_only", "fourier_y_only"):
        raise ValueError(f"unknown plane {plane!r}")
    fx = _chi_tilde if plane in ("fourier_full", "fourier_x_only") else _chi
    fy = _chi_tilde if plane in ("fourier_full", "fourier_y_only") else _chi
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    terms = field.terms()
    if not terms:
        return np.zeros((v.size, u.size), dtype=complex)
    c, cx, cy = _coeff_centers(terms)
    cfg = field.config
    fu = fx(u[None, :], cx[:, None], cfg.sigma_x)
    gv = fy(v[None, :], cy[:, None], cfg.sigma_y)
    return gv.T @ (c[:, None] * fu)


def probability_density(field: PointerField, x, y) -> np.ndarray:
    """|amplitude|^2 at (x, y), summed over polarization branches."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    for label in field.branches:
        part = PointerField(field.config, {label: field.branches[label]})
        if part.branches[label]:
            total += np.abs(amplitude(part, x, y)) ** 2
    return total


# -- moments --------------------------------------------------------------------


def analytic_moment(field: PointerField, spec: MomentSpec) -> float:
    """Exact <A_x B_y> on the un-normalized single-branch field."""
    return _bilinear(field.terms(), field.config, spec.x_operator, spec.y_operator)


def _axis_grid(centers, width, extent, spacing):
    lo = min(centers) - extent * width
    hi = max(centers) + extent * width
    n = int(np.ceil((hi - lo) / (spacing * width))) + 1
    return np.linspace(lo, hi, n)


def grid_moment(field: PointerField, spec: MomentSpec, extent: float = 8.0, spacing: float = 1 / 64) -> float:
    """Brute-force Riemann sum of the same moment on a 2-D grid.

    Momentum axes are sampled on the analytically transformed amplitude.
    ``extent`` and ``spacing`` are in units of the width of the sampled
    variable (sigma in position, 1/(2 sigma) in momentum).
    """
    return _grid_integral(field, spec, extent, spacing)


def grid_second_moment(field: PointerField, axis: Axis, extent: float = 8.0, spacing: float = 1 / 64) -> float:
    """Centered <(z - <z>)^2> of the normalized image-plane intensity."""
    pts = _grid_points(field, "image", extent, spacing)
    xs, ys, dens, area = pts
    w = dens * area
    total = w.sum()
    z = xs if axis == "x" else ys
    mean = (z * w).sum() / total
    return float(((z - mean) ** 2 * w).sum() / total)


def _grid_points(field, plane, extent, spacing):
    if extent < 6:
        raise ResolutionError(f"grid extent {extent} sigma is below the 6 sigma minimum")
    if spacing > 1 / 32:
        raise ResolutionError(f"grid spacing {spacing} sigma is coarser than sigma/32")
    cfg = field.config
    terms = field.terms()
    cx = [t.center_x for t in terms] or [0.0]
    cy = [t.center_y for t in terms] or [0.0]
    if plane in ("fourier_full", "fourier_x_only"):
        gx = _axis_grid([0.0], cfg.sigma_px, extent, spacing)
    else:
        gx = _axis_grid(cx, cfg.sigma_x, extent, spacing)
    if plane in ("fourier_full", "fourier_y_only"):
        gy = _axis_grid([0.0], cfg.sigma_py, extent, spacing)
    else:
        gy = _axis_grid(cy, cfg.sigma_y, extent, spacing)
    xs, ys = np.meshgrid(gx, gy, indexing="ij")
    # every grid point is still visited; the amplitude is just evaluated separably
    dens = np.abs(amplitude_grid(field, gx, gy, plane).T) ** 2
    area = (gx[1] - gx[0]) * (gy[1] - gy[0])
    return xs, ys, dens, area


def _grid_integral(field, spec, extent, spacing):
    plane = {
        "m_xy": "image",
        "m_pxpy": "fourier_full",
        "m_pxy": "fourier_x_only",
        "m_xpy": "fourier_y_only",
    }[spec.key]
    xs, ys, dens, area = _grid_points(field, plane, extent, spacing)
    # fixed-order summation keeps the result independent of any row partitioning
    return float(np.sum(np.sum(xs * ys * dens, axis=1)) * area)


def field_moments(field: PointerField) -> ExpectationSet:
    return ExpectationSet(*(analytic_moment(field, s) for s in ALL_MOMENTS))


def expectation_set(rho, first: Projector, final: Projector, config: PointerConfig) -> ExpectationSet:
    """Probability-weighted pointer moments for the sequence first(x) -> D(y) -> final."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise UnsupportedDimensionError(f"pointer simulation needs d = 2, got shape {rho.shape}")
    vals, vecs = eigh_hermitian(rho)
    total = ExpectationSet(0.0, 0.0, 0.0, 0.0)
    for weight, psi in zip(vals, vecs.T):
        if weight == 0:
            continue
        total = total + weight * field_moments(sequence_field(psi, first, final, config))
    return total
