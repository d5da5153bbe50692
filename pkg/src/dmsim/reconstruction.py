"""Density-matrix elements from pointer moments, plus baselines.

The element rho(I, J) = <a_I|rho|a_J> is read out from the sequence
pi_J pi_D pi_I: weak shift of the I component along x, weak shift of the
D component along y, then a strong polarizer onto J.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .noise import NoiseModel, perturb
from .pointer import ExpectationSet, PointerConfig, UnsupportedDimensionError, expectation_set
from .states import KETS, Projector, project_to_physical, projector, trace_distance

BASIS = ("H", "V")
MIDDLE = "D"


@dataclass(frozen=True)
class SequenceSpec:
    """Projector sequence pi_final pi_middle pi_first."""

    first: Projector
    middle: Projector
    final: Projector

    def __post_init__(self):
        dims = {self.first.dim, self.middle.dim, self.final.dim}
        if len(dims) != 1:
            raise ValueError(f"projector dimensions disagree: {sorted(dims)}")
        d = self.dim
        for p in (self.first, self.final):
            overlap = abs(np.vdot(p.ket, self.middle.ket))
            if abs(overlap - 1 / np.sqrt(d)) > 1e-10:
                raise ValueError(f"|<a|b0>| = {overlap:.6g}, complementarity needs 1/sqrt({d})")

    @property
    def dim(self) -> int:
        return self.first.dim

    @classmethod
    def polarization(cls, first: str, final: str, middle: str = MIDDLE) -> SequenceSpec:
        return cls(projector(first), projector(middle), projector(final))

    @classmethod
    def fourier(cls, i: int, j: int, dim: int) -> SequenceSpec:
        """Computational-basis first/final projectors with the uniform reference state."""
        eye = np.eye(dim, dtype=complex)
        b0 = np.ones(dim, dtype=complex) / np.sqrt(dim)
        return cls(Projector(eye[i]), Projector(b0), Projector(eye[j]))


@dataclass(frozen=True)
class ReconstructedElement:
    value: complex
    row_label: str
    col_label: str
    method: Literal["operator", "pointer_weak_limit", "pointer_finite"]
    strength: float


@dataclass(frozen=True)
class TomographyData:
    """Outcome probabilities for the six polarization projectors."""

    p_H: float
    p_V: float
    p_D: float
    p_A: float
    p_R: float
    p_L: float

    def __post_init__(self):
        for name, p in vars(self).items():
            if not -1e-12 <= p <= 1 + 1e-12:
                raise ValueError(f"{name} = {p} is not a probability")

    @classmethod
    def from_state(cls, rho) -> TomographyData:
        rho = np.asarray(rho, dtype=complex)
        probs = {f"p_{k}": float(np.real(KETS[k].conj() @ rho @ KETS[k])) for k in "HVDARL"}
        return cls(**probs)

    def with_noise(self, noise: NoiseModel, rng: np.random.Generator) -> TomographyData:
        """Perturb each projector probability like a pointer moment, then clip into [0, 1]."""
        values = perturb(self.as_array(), noise, rng)
        return TomographyData(*np.clip(values, 0, 1))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_H, self.p_V, self.p_D, self.p_A, self.p_R, self.p_L])


def operator_weak_average(rho, seq: SequenceSpec) -> complex:
    """Tr[pi_final pi_middle pi_first rho]; equals rho(first, final) / d."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (seq.dim, seq.dim):
        raise ValueError(f"state of shape {rho.shape} does not match sequence dimension {seq.dim}")
    op = seq.final.matrix @ seq.middle.matrix @ seq.first.matrix
    return complex(np.trace(op @ rho))


def direct_element(moments: ExpectationSet, config: PointerConfig) -> complex:
    """rho(I, J) from the four joint moments.

    Re = 2/(dx dy) (<xy> - 4 sx^2 sy^2 <px py>)
    Im = 2/(dx dy) (2 sx^2 <px y> + 2 sy^2 <x py>)

    For sx = sy = s these are the familiar s^2/sp^2 and s/sp prefactors;
    unequal widths or shifts are an extension of that regime.
    """
    dxdy = config.delta_x * config.delta_y
    if dxdy == 0:
        raise ZeroDivisionError("crystal shift is zero")
    sx2, sy2 = config.sigma_x**2, config.sigma_y**2
    re = 2 / dxdy * (moments.m_xy - 4 * sx2 * sy2 * moments.m_pxpy)
    im = 2 / dxdy * (2 * sx2 * moments.m_pxy + 2 * sy2 * moments.m_xpy)
    return complex(re, im)


def _element(rho, index, config, noise):
    i, j = divmod(index, 2)
    moments = expectation_set(rho, projector(BASIS[i]), projector(BASIS[j]), config)
    if noise is not None:
        moments = ExpectationSet.from_array(perturb(moments.as_array(), noise, noise.rng(index)))
    return direct_element(moments, config)


def direct_matrix(rho, config: PointerConfig, noise: NoiseModel | None = None,
                  workers: int = 1) -> np.ndarray:
    """All four elements rho(I, J), I, J in {H, V}; Hermiticity is not imposed.

    Element ``k`` draws its noise from sub-stream ``k`` of ``noise.seed``, so the
    result does not depend on ``workers``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise UnsupportedDimensionError(f"direct_matrix needs d = 2, got shape {rho.shape}")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(lambda k: _element(rho, k, config, noise), range(4)))
    else:
        values = [_element(rho, k, config, noise) for k in range(4)]
    return np.array(values, dtype=complex).reshape(2, 2)


def reconstruct_element(rho, row: str, col: str, config: PointerConfig,
                        noise: NoiseModel | None = None, weak_limit: float = 1e-2) -> ReconstructedElement:
    i, j = BASIS.index(row), BASIS.index(col)
    value = _element(np.asarray(rho, dtype=complex), 2 * i + j, config, noise)
    method = "pointer_weak_limit" if config.strength <= weak_limit else "pointer_finite"
    return ReconstructedElement(value, row, col, method, config.strength)


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def qst_reconstruct(data: TomographyData, tol: float = 1e-10) -> np.ndarray:
    """Linear inversion from the three mutually unbiased polarization bases."""
    for a, b in (("H", "V"), ("D", "A"), ("R", "L")):
        total = getattr(data, f"p_{a}") + getattr(data, f"p_{b}")
        if abs(total - 1) > tol:
            raise ValueError(f"p_{a} + p_{b} = {total:.6g} deviates from 1 by more than {tol}")
    s_x = data.p_D - data.p_A
    s_y = data.p_L - data.p_R
    s_z = data.p_H - data.p_V
    return 0.5 * (np.eye(2) + s_x * _X + s_y * _Y + s_z * _Z)


def qst_reconstruct_normalized(data: TomographyData) -> np.ndarray:
    """Linear inversion after normalizing each complementary pair (for noisy counts)."""
    p = data.as_array().reshape(3, 2)
    sums = p.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise ValueError("a measurement basis recorded no events")
    return qst_reconstruct(TomographyData(*(p / sums).ravel()))


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return (m + m.conj().T) / 2


def bias_curve(rho, strengths, sigma: float = 250.0) -> list[tuple[float, float]]:
    """Noiseless max element error of the pointer reconstruction at each delta/sigma."""
    strengths = [float(s) for s in strengths]
    if any(s <= 0 for s in strengths):
        raise ValueError("strengths must be positive")
    if strengths != sorted(strengths):
        raise ValueError("strengths must be ascending")
    rho = np.asarray(rho, dtype=complex)
    out = []
    for s in strengths:
        est = direct_matrix(rho, PointerConfig.from_strength(s, sigma))
        out.append((s, float(np.max(np.abs(est - rho)))))
    return out


def reconstruction_distance(truth, estimate, project: bool = False) -> float:
    """Trace distance from ``truth`` to the Hermitian part of ``estimate``."""
    est = hermitian_part(estimate)
    if project:
        est = project_to_physical(est)
    return trace_distance(truth, est)
