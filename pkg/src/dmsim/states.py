"""Polarization qubit states, wave plates and state metrics.

Density matrices are plain complex ``numpy`` arrays; pure states are
length-2 complex vectors in the {|H>, |V>} basis. States are treated as
rays: compare density matrices, not amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10

_S = 1 / np.sqrt(2)

#: Named polarization kets in the {|H>, |V>} basis.
KETS: dict[str, np.ndarray] = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, -1j * _S], dtype=complex),
    "L": np.array([_S, 1j * _S], dtype=complex),
}

#: Orthogonal partner of each named ket.
PARTNER = {"H": "V", "V": "H", "D": "A", "A": "D", "R": "L", "L": "R"}


class NormalizationError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class Projector:
    """Rank-1 projector |ket><ket|, optionally carrying a basis label."""

    ket: np.ndarray
    label: str | None = None

    def __post_init__(self):
        ket = np.asarray(self.ket, dtype=complex)
        if abs(np.linalg.norm(ket) - 1) > NORM_TOL:
            raise NormalizationError(f"projector ket has norm {np.linalg.norm(ket)}")
        ket.setflags(write=False)
        object.__setattr__(self, "ket", ket)

    @property
    def dim(self) -> int:
        return self.ket.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.ket, self.ket.conj())

    def __repr__(self):
        return f"Projector({self.label or self.ket.tolist()})"


def projector(label: str) -> Projector:
    """Named polarization projector, e.g. ``projector("D")``."""
    try:
        return Projector(KETS[label], label)
    except KeyError:
        raise ValueError(f"unknown polarization label {label!r}") from None


@dataclass(frozen=True)
class WaveplateSetting:
    kind: Literal["half", "quarter"]
    fast_axis: float  # radians


def check_pure(state) -> np.ndarray:
    psi = np.asarray(state, dtype=complex)
    if psi.ndim != 1:
        raise ValueError(f"pure state must be a vector, got shape {psi.shape}")
    norm2 = np.vdot(psi, psi).real
    if abs(norm2 - 1) > NORM_TOL:
        raise NormalizationError(f"|a|^2 + |b|^2 = {norm2!r}, expected 1")
    return psi


def check_density(rho, trace_tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, unit trace; positivity not required)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=HERMITIAN_TOL):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.6g}")
    return rho


def density_from_pure(state) -> np.ndarray:
    """rho = |psi><psi|."""
    psi = check_pure(state)
    return np.outer(psi, psi.conj())


def eigh_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.

    2x2 matrices use the closed-form quadratic; larger ones go to LAPACK.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        return np.linalg.eigh(m)
    # m = mean*I + r (n . sigma) with n = (sin t cos f, sin t sin f, cos t)
    a, d = m[0, 0].real, m[1, 1].real
    b = m[0, 1]
    mean = (a + d) / 2
    z = (a - d) / 2
    r = np.hypot(z, abs(b))
    t = np.arctan2(abs(b), z)
    f = -np.angle(b)
    c, s = np.cos(t / 2), np.sin(t / 2)
    up = np.array([c, np.exp(1j * f) * s])
    down = np.array([-np.exp(-1j * f) * s, c])
    return np.array([mean - r, mean + r]), np.column_stack([down, up])


def purity(rho) -> float:
    """Tr[rho^2]."""
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def trace_distance(rho, beta) -> float:
    """Half the sum of absolute eigenvalues of ``beta - rho``."""
    rho = np.asarray(rho, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    if rho.shape != beta.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {beta.shape}")
    diff = beta - rho
    if not np.allclose(diff, diff.conj().T, rtol=0, atol=HERMITIAN_TOL):
        raise ValueError("trace_distance needs Hermitian inputs")
    vals, _ = eigh_hermitian((diff + diff.conj().T) / 2)
    return 0.5 * float(np.sum(np.abs(vals)))


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]], dtype=complex)


def waveplate_unitary(setting: WaveplateSetting) -> np.ndarray:
    """Jones matrix of a wave plate with its fast axis at ``setting.fast_axis``.

    The half-wave plate is the reflection [[cos 2a, sin 2a], [sin 2a, -cos 2a]].
    The quarter-wave plate carries no extra global phase and sends |H> to
    (cos^2 f - i sin^2 f)|H> + (1+i)/2 sin 2f |V>.
    """
    angle = setting.fast_axis
    if setting.kind == "half":
        c, s = np.cos(2 * angle), np.sin(2 * angle)
        return np.array([[c, s], [s, -c]], dtype=complex)
    if setting.kind == "quarter":
        rot = _rotation(angle)
        return rot.conj().T @ np.diag([1, -1j]) @ rot
    raise ValueError(f"unknown wave plate kind {setting.kind!r}")


def pure_path_state(theta: float, alpha: float) -> np.ndarray:
    """cos(theta)|H> - sin(theta) exp(i alpha pi/2)|V>."""
    return np.array([np.cos(theta), -np.sin(theta) * np.exp(1j * alpha * np.pi / 2)])


def quarter_wave_state(phi: float) -> np.ndarray:
    """|H> after a quarter-wave plate with fast axis at ``phi``."""
    return waveplate_unitary(WaveplateSetting("quarter", phi)) @ KETS["H"]


def spun_mixed_analytic(phi: float) -> np.ndarray:
    """State left by a fully spun half-wave plate after a quarter-wave plate at ``phi``."""
    sc = np.sin(phi) * np.cos(phi)
    return np.array([[0.5, 1j * sc], [-1j * sc, 0.5]])


def spun_mixed_numeric(phi: float, samples: int = 360) -> np.ndarray:
    """Average U rho U^dagger over equispaced half-wave-plate angles in [0, 2 pi)."""
    if samples < 4:
        raise ValueError("need at least 4 samples over the spin angle")
    rho = density_from_pure(quarter_wave_state(phi))
    out = np.zeros((2, 2), dtype=complex)
    for alpha in np.arange(samples) * (2 * np.pi / samples):
        u = waveplate_unitary(WaveplateSetting("half", alpha))
        out += u @ rho @ u.conj().T
    return out / samples


def project_to_physical(rho) -> np.ndarray:
    """Clip negative eigenvalues to zero and renormalize the trace."""
    rho = np.asarray(rho, dtype=complex)
    herm = (rho + rho.conj().T) / 2
    vals, vecs = eigh_hermitian(herm)
    vals = np.clip(vals, 0, None)
    total = vals.sum()
    if total <= 0:
        raise DegenerateInputError("no positive spectral weight to renormalize")
    return (vecs * (vals / total)) @ vecs.conj().T


def random_pure_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def random_density(rng: np.random.Generator, dim: int = 2, rank: int | None = None) -> np.ndarray:
    """Random physical state from the Ginibre ensemble."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
