"""Scripted sweeps over the pure-state paths, the mixed-state path and strength scans."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .camera import PIXEL_PITCH_UM, CameraFrame, camera_expectation_set, default_frame
from .noise import NoiseModel
from .pointer import DEFAULT_DELTA_UM, DEFAULT_SIGMA_UM, PointerConfig
from .reconstruction import BASIS, direct_element, direct_matrix, hermitian_part
from .states import density_from_pure, project_to_physical, projector, pure_path_state, purity, spun_mixed_analytic, trace_distance

CSV_HEADER = (
    "param_deg,re_hh,im_hh,re_hv,im_hv,re_vh,im_vh,re_vv,im_vv,"
    "trace_distance,purity_true,purity_measured,strength,noise_sigma,trials,seed"
).split(",")

PATH_ALPHA = {"path1": 0.0, "path2": -1.0}


@dataclass(frozen=True)
class PathSpec:
    path_id: Literal["path1", "path2", "path3"]
    grid: tuple[float, ...]

    def __post_init__(self):
        if self.path_id not in ("path1", "path2", "path3"):
            raise ValueError(f"unknown path {self.path_id!r}")
        hi = np.pi / 2 if self.path_id == "path3" else np.pi
        if any(not -1e-12 <= g <= hi + 1e-12 for g in self.grid):
            raise ValueError(f"{self.path_id} grid must lie in [0, {hi:.4g}] rad")

    @classmethod
    def default(cls, path_id: str, steps: int | None = None) -> PathSpec:
        """37 points over theta in [0, 180] deg, or 19 over phi in [0, 90] deg for path 3."""
        if path_id == "path3":
            steps = 19 if steps is None else steps
            return cls(path_id, tuple(np.linspace(0, np.pi / 2, steps)))
        steps = 37 if steps is None else steps
        return cls(path_id, tuple(np.linspace(0, np.pi, steps)))


@dataclass(frozen=True)
class CampaignConfig:
    sigma_um: float = DEFAULT_SIGMA_UM
    delta_um: float = DEFAULT_DELTA_UM
    strength: float | None = None  # delta/sigma; overrides delta_um when set
    noise: NoiseModel | None = None
    camera: bool = False
    project: bool = False
    pitch_um: float = PIXEL_PITCH_UM
    out: Path | None = None
    workers: int = field(default_factory=lambda: int(os.environ.get("DMS_THREADS", "1")))

    def __post_init__(self):
        if self.strength is not None and not self.strength > 0:
            raise ValueError("strength must be positive")
        if not self.delta_um > 0 or not self.sigma_um > 0:
            raise ValueError("pointer geometry must be positive")

    @property
    def pointer(self) -> PointerConfig:
        delta = self.delta_um if self.strength is None else self.strength * self.sigma_um
        return PointerConfig(self.sigma_um, self.sigma_um, delta, delta)

    @property
    def effective_strength(self) -> float:
        return self.pointer.strength


@dataclass(frozen=True)
class SweepRecord:
    param: float  # radians
    truth: np.ndarray
    measured: np.ndarray
    method: str
    trace_distance: float
    purity_true: float
    purity_measured: float
    strength: float
    noise_sigma: float
    trials: int
    seed: int

    @property
    def param_deg(self) -> float:
        return float(np.degrees(self.param))


def point_seed(master: int, index: int) -> int:
    """Seed of grid point ``index``; independent of how points are scheduled."""
    return int(np.random.SeedSequence([master % 2**64, index]).generate_state(1, np.uint64)[0])


def camera_direct_matrix(rho, config: PointerConfig, noise: NoiseModel | None = None,
                         frame: CameraFrame | None = None) -> np.ndarray:
    """direct_matrix with every moment taken from emulated camera images."""
    frame = default_frame(config) if frame is None else frame
    out = np.empty((2, 2), dtype=complex)
    for k in range(4):
        i, j = divmod(k, 2)
        moments = camera_expectation_set(rho, projector(BASIS[i]), projector(BASIS[j]), config,
                                         frame, noise, stream=k)
        out[i, j] = direct_element(moments, config)
    return out


def reconstruct(rho, cfg: CampaignConfig, index: int = 0) -> np.ndarray:
    noise = cfg.noise
    if noise is not None:
        noise = replace(noise, seed=point_seed(noise.seed, index))
    if cfg.camera:
        config = cfg.pointer
        return camera_direct_matrix(rho, config, noise, default_frame(config, pitch=cfg.pitch_um))
    return direct_matrix(rho, cfg.pointer, noise)


def _record(param: float, truth: np.ndarray, measured: np.ndarray, cfg: CampaignConfig) -> SweepRecord:
    est = hermitian_part(measured)
    if cfg.project:
        est = project_to_physical(est)
    noise = cfg.noise
    return SweepRecord(
        param=float(param),
        truth=truth,
        measured=measured,
        method="camera" if cfg.camera else "analytic",
        trace_distance=trace_distance(truth, est),
        purity_true=purity(truth),
        purity_measured=purity(est),
        strength=cfg.effective_strength,
        noise_sigma=0.0 if noise is None else noise.relative_sigma,
        trials=1 if noise is None else noise.trials,
        seed=0 if noise is None else noise.seed,
    )


def _run(states, cfg: CampaignConfig) -> list[SweepRecord]:
    def one(item):
        index, (param, truth) = item
        return _record(param, truth, reconstruct(truth, cfg, index), cfg)

    items = list(enumerate(states))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(one, items))
    else:
        records = [one(it) for it in items]
    return sorted(records, key=lambda r: r.param)


def sweep_pure_path(spec: PathSpec, cfg: CampaignConfig) -> list[SweepRecord]:
    if spec.path_id not in PATH_ALPHA:
        raise ValueError("sweep_pure_path handles path1 and path2")
    alpha = PATH_ALPHA[spec.path_id]
    states = [(theta, density_from_pure(pure_path_state(theta, alpha))) for theta in spec.grid]
    return _run(states, cfg)


def sweep_mixed(spec: PathSpec, cfg: CampaignConfig) -> list[SweepRecord]:
    if spec.path_id != "path3":
        raise ValueError("sweep_mixed handles path3")
    return _run([(phi, spun_mixed_analytic(phi)) for phi in spec.grid], cfg)


@dataclass(frozen=True)
class BiasRow:
    state: str
    strength: float
    max_element_error: float
    trace_distance: float


def run_bias_study(states: dict[str, np.ndarray], strengths, cfg: CampaignConfig | None = None) -> list[BiasRow]:
    """Noiseless finite-strength error for every (state, delta/sigma) pair."""
    cfg = CampaignConfig() if cfg is None else cfg
    if not states:
        raise ValueError("no states given")
    strengths = sorted(float(s) for s in strengths)
    rows = []
    for name, rho in states.items():
        rho = np.asarray(rho, dtype=complex)
        for s in strengths:
            point = replace(cfg, strength=s, noise=None)
            est = reconstruct(rho, point)
            rows.append(BiasRow(name, s, float(np.max(np.abs(est - rho))),
                                trace_distance(rho, hermitian_part(est))))
    return rows


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    text = format(float(x), ".12g")
    return "0" if text == "-0" else text


def record_row(r: SweepRecord) -> list[str]:
    m = r.measured
    values = [r.param_deg]
    for i in range(2):
        for j in range(2):
            values += [m[i, j].real, m[i, j].imag]
    values += [r.trace_distance, r.purity_true, r.purity_measured, r.strength, r.noise_sigma]
    return [_fmt(v) for v in values] + [_fmt(r.trials), _fmt(r.seed)]


def records_csv(records) -> str:
    records = sorted(records, key=lambda r: r.param)
    methods = {r.method for r in records}
    if len(methods) > 1:
        raise ValueError(f"mixed reconstruction methods in one table: {sorted(methods)}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(record_row(r) for r in records)
    return buf.getvalue()


def export_csv(records, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(records_csv(records))
    return path


def read_csv(path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]


def bias_csv(rows: list[BiasRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["state", "strength", "max_element_error", "trace_distance"])
    for r in rows:
        writer.writerow([r.state, _fmt(r.strength), _fmt(r.max_element_error), _fmt(r.trace_distance)])
    return buf.getvalue()
