"""Command-line front end.

    dmsim sweep --path 1 --steps 37 --strength 1e-3 --out p1.csv
    dmsim element --state H --row H --col H --strength 1e-3
    dmsim qst-compare --state D --noise 0.05 --seed 7

Lengths are micrometres and angles degrees at this boundary.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import campaigns
from .camera import (
    PIXEL_PITCH_UM,
    average_frames,
    background_image,
    calibrate_momentum_scale,
    calibrate_shift,
    default_frame,
    expose_frames,
    physical_momentum_scale,
    preprocess,
    render_image,
    write_pgm,
)
from .noise import NoiseModel
from .pointer import DEFAULT_DELTA_UM, DEFAULT_SIGMA_UM, apply_weak_shift, initial_field
from .reconstruction import (
    TomographyData,
    hermitian_part,
    qst_reconstruct_normalized,
    reconstruct_element,
)
from .states import KETS, density_from_pure, projector, pure_path_state, spun_mixed_analytic, trace_distance

SUBCOMMANDS = ("sweep", "mixed", "bias", "element", "calibrate", "qst-compare")
DEFAULT_STRENGTHS = (1e-3, 1e-2, 0.05, 0.1, 0.2, 0.4, 0.704)


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Settings:
    """Resolved run settings: defaults < config file < command-line flags."""

    delta_um: float = DEFAULT_DELTA_UM
    sigma_um: float = DEFAULT_SIGMA_UM
    pitch_um: float = PIXEL_PITCH_UM
    strength: float | None = None
    noise: float = 0.0
    trials: int = 10
    seed: int = 0
    steps: int | None = None
    camera: bool = False
    project: bool = False

    def campaign(self) -> campaigns.CampaignConfig:
        noise = NoiseModel(self.noise, self.trials, self.seed) if self.noise > 0 else None
        return campaigns.CampaignConfig(
            sigma_um=self.sigma_um, delta_um=self.delta_um, strength=self.strength, noise=noise,
            camera=self.camera, project=self.project, pitch_um=self.pitch_um,
        )


_CONFIG_KEYS = {
    "delta_um": float, "sigma_um": float, "pitch_um": float, "strength": float,
    "noise": float, "trials": int, "seed": int, "steps": int,
    "camera": lambda s: _parse_bool(s), "project": lambda s: _parse_bool(s),
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def load_config(path) -> Settings:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    try:
        return _validated(Settings(**values))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _validated(s: Settings) -> Settings:
    if s.delta_um <= 0 or s.sigma_um <= 0 or s.pitch_um <= 0:
        raise ValueError("lengths must be positive")
    if s.strength is not None and s.strength <= 0:
        raise ValueError("strength must be positive")
    if s.noise < 0 or s.trials < 1:
        raise ValueError("noise must be >= 0 and trials >= 1")
    if s.steps is not None and s.steps < 1:
        raise ValueError("steps must be >= 1")
    return s


def parse_state(text: str) -> np.ndarray:
    """Named polarization (H, V, D, A, R, L) or ``theta,alpha`` with theta in degrees."""
    if text in KETS:
        return density_from_pure(KETS[text])
    try:
        theta, alpha = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"state must be one of {'/'.join(KETS)} or theta,alpha") from None
    return density_from_pure(pure_path_state(np.radians(theta), alpha))


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value settings file")
    common.add_argument("--strength", type=_positive_float, help="delta/sigma (default 176/250)")
    common.add_argument("--noise", type=_nonneg_float, help="relative moment noise, e.g. 0.05")
    common.add_argument("--trials", type=_positive_int, help="frames averaged per moment")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--steps", type=_positive_int, help="grid points")
    common.add_argument("--camera", action="store_true", default=None, help="emulate camera acquisition")
    common.add_argument("--project", action="store_true", default=None, help="clip to a physical state first")
    common.add_argument("--out", type=Path, help="output file")

    parser = argparse.ArgumentParser(prog="dmsim", description="Direct density-matrix measurement simulator")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("sweep", parents=[common], help="pure-state paths 1-2 (3 = mixed)")
    p.add_argument("--path", type=int, choices=(1, 2, 3), required=True)
    sub.add_parser("mixed", parents=[common], help="spun-plate mixed states (path 3)")
    p = sub.add_parser("bias", parents=[common], help="finite-strength error scan")
    p.add_argument("--state", type=parse_state, action="append")
    p = sub.add_parser("element", parents=[common], help="one density-matrix element")
    p.add_argument("--state", type=parse_state, required=True)
    p.add_argument("--row", choices=("H", "V"), required=True)
    p.add_argument("--col", choices=("H", "V"), required=True)
    sub.add_parser("calibrate", parents=[common], help="shift and momentum-scale calibration")
    p = sub.add_parser("qst-compare", parents=[common], help="direct measurement vs tomography")
    p.add_argument("--state", type=parse_state, required=True)
    return parser


def resolve(args: argparse.Namespace) -> Settings:
    base = load_config(args.config) if args.config is not None else Settings()
    overrides = {k: getattr(args, k) for k in ("strength", "noise", "trials", "seed", "steps", "camera", "project")
                 if getattr(args, k, None) is not None}
    return _validated(replace(base, **overrides))


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_sweep(args, s: Settings):
    cfg = s.campaign()
    path_id = f"path{args.path}" if args.command == "sweep" else "path3"
    spec = campaigns.PathSpec.default(path_id, s.steps)
    if path_id == "path3":
        records = campaigns.sweep_mixed(spec, cfg)
    else:
        records = campaigns.sweep_pure_path(spec, cfg)
    _write(campaigns.records_csv(records), args.out)


def cmd_bias(args, s: Settings):
    if args.state:
        states = {f"state{k}": rho for k, rho in enumerate(args.state)}
    else:
        states = {name: density_from_pure(KETS[name]) for name in ("H", "D", "R")}
        states["mixed"] = spun_mixed_analytic(0.0)
    strengths = [s.strength] if s.strength is not None else DEFAULT_STRENGTHS
    rows = campaigns.run_bias_study(states, strengths, s.campaign())
    _write(campaigns.bias_csv(rows), args.out)


def cmd_element(args, s: Settings):
    cfg = s.campaign()
    el = reconstruct_element(args.state, args.row, args.col, cfg.pointer, cfg.noise)
    re, im = round(el.value.real, 6) + 0.0, round(el.value.imag, 6) + 0.0
    text = f"{re:.6f} {im:+.6f}i\n"
    _write(text, args.out)
    if args.out is not None:
        sys.stdout.write(text)


def cmd_calibrate(args, s: Settings):
    cfg = s.campaign()
    config = cfg.pointer
    frame = default_frame(config, pitch=s.pitch_um)
    noise = cfg.noise
    h = KETS["H"]

    def measured(field, plane, stream):
        clean = render_image(field, frame, plane)
        bg = background_image(frame, noise, plane)
        return average_frames(preprocess(f, bg) for f in expose_frames(clean, noise, stream))

    unshifted = initial_field(h, config)
    x_shifted = apply_weak_shift(unshifted, projector("H"), "x", config.delta_x)
    y_shifted = apply_weak_shift(unshifted, projector("H"), "y", config.delta_y)
    ref = measured(unshifted, "image", (0,))
    dx = calibrate_shift(measured(x_shifted, "image", (1,)), ref, "x")
    dy = calibrate_shift(measured(y_shifted, "image", (2,)), ref, "y")
    fourier = measured(unshifted, "fourier_full", (3,))
    scale = calibrate_momentum_scale(fourier, config)
    lines = [
        "quantity,value",
        f"delta_x_um,{campaigns._fmt(dx)}",
        f"delta_y_um,{campaigns._fmt(dy)}",
        f"momentum_scale_per_um2,{campaigns._fmt(scale)}",
        f"lens_momentum_scale_per_um2,{campaigns._fmt(physical_momentum_scale(config))}",
    ]
    _write("\n".join(lines) + "\n", args.out)
    if args.out is not None:
        write_pgm(ref, args.out.with_suffix(".reference.pgm"))
        write_pgm(fourier, args.out.with_suffix(".fourier.pgm"))


def cmd_qst_compare(args, s: Settings):
    cfg = s.campaign()
    rho = args.state
    direct = campaigns.reconstruct(rho, cfg)
    if cfg.noise is None:
        tomo = qst_reconstruct_normalized(TomographyData.from_state(rho))
    else:
        data = TomographyData.from_state(rho).with_noise(cfg.noise, cfg.noise.rng(99))
        tomo = qst_reconstruct_normalized(data)
    d_direct = trace_distance(rho, hermitian_part(direct))
    d_qst = trace_distance(rho, tomo)
    lines = [
        "method,trace_distance,measurements,bases,scope",
        f"direct,{campaigns._fmt(d_direct)},3,2,per_element",
        f"qst,{campaigns._fmt(d_qst)},6,3,full_state",
    ]
    _write("\n".join(lines) + "\n", args.out)


COMMANDS = {
    "sweep": cmd_sweep,
    "mixed": cmd_sweep,
    "bias": cmd_bias,
    "element": cmd_element,
    "calibrate": cmd_calibrate,
    "qst-compare": cmd_qst_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        settings = resolve(args)
        COMMANDS[args.command](args, settings)
    except ConfigError as exc:
        print(f"dmsim: config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"dmsim: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
