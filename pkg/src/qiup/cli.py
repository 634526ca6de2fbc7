"""``imager`` command-line entry point.

    imager <simulate|calibrate|magnify|oracle-check> --config PATH
           [--out DIR] [--phi-p RAD] [--oracle-grid N]

Exit status: 0 success, 1 validation failure (bad config or input, failed
check), 2 internal error. Output files are staged and renamed into place
only after every artifact has been computed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import traceback

import numpy as np

from .config import Camera
from .engine import calibrate, grid_rates, render_image, visibility
from .errors import ImagerError
from .files import RunConfig, csv_bytes, parse_config_file, pgm_bytes, write_atomically
from .fock import product_scaling_check, build_superposition_state, oracle_rates
from .magnification import magnification_measured, two_dot_object
from .modes import build_mode_grid

log = logging.getLogger("qiup")

ORACLE_TOL = 1e-10
EXPONENT_RANGE = (1.9, 2.1)
ORACLE_G_VALUES = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)


class CheckFailed(Exception):
    def __init__(self, files: dict):
        super().__init__("check failed")
        self.files = files


def _json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _image_files(name: str, rates) -> dict:
    pgm, sidecar = pgm_bytes(rates)
    return {f"{name}.csv": csv_bytes(rates), f"{name}.pgm": pgm, f"{name}.pgm.range": sidecar}


def cmd_simulate(run: RunConfig, args) -> dict:
    cfg, cam = run.optics, run.camera
    obj = run.load_object()
    cal = calibrate(cfg, run.sweep_steps)
    plus = render_image(cal.phi_PC, obj, cfg, cam).rates
    minus = render_image(cal.phi_PD, obj, cfg, cam).rates
    files = {}
    files.update(_image_files("R_plus", plus))
    files.update(_image_files("R_minus", minus))
    files.update(_image_files("difference", plus - minus))
    files.update(_image_files("sum", plus + minus))
    centre = ((cam.ny - 1) // 2, (cam.nx - 1) // 2)
    summary = {
        "command": "simulate",
        "config_hash": run.digest(),
        "phi_PC": cal.phi_PC,
        "phi_PD": cal.phi_PD,
        "visibility_center": visibility(obj, cfg, cam, centre, run.sweep_steps),
        "background": cfg.background,
        "shape": [cam.ny, cam.nx],
        "pitch": cam.pitch,
    }
    if args.phi_p is not None:
        files.update(_image_files("R_phi", render_image(args.phi_p, obj, cfg, cam).rates))
        summary["phi_P"] = args.phi_p
    files["summary.json"] = _json(summary)
    return files


def cmd_calibrate(run: RunConfig, args) -> dict:
    cal = calibrate(run.optics, run.sweep_steps)
    return {"calibration.json": _json({"phi_PC": cal.phi_PC, "phi_PD": cal.phi_PD, "config_hash": run.digest()})}


def cmd_magnify(run: RunConfig, args) -> dict:
    cfg, cam = run.optics, run.camera
    target = two_dot_object(cfg, cam, fraction=run.dot_fraction)
    report = magnification_measured(target, cfg, cam, calibrate(cfg, run.sweep_steps))
    out = report.as_dict()
    out.update({"config_hash": run.digest(), "dot_position": list(target.points[1])})
    return {"magnification.json": _json(out)}


def cmd_oracle_check(run: RunConfig, args) -> dict:
    cfg = run.optics
    n = run.oracle_grid
    # span the same field of view as the configured camera
    wide = max(run.camera.nx, run.camera.ny) - 1
    pitch = run.camera.pitch * wide / (n - 1) if n > 1 and wide > 0 else run.camera.pitch
    grid = build_mode_grid(cfg, Camera(n, n, pitch))
    obj = run.load_object()
    worst = 0.0
    for phi in np.arange(8) * (2 * math.pi / 8):
        state = build_superposition_state(obj, cfg, grid, phi_P=float(phi))
        oracle = oracle_rates(state, cfg, grid)
        analytic = grid_rates(grid, float(phi), obj)
        scale = np.maximum(np.abs(analytic), cfg.background)
        worst = max(worst, float(np.max(np.abs(oracle - analytic) / scale)))
    exponent = product_scaling_check(cfg, obj, grid, ORACLE_G_VALUES)
    passed = worst < ORACLE_TOL and EXPONENT_RANGE[0] <= exponent <= EXPONENT_RANGE[1]
    report = {
        "command": "oracle-check",
        "config_hash": run.digest(),
        "grid": [n, n],
        "max_relative_deviation": worst,
        "tolerance": ORACLE_TOL,
        "fitted_exponent": exponent,
        "exponent_range": list(EXPONENT_RANGE),
        "pass": passed,
    }
    files = {"oracle_check.json": _json(report)}
    if not passed:
        raise CheckFailed(files)
    return files


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "magnify": cmd_magnify,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imager", description="Quantum imaging with undetected photons.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--out", help="output directory (overrides the config's out key)")
    parser.add_argument("--phi-p", type=float, dest="phi_p", help="pump phase for an extra rendered image (rad)")
    parser.add_argument("--oracle-grid", type=int, dest="oracle_grid", help="oracle grid size per axis")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {}
    if args.out is not None:
        # a command-line path is relative to the working directory, not the config file
        overrides["out"] = os.path.abspath(args.out)
    if args.phi_p is not None:
        overrides["phi_P"] = repr(args.phi_p)
    if args.oracle_grid is not None:
        overrides["oracle_grid"] = str(args.oracle_grid)
    try:
        run = parse_config_file(args.config, overrides)
        files = COMMANDS[args.command](run, args)
    except CheckFailed as exc:
        write_atomically(exc.files, run.out_dir)
        print(f"imager: {args.command} failed its check", file=sys.stderr)
        return 1
    except ImagerError as exc:
        print(f"imager: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    files["config_used.txt"] = run.canonical_text().encode()
    try:
        written = write_atomically(files, run.out_dir)
    except OSError as exc:
        print(f"imager: cannot write output: {exc}", file=sys.stderr)
        return 2
    for path in written:
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
