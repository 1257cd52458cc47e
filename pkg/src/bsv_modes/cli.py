"""Command-line interface.

Subcommands: ``kernel``, ``schmidt``, ``sweep``, ``profile``, ``validate``.
Standard output carries exactly one machine-readable status JSON object per
run; progress and human-readable notes go to standard error (controlled by
the ``BSV_MODES_LOG`` environment variable: DEBUG, INFO, WARNING, ERROR).

Exit codes: 0 success, 1 validation/config errors, 2 numerical errors,
3 I/O errors.  Output files are written atomically (temp file + rename), so
an interrupted run never leaves a partial file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from . import bogoliubov, gain, io, schmidt
from .config import RunConfig, load_config
from .errors import NumericalError, ValidationError
from .kernel import build_kernel
from .sweep import (
    InsufficientPeaksError,
    envelope_summary,
    gap_range,
    narrowing_check,
    reference_coupling,
    run_sweep,
)

logger = logging.getLogger("bsv_modes")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _setup_logging() -> None:
    level_name = os.environ.get("BSV_MODES_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _resolve_gap(args, cfg: RunConfig) -> float:
    gap = args.gap if args.gap is not None else cfg.geometry.gap_length
    if not math.isfinite(gap) or gap < 0.0:
        raise ValidationError(f"sweep.L: gap length must be >= 0 and finite, got {gap!r}")
    return gap


def _outdir(args, cfg: RunConfig) -> str:
    out = args.out if args.out is not None else cfg.output.directory
    os.makedirs(out, exist_ok=True)
    return out


def _single_point(cfg: RunConfig, gap: float):
    """kernel, decomposition and gain report at one gap, sweep-calibrated."""
    grid = cfg.make_grid()
    geometry = cfg.geometry.with_gap(gap)
    kernel = build_kernel(geometry, grid)
    dec = schmidt.decompose(kernel)
    reference = reference_coupling(cfg.geometry, grid)
    report = gain.evolve(dec, cfg.gain.G * kernel.norm / reference,
                         m_l=cfg.gain.m_l, transverse_dims=cfg.gain.transverse_dims)
    return kernel, dec, report


def cmd_kernel(args, cfg: RunConfig) -> dict:
    gap = _resolve_gap(args, cfg)
    grid = cfg.make_grid()
    kernel = build_kernel(cfg.geometry.with_gap(gap), grid)
    out = _outdir(args, cfg)
    outputs = []
    if "csv" in cfg.output.formats:
        path = os.path.join(out, "kernel.csv")
        io.write_kernel_csv(path, kernel)
        outputs.append(path)
    if "json" in cfg.output.formats:
        path = os.path.join(out, "kernel.json")
        io.write_json(path, {
            "geometry": io.geometry_payload(kernel.geometry),
            "crystals": kernel.crystals,
            "grid": {"theta_max_rad": grid.theta_max, "n_points": grid.n_points},
            "frobenius_norm": kernel.norm,
        })
        outputs.append(path)
    return {"command": "kernel", "gap_length_m": gap, "outputs": outputs}


def cmd_schmidt(args, cfg: RunConfig) -> dict:
    gap = _resolve_gap(args, cfg)
    grid = cfg.make_grid()
    kernel = build_kernel(cfg.geometry.with_gap(gap), grid)
    dec = schmidt.decompose(kernel)
    out = _outdir(args, cfg)
    outputs = []
    if "csv" in cfg.output.formats:
        spectrum_path = os.path.join(out, "schmidt_spectrum.csv")
        io.write_spectrum_csv(spectrum_path, dec)
        modes_path = os.path.join(out, "schmidt_modes.csv")
        io.write_modes_csv(modes_path, dec, max_modes=args.modes)
        outputs += [spectrum_path, modes_path]
    if "json" in cfg.output.formats:
        path = os.path.join(out, "schmidt.json")
        io.write_json(path, {
            "gap_length_m": gap,
            "schmidt_number": dec.schmidt_number,
            "retained_modes": dec.retained_modes,
            "discarded_mass": dec.discarded_mass,
        })
        outputs.append(path)
    return {"command": "schmidt", "gap_length_m": gap,
            "schmidt_number": dec.schmidt_number, "outputs": outputs}


def cmd_profile(args, cfg: RunConfig) -> dict:
    gap = _resolve_gap(args, cfg)
    kernel, dec, report = _single_point(cfg, gap)
    profile = gain.farfield_profile(report, dec.grid)
    out = _outdir(args, cfg)
    outputs = []
    if "csv" in cfg.output.formats:
        path = os.path.join(out, "profile.csv")
        io.write_profile_csv(path, profile)
        outputs.append(path)
    if "json" in cfg.output.formats:
        path = os.path.join(out, "profile.json")
        payload = io.report_payload(report)
        payload["gap_length_m"] = gap
        payload["farfield_integral"] = profile.integral
        io.write_json(path, payload)
        outputs.append(path)
    if cfg.output.svg:
        from . import plots

        path = os.path.join(out, "profile.svg")
        plots.save_profile_svg(path, profile, gap)
        outputs.append(path)
    return {"command": "profile", "gap_length_m": gap, "g2": report.g2,
            "fwhm_theta_rad": report.fwhm_theta, "central_dip": report.central_dip,
            "outputs": outputs}


def cmd_sweep(args, cfg: RunConfig) -> dict:
    grid = cfg.make_grid()
    gaps = gap_range(cfg.sweep.L_start_m, cfg.sweep.L_stop_m, cfg.sweep.L_step_m)
    logger.info("sweep: %d points, L in [%g, %g] mm", gaps.size,
                gaps[0] * 1e3, gaps[-1] * 1e3)
    result = run_sweep(cfg.geometry, grid, gaps, cfg.gain.G,
                       m_l=cfg.gain.m_l, transverse_dims=cfg.gain.transverse_dims,
                       jobs=args.jobs)
    extras = {}
    try:
        env = envelope_summary(result)
        extras["g2_envelope"] = {"values": list(env.values),
                                 "L_m": list(env.gap_lengths),
                                 "max_index": env.max_index,
                                 "max_is_interior": env.max_is_interior}
    except ValidationError:
        pass
    try:
        fit = narrowing_check(result)
        extras["narrowing"] = {"slope": fit.slope,
                               "residual_rms": fit.residual_rms,
                               "L_m": list(fit.gap_lengths)}
    except InsufficientPeaksError:
        pass

    out = _outdir(args, cfg)
    outputs = []
    if "csv" in cfg.output.formats:
        path = os.path.join(out, "sweep.csv")
        io.write_sweep_csv(path, result)
        outputs.append(path)
    if "json" in cfg.output.formats:
        path = os.path.join(out, "sweep_summary.json")
        io.write_json(path, io.sweep_summary(result, extras))
        outputs.append(path)
    if cfg.output.svg:
        from . import plots

        for name, saver in (("sweep_intensity.svg", plots.save_sweep_intensity_svg),
                            ("sweep_g2.svg", plots.save_sweep_g2_svg)):
            path = os.path.join(out, name)
            saver(path, result)
            outputs.append(path)
    status = {"command": "sweep", "n_points": len(result.points),
              "n_failed": len(result.failed_points), "outputs": outputs}
    if result.period_estimate is not None:
        status["period_estimate_m"] = result.period_estimate.mean
        status["period_std_m"] = result.period_estimate.std
    return status


def cmd_validate(args, cfg: RunConfig) -> dict:
    report = bogoliubov.equivalence_report(tol_mean=args.tol_mean, tol_g2=args.tol_g2)
    worst_mean = report.worst_mean_case
    worst_g2 = report.worst_g2_case
    for case in report.cases:
        logger.info("size=%-3d G=%-4g rel_err_mean=%.3e abs_err_g2=%.3e",
                    case.size, case.gain_G, case.rel_err_mean, case.abs_err_g2)
    print(f"grid sizes tested: {sorted(set(report.sizes))}", file=sys.stderr)
    print(f"gains tested: {list(report.gains)}", file=sys.stderr)
    print(f"worst mean-photon case: size={worst_mean.size} G={worst_mean.gain_G} "
          f"rel err {worst_mean.rel_err_mean:.3e} (tol {report.tol_mean:g})", file=sys.stderr)
    print(f"worst g2 case: size={worst_g2.size} G={worst_g2.gain_G} "
          f"abs err {worst_g2.abs_err_g2:.3e} (tol {report.tol_g2:g})", file=sys.stderr)
    status = {
        "command": "validate",
        "passed": report.passed,
        "sizes": sorted(set(report.sizes)),
        "gains": list(report.gains),
        "tolerances": {"mean_photons_rel": report.tol_mean, "g2_abs": report.tol_g2},
        "worst_mean_case": {"size": worst_mean.size, "gain_G": worst_mean.gain_G,
                            "rel_err": worst_mean.rel_err_mean},
        "worst_g2_case": {"size": worst_g2.size, "gain_G": worst_g2.gain_G,
                          "abs_err": worst_g2.abs_err_g2},
        "outputs": [],
    }
    if not report.passed:
        raise NumericalError(
            f"oracle equivalence failed: worst mean rel err {worst_mean.rel_err_mean:.3e}, "
            f"worst g2 abs err {worst_g2.abs_err_g2:.3e}"
        )
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="JSON config file (defaults apply when omitted)")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: config output.directory)")
    common.add_argument("--jobs", metavar="N", type=int, default=os.cpu_count() or 1,
                        help="worker threads for sweeps (default: available parallelism)")
    common.add_argument("--dry-run", action="store_true",
                        help="validate inputs, print the resolved config, write nothing")

    gap_opt = argparse.ArgumentParser(add_help=False)
    gap_opt.add_argument("--gap", metavar="METERS", type=float, default=None,
                         help="inter-crystal distance (default: geometry.gap_length_m)")

    parser = argparse.ArgumentParser(
        prog="bsv-modes",
        description="Angular Schmidt-mode simulator for a two-crystal traveling-wave OPA",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", parents=[common, gap_opt],
                       help="sample the two-photon amplitude at one gap")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("schmidt", parents=[common, gap_opt],
                       help="Schmidt spectrum and mode functions at one gap")
    p.add_argument("--modes", type=int, default=12,
                   help="mode functions to export (default 12)")
    p.set_defaults(func=cmd_schmidt)

    p = sub.add_parser("profile", parents=[common, gap_opt],
                       help="amplified far-field profile at one gap")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("sweep", parents=[common],
                       help="scan the inter-crystal distance")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common],
                       help="check the analytic mode evolution against direct propagation")
    p.add_argument("--tol-mean", type=float, default=bogoliubov.DEFAULT_TOL_MEAN,
                   help=argparse.SUPPRESS)
    p.add_argument("--tol-g2", type=float, default=bogoliubov.DEFAULT_TOL_G2,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.dry_run:
            _emit({"status": "ok", "command": args.command, "dry_run": True,
                   "resolved_config": cfg.resolved(), "outputs": []})
            return EXIT_OK
        status = args.func(args, cfg)
    except ValidationError as exc:
        logger.error("%s", exc)
        _emit({"status": "error", "error_kind": "validation", "message": str(exc)})
        return EXIT_VALIDATION
    except NumericalError as exc:
        logger.error("%s", exc)
        _emit({"status": "error", "error_kind": "numerical", "message": str(exc)})
        return EXIT_NUMERICAL
    except OSError as exc:
        logger.error("%s", exc)
        _emit({"status": "error", "error_kind": "io", "message": str(exc)})
        return EXIT_IO
    status["status"] = "ok"
    _emit(status)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
