"""File emission: CSV and JSON writers with an atomic-rename contract.

Every file is first written to a temporary sibling and moved into place
with os.replace, so an interrupted run leaves no partial output.  Floats
are formatted with 17 significant digits (full float64 round-trip) in a
locale-independent way; identical inputs therefore produce byte-identical
files.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile

import numpy as np

from .gain import FarfieldProfile, GainReport
from .kernel import TpaKernel
from .schmidt import SchmidtDecomposition
from .sweep import SweepResult


def fmt(value: float) -> str:
    """Locale-independent float with 17 significant digits."""
    return format(float(value), ".17g")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json(path: str | os.PathLike, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _csv(rows) -> str:
    return "\n".join(",".join(row) for row in rows) + "\n"


def kernel_csv(kernel: TpaKernel) -> str:
    """Amplitude samples; header row is theta, each data row one theta_s."""
    theta = kernel.grid.theta
    amp = kernel.amplitude
    rows = [[fmt(t) for t in theta]]
    rows.extend([fmt(v) for v in row] for row in amp)
    return _csv(rows)


def write_kernel_csv(path, kernel: TpaKernel) -> None:
    atomic_write_text(path, kernel_csv(kernel))


def read_kernel_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_kernel_csv`: (theta, amplitude matrix)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    theta = np.array([float(v) for v in lines[0].split(",")])
    amp = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return theta, amp


def spectrum_csv(dec: SchmidtDecomposition) -> str:
    rows = [["n", "lambda", "cumulative"]]
    cumulative = 0.0
    for n, lam in enumerate(dec.lambdas):
        cumulative += float(lam)
        rows.append([str(n), fmt(lam), fmt(cumulative)])
    return _csv(rows)


def write_spectrum_csv(path, dec: SchmidtDecomposition) -> None:
    atomic_write_text(path, spectrum_csv(dec))


def modes_csv(dec: SchmidtDecomposition, max_modes: int | None = None) -> str:
    n_modes = dec.modes_u.shape[1] if max_modes is None else min(max_modes, dec.modes_u.shape[1])
    header = ["theta_rad"] + [f"u_{n + 1}" for n in range(n_modes)]
    rows = [header]
    for i, theta in enumerate(dec.grid.theta):
        rows.append([fmt(theta)] + [fmt(dec.modes_u[i, n]) for n in range(n_modes)])
    return _csv(rows)


def write_modes_csv(path, dec: SchmidtDecomposition, max_modes: int | None = None) -> None:
    atomic_write_text(path, modes_csv(dec, max_modes))


def profile_csv(profile: FarfieldProfile) -> str:
    rows = [["theta_rad", "intensity"]]
    rows.extend([fmt(t), fmt(v)] for t, v in zip(profile.theta, profile.intensity))
    return _csv(rows)


def write_profile_csv(path, profile: FarfieldProfile) -> None:
    atomic_write_text(path, profile_csv(profile))


SWEEP_COLUMNS = "L_m,total_photons,g2,k_eff_spatial,fwhm_theta_rad,central_dip"


def sweep_csv(result: SweepResult) -> str:
    """One row per successful point; failed points are listed in the summary JSON."""
    rows = [SWEEP_COLUMNS.split(",")]
    for p in result.points:
        if not p.ok:
            continue
        rows.append([fmt(p.gap_length), fmt(p.total_photons), fmt(p.g2),
                     fmt(p.k_eff_spatial), fmt(p.fwhm_theta),
                     "1" if p.central_dip else "0"])
    return _csv(rows)


def write_sweep_csv(path, result: SweepResult) -> None:
    atomic_write_text(path, sweep_csv(result))


def _peaks_payload(peaks) -> list[dict]:
    return [{"index": p.index, "L_m": p.gap_length, "value": p.value} for p in peaks]


def sweep_summary(result: SweepResult, extras: dict | None = None) -> dict:
    payload = {
        "gain_G": result.gain_G,
        "m_l": result.m_l,
        "transverse_dims": result.transverse_dims,
        "reference_coupling": result.reference_coupling,
        "n_points": len(result.points),
        "intensity_peaks": _peaks_payload(result.intensity_peaks),
        "g2_peaks": _peaks_payload(result.g2_peaks),
        "period_estimate_m": result.period_estimate.mean if result.period_estimate else None,
        "period_std_m": result.period_estimate.std if result.period_estimate else None,
        "period_estimate_g2_m": (result.period_estimate_g2.mean
                                 if result.period_estimate_g2 else None),
        "failed_points": [{"L_m": p.gap_length, "error": p.error}
                          for p in result.failed_points],
    }
    if extras:
        payload.update(extras)
    return payload


def report_payload(report: GainReport) -> dict:
    """GainReport as a JSON-ready dict; field names match the dataclass."""
    return {
        "gain_G": report.gain_G,
        "per_mode_photons": [float(v) for v in report.per_mode_photons],
        "total_photons": report.total_photons,
        "weights": [float(v) for v in report.weights],
        "k_eff_spatial": report.k_eff_spatial,
        "m_l": report.m_l,
        "g2": report.g2,
        "farfield": {
            "theta_rad": [float(t) for t in report.grid.theta],
            "intensity": [float(v) for v in report.farfield],
        },
        "fwhm_theta": report.fwhm_theta,
        "transverse_dims": report.transverse_dims,
        "central_dip": report.central_dip,
    }


def geometry_payload(geometry) -> dict:
    return {field.name: getattr(geometry, field.name)
            for field in dataclasses.fields(geometry)}
