"""Scan of the inter-crystal distance and analysis of the resulting curves.

For every gap length L the full pipeline runs: sample the two-crystal
kernel, decompose it, amplify the modes, and record intensity, g2, mode
count, and far-field shape.  Peak positions of the intensity and g2 series,
their mean spacing (the interference period), the g2 peak envelope, and the
scaling of the far-field width across constructive peaks are extracted from
the sampled curves.

Gain calibration
----------------
The kernel at each L is unit-normalized, so its eigenvalues carry only the
shape information; the physical coupling strength is restored through the
kernel's pre-normalization Frobenius norm.  The sweep parameter ``gain_G``
is calibrated as the amplitude gain of the *dominant mode of the closed-gap
(L = 0) configuration* of the same geometry and grid: each point is
amplified with the effective gain

    G_eff(L) = gain_G * norm(L) / (norm(0) * sqrt(lambda_1(0))),

which makes the strongest squeeze parameter at gap L equal to
``gain_G * s_1(L) / s_1(0)`` with s_n the raw (unnormalized) singular
values.  Without the norm(L) factor the intensity would peak at both
interference extremes, because the normalized destructive-point kernels are
as concentrated as the constructive ones; the coupling modulation is what
produces the observed single 35 mm period.

The pipeline is noiseless and fully deterministic: identical inputs give
bitwise-identical outputs, points are merged by index regardless of worker
completion order, and a failing point is recorded with its error message
without contaminating its neighbors.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gain as gain_mod
from . import schmidt as schmidt_mod
from .errors import BsvModesError, InsufficientPeaksError, ValidationError
from .kernel import AngularGrid, OpaGeometry, TpaKernel, build_kernel

logger = logging.getLogger(__name__)

#: Hard limits of the scan: gaps within [0, 0.25] m and a step that keeps
#: the 35 mm interference period oversampled.
MAX_GAP = 0.25
MAX_STEP = 3e-3


@dataclass(frozen=True)
class SweepPoint:
    gap_length: float
    total_photons: float = math.nan
    g2: float = math.nan
    k_eff_spatial: float = math.nan
    fwhm_theta: float = math.nan
    central_dip: bool = False
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class Peak:
    index: int
    gap_length: float
    value: float


@dataclass(frozen=True)
class PeriodEstimate:
    mean: float
    std: float
    n_peaks: int


@dataclass(frozen=True)
class EnvelopeSummary:
    gap_lengths: tuple[float, ...]
    values: tuple[float, ...]
    max_index: int

    @property
    def max_is_interior(self) -> bool:
        return 0 < self.max_index < len(self.values) - 1


@dataclass(frozen=True)
class NarrowingFit:
    slope: float
    intercept: float
    residual_rms: float
    gap_lengths: tuple[float, ...]


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    intensity_peaks: tuple[Peak, ...]
    g2_peaks: tuple[Peak, ...]
    period_estimate: PeriodEstimate | None      # from intensity peaks
    period_estimate_g2: PeriodEstimate | None
    gain_G: float
    m_l: float
    transverse_dims: int
    reference_coupling: float

    @property
    def failed_points(self) -> tuple[SweepPoint, ...]:
        return tuple(p for p in self.points if not p.ok)


def detect_peak_indices(values, *, smooth_window: int | None = None,
                        min_separation: int = 0) -> list[int]:
    """Indices of strict local maxima with plateau handling.

    A plateau of equal values counts as one peak, reported at its center
    index.  Endpoints are never peaks, and maxima adjacent to NaN samples
    (failed points) are discarded.  ``smooth_window`` applies an odd-width
    moving average before detection, and ``min_separation`` drops the lower
    of any two maxima closer than that many samples; both exist for noisy
    experimental traces and default off because the model is noiseless.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValidationError("peak detection expects a 1-d series")
    if smooth_window is not None:
        w = int(smooth_window)
        if w < 3 or w % 2 == 0:
            raise ValidationError("smooth_window must be an odd integer >= 3")
        padded = np.pad(v, w // 2, mode="edge")
        v = np.convolve(padded, np.full(w, 1.0 / w), mode="valid")

    peaks: list[int] = []
    n = v.size
    i = 1
    while i < n - 1:
        if not np.isfinite(v[i]):
            i += 1
            continue
        if not (np.isfinite(v[i - 1]) and v[i] > v[i - 1]):
            i += 1
            continue
        j = i
        while j + 1 < n and v[j + 1] == v[i]:
            j += 1
        if j + 1 < n and np.isfinite(v[j + 1]) and v[j + 1] < v[i]:
            peaks.append((i + j) // 2)
        i = j + 1

    if min_separation > 1 and peaks:
        kept: list[int] = []
        for idx in sorted(peaks, key=lambda k: -v[k]):
            if all(abs(idx - other) >= min_separation for other in kept):
                kept.append(idx)
        peaks = sorted(kept)
    return peaks


def detect_peaks(gap_lengths, values, **kwargs) -> list[Peak]:
    """Local maxima of a (L, value) series as :class:`Peak` records."""
    gaps = np.asarray(gap_lengths, dtype=float)
    vals = np.asarray(values, dtype=float)
    if gaps.shape != vals.shape:
        raise ValidationError("gap_lengths and values must have equal length")
    return [Peak(index=i, gap_length=float(gaps[i]), value=float(vals[i]))
            for i in detect_peak_indices(vals, **kwargs)]


def estimate_period(peaks: list[Peak]) -> PeriodEstimate | None:
    """Mean and population std of consecutive peak spacings; None below 2 peaks."""
    if len(peaks) < 2:
        return None
    spacings = np.diff([p.gap_length for p in peaks])
    return PeriodEstimate(mean=float(spacings.mean()),
                          std=float(spacings.std()),
                          n_peaks=len(peaks))


class KernelCache:
    """Kernel store keyed by geometry, grid and gap, for multi-gain re-analysis.

    Entries live in memory; with ``directory`` set they are also spilled to
    ``.npz`` files named by the key hash and reloaded on later runs.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = os.fspath(directory) if directory is not None else None
        if self.directory is not None:
            os.makedirs(self.directory, exist_ok=True)
        self._memory: dict[str, TpaKernel] = {}
        self.hits = 0
        self.builds = 0

    @staticmethod
    def key(geometry: OpaGeometry, grid: AngularGrid, crystals: str = "two") -> str:
        h = hashlib.sha256()
        fields = (geometry.pump_wavelength_vacuum, geometry.pump_fwhm, geometry.sigma,
                  geometry.n_p, geometry.k_p, geometry.crystal_length,
                  geometry.gap_length, geometry.delta_n_air, geometry.delta_k)
        h.update(np.asarray(fields, dtype=float).tobytes())
        h.update(grid.theta.tobytes())
        h.update(grid.weights.tobytes())
        h.update(crystals.encode())
        return h.hexdigest()

    def get_or_build(self, geometry: OpaGeometry, grid: AngularGrid,
                     crystals: str = "two") -> TpaKernel:
        key = self.key(geometry, grid, crystals)
        kernel = self._memory.get(key)
        if kernel is not None:
            self.hits += 1
            return kernel
        if self.directory is not None:
            path = os.path.join(self.directory, key + ".npz")
            if os.path.exists(path):
                with np.load(path) as data:
                    kernel = TpaKernel(geometry=geometry, grid=grid,
                                       matrix=data["matrix"],
                                       norm=float(data["norm"]), crystals=crystals)
                self._memory[key] = kernel
                self.hits += 1
                return kernel
        kernel = build_kernel(geometry, grid, crystals)
        self.builds += 1
        self._memory[key] = kernel
        if self.directory is not None:
            path = os.path.join(self.directory, key + ".npz")
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                np.savez(fh, matrix=kernel.matrix, norm=kernel.norm)
            os.replace(tmp, path)
        return kernel


def reference_coupling(geometry: OpaGeometry, grid: AngularGrid,
                       cache: KernelCache | None = None) -> float:
    """Dominant raw singular value of the closed-gap kernel, norm(0)*sqrt(lambda_1(0)).

    This is the coupling unit for the sweep's gain calibration.
    """
    geometry0 = geometry.with_gap(0.0)
    kernel0 = cache.get_or_build(geometry0, grid) if cache else build_kernel(geometry0, grid)
    dec0 = schmidt_mod.decompose(kernel0)
    return kernel0.norm * math.sqrt(float(dec0.lambdas[0]))


def effective_gain(gain_G: float, kernel: TpaKernel, reference: float) -> float:
    """Per-point gain handed to the mode evolution at this kernel's coupling."""
    return gain_G * kernel.norm / reference


def gap_range(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive gap ladder start, start+step, ... (stop included when it lands)."""
    if step <= 0:
        raise ValidationError(f"step must be > 0, got {step!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ValidationError("empty gap range")
    return start + step * np.arange(count)


def _evaluate_point(geometry: OpaGeometry, grid: AngularGrid, gap: float,
                    gain_G: float, reference: float, m_l: float,
                    transverse_dims: int, cache: KernelCache | None,
                    dip_threshold: float) -> SweepPoint:
    kernel = (cache.get_or_build(geometry.with_gap(gap), grid) if cache
              else build_kernel(geometry.with_gap(gap), grid))
    dec = schmidt_mod.decompose(kernel)
    report = gain_mod.evolve(dec, effective_gain(gain_G, kernel, reference),
                             m_l=m_l, transverse_dims=transverse_dims,
                             dip_threshold=dip_threshold)
    return SweepPoint(
        gap_length=float(gap),
        total_photons=report.total_photons,
        g2=report.g2,
        k_eff_spatial=report.k_eff_spatial,
        fwhm_theta=report.fwhm_theta,
        central_dip=report.central_dip,
    )


def run_sweep(
    geometry: OpaGeometry,
    grid: AngularGrid,
    gap_lengths,
    gain_G: float,
    m_l: float = 1.25,
    transverse_dims: int = 1,
    jobs: int = 1,
    cache: KernelCache | None = None,
    dip_threshold: float = gain_mod.DIP_THRESHOLD,
) -> SweepResult:
    """Run the kernel -> Schmidt -> gain pipeline over a ladder of gaps.

    Args:
        geometry: template geometry; its own gap_length is ignored.
        grid: angular grid shared by all points.
        gap_lengths: increasing gap values in meters, within [0, 0.25] and
            spaced at most 3 mm apart (the interference period must stay
            oversampled).
        gain_G: dominant-mode amplitude gain of the closed-gap reference
            (see the module docstring).
        jobs: worker threads; results are merged by index, so the output is
            identical for any worker count.
        cache: optional :class:`KernelCache` shared across calls.

    A point whose evaluation raises a package error is recorded with the
    error message and NaN observables; other points are unaffected.
    """
    gaps = np.asarray(gap_lengths, dtype=float)
    if gaps.ndim != 1 or gaps.size == 0:
        raise ValidationError("gap_lengths must be a non-empty 1-d sequence")
    if np.any(np.diff(gaps) <= 0):
        raise ValidationError("gap_lengths must be strictly increasing")
    if gaps[0] < 0.0 or gaps[-1] > MAX_GAP:
        raise ValidationError(f"gap_lengths must lie within [0, {MAX_GAP}] m")
    if gaps.size > 1 and float(np.max(np.diff(gaps))) > MAX_STEP + 1e-12:
        raise ValidationError(
            f"gap step must be <= {MAX_STEP} m to resolve the interference period"
        )

    reference = reference_coupling(geometry, grid, cache)

    def worker(gap: float) -> SweepPoint:
        try:
            return _evaluate_point(geometry, grid, gap, gain_G, reference,
                                   m_l, transverse_dims, cache, dip_threshold)
        except BsvModesError as exc:
            logger.warning("gap %.4f m failed: %s", gap, exc)
            return SweepPoint(gap_length=float(gap), error=str(exc))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(worker, gaps))
    else:
        points = []
        for i, gap in enumerate(gaps):
            points.append(worker(gap))
            if (i + 1) % 25 == 0:
                logger.info("sweep %d/%d points done", i + 1, gaps.size)

    intensity = [p.total_photons if p.ok else math.nan for p in points]
    g2_series = [p.g2 if p.ok else math.nan for p in points]
    intensity_peaks = detect_peaks(gaps, intensity)
    g2_peaks = detect_peaks(gaps, g2_series)
    return SweepResult(
        points=tuple(points),
        intensity_peaks=tuple(intensity_peaks),
        g2_peaks=tuple(g2_peaks),
        period_estimate=estimate_period(intensity_peaks),
        period_estimate_g2=estimate_period(g2_peaks),
        gain_G=float(gain_G),
        m_l=float(m_l),
        transverse_dims=int(transverse_dims),
        reference_coupling=reference,
    )


def envelope_summary(sweep: SweepResult) -> EnvelopeSummary:
    """g2 peak values in gap order plus the position of the strongest peak."""
    peaks = sweep.g2_peaks
    if len(peaks) < 2:
        raise ValidationError("envelope summary needs at least 2 g2 peaks")
    values = tuple(p.value for p in peaks)
    return EnvelopeSummary(
        gap_lengths=tuple(p.gap_length for p in peaks),
        values=values,
        max_index=int(np.argmax(values)),
    )


def narrowing_check(sweep: SweepResult, min_gap_length: float = 0.07) -> NarrowingFit:
    """Log-log slope of the far-field width across constructive peaks.

    Constructive peaks are the intensity maxima without a central dip at
    gaps >= ``min_gap_length``.  Raises InsufficientPeaksError when fewer
    than three usable peaks remain.
    """
    usable: list[tuple[float, float]] = []
    for peak in sweep.intensity_peaks:
        point = sweep.points[peak.index]
        if (point.ok and not point.central_dip
                and point.gap_length >= min_gap_length
                and math.isfinite(point.fwhm_theta) and point.fwhm_theta > 0
                and point.gap_length > 0):
            usable.append((point.gap_length, point.fwhm_theta))
    if len(usable) < 3:
        raise InsufficientPeaksError(
            f"need >= 3 constructive peaks at gap >= {min_gap_length} m, "
            f"found {len(usable)}"
        )
    x = np.log([u[0] for u in usable])
    y = np.log([u[1] for u in usable])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return NarrowingFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
        gap_lengths=tuple(u[0] for u in usable),
    )
