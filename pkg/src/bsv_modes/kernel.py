"""Two-photon amplitude of a one- or two-crystal traveling-wave OPA.

Collinear, frequency-degenerate, type-I geometry in the paraxial small-angle
regime, with a single transverse angular dimension.  For two identical
crystals of length ``Lc`` separated by an air gap ``L``, the joint
signal/idler amplitude at emission angles (ts, ti) is

    F(ts, ti) = exp(-sigma^2 kp^2 (ts + ti)^2 / 8)
                * sinc(Lc kp (ts - ti)^2 / 16)
                * cos((Lc + L/np) kp (ts - ti)^2 / 16 - dk L / (2 np))

with sinc(x) = sin(x)/x, pump wave vector ``kp`` inside the crystal, pump
refractive index ``np``, and ``dk = kp * dn_air`` the pump/down-converted
wave-vector mismatch accumulated in the air gap.  The Gaussian factor is the
pump angular envelope (``2 sqrt(ln 2) sigma`` is the FWHM of the pump spatial
intensity profile); the cosine carries the two-crystal interference.  On axis
the cosine argument reduces to ``pi * dn_air * L / lambda_p``, so F(0, 0)
oscillates in L with period ``lambda_p / dn_air`` (34.94 mm for the default
355 nm pump in air).

The single-crystal reference amplitude keeps only the pump envelope and the
phase-matching sinc.  At L = 0 the identity sin(x)cos(x) = sin(2x)/2 makes
the two-crystal amplitude equal to that of a single crystal of length 2 Lc,
as it must.

Kernels are sampled on a symmetric angular grid as
``M[i, j] = F(theta[i], theta[j]) * sqrt(w_i * w_j)`` and scaled to unit
Frobenius norm, so that the squared singular values of ``M`` form a
normalized Schmidt spectrum.  All objects are immutable after construction
(arrays are marked read-only); every function here is pure, so parameter
points can be evaluated concurrently without shared state.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import GridResolutionError, NumericalError, ValidationError

#: Beyond this emission angle the paraxial expansion degrades noticeably.
SMALL_ANGLE_LIMIT = 0.2

#: Relative tolerance for the internal consistency of derived geometry fields.
_CONSISTENCY_RTOL = 1e-12

_TWO_SQRT_LN2 = 2.0 * math.sqrt(math.log(2.0))


def _require_finite_positive(name: str, value: float, allow_zero: bool = False) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    if allow_zero:
        if value < 0.0:
            raise ValidationError(f"{name} must be >= 0, got {value!r}")
    elif value <= 0.0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    return value


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _sinc(x: np.ndarray) -> np.ndarray:
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class OpaGeometry:
    """Physical parameters of pump, crystals and air gap.

    Derived fields (``sigma``, ``k_p``, ``delta_k``) must stay consistent
    with their defining formulas; this is checked on construction.  Use
    :func:`build_geometry` rather than instantiating directly.
    """

    pump_wavelength_vacuum: float  # m
    pump_fwhm: float               # m, FWHM of the pump spatial intensity
    sigma: float                   # m, pump_fwhm / (2 sqrt(ln 2))
    n_p: float                     # pump refractive index in the crystal
    k_p: float                     # 1/m, 2 pi n_p / lambda_p
    crystal_length: float          # m
    gap_length: float              # m, air gap between the two crystals
    delta_n_air: float             # n_p - (n_s + n_i)/2 in air
    delta_k: float                 # 1/m, k_p * delta_n_air

    def __post_init__(self):
        for name in ("pump_wavelength_vacuum", "pump_fwhm", "sigma", "n_p",
                     "k_p", "crystal_length"):
            _require_finite_positive(name, getattr(self, name))
        _require_finite_positive("gap_length", self.gap_length, allow_zero=True)
        _require_finite_positive("delta_n_air", self.delta_n_air, allow_zero=True)
        _require_finite_positive("delta_k", self.delta_k, allow_zero=True)
        checks = (
            ("sigma", self.sigma, self.pump_fwhm / _TWO_SQRT_LN2),
            ("k_p", self.k_p, 2.0 * math.pi * self.n_p / self.pump_wavelength_vacuum),
            ("delta_k", self.delta_k, self.k_p * self.delta_n_air),
        )
        for name, actual, expected in checks:
            scale = max(abs(expected), 1.0e-300)
            if abs(actual - expected) > _CONSISTENCY_RTOL * scale:
                raise ValidationError(
                    f"{name}={actual!r} inconsistent with its defining formula "
                    f"(expected {expected!r})"
                )

    def with_gap(self, gap_length: float) -> "OpaGeometry":
        """Copy of this geometry with a different inter-crystal distance."""
        return dataclasses.replace(self, gap_length=float(gap_length))

    @property
    def gap_period(self) -> float:
        """Period of the on-axis two-crystal interference in L, lambda_p / dn_air."""
        if self.delta_n_air == 0.0:
            return math.inf
        return self.pump_wavelength_vacuum / self.delta_n_air


def build_geometry(
    *,
    pump_wavelength_vacuum: float = 355e-9,
    pump_fwhm: float | None = None,
    pump_sigma: float | None = None,
    n_p: float = 1.70,
    crystal_length: float = 3e-3,
    gap_length: float = 0.0,
    delta_n_air: float = 1.016e-5,
) -> OpaGeometry:
    """Assemble an :class:`OpaGeometry` with all derived quantities populated.

    Exactly one of ``pump_fwhm`` and ``pump_sigma`` must be given; the other
    is derived through ``fwhm = 2 sqrt(ln 2) sigma``.  The default pump size
    of 200 um is interpreted as the intensity FWHM; pass ``pump_sigma``
    instead if the waist parameter itself is known.

    Raises:
        ValidationError: on non-positive or non-finite inputs.
    """
    if (pump_fwhm is None) == (pump_sigma is None):
        if pump_fwhm is None:
            pump_fwhm = 200e-6
            pump_sigma = None
        else:
            raise ValidationError("give either pump_fwhm or pump_sigma, not both")
    wavelength = _require_finite_positive("pump_wavelength_vacuum", pump_wavelength_vacuum)
    n_p = _require_finite_positive("n_p", n_p)
    if pump_sigma is None:
        fwhm = _require_finite_positive("pump_fwhm", pump_fwhm)
        sigma = fwhm / _TWO_SQRT_LN2
    else:
        sigma = _require_finite_positive("pump_sigma", pump_sigma)
        fwhm = sigma * _TWO_SQRT_LN2
    k_p = 2.0 * math.pi * n_p / wavelength
    delta_n = _require_finite_positive("delta_n_air", delta_n_air, allow_zero=True)
    return OpaGeometry(
        pump_wavelength_vacuum=wavelength,
        pump_fwhm=fwhm,
        sigma=sigma,
        n_p=n_p,
        k_p=k_p,
        crystal_length=_require_finite_positive("crystal_length", crystal_length),
        gap_length=_require_finite_positive("gap_length", gap_length, allow_zero=True),
        delta_n_air=delta_n,
        delta_k=k_p * delta_n,
    )


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Discretization of the emission angle with quadrature weights.

    ``theta`` is strictly increasing and symmetric about zero
    (``theta[i] == -theta[n-1-i]``); weights are positive and sum to the
    angular range ``2 * theta_max``.
    """

    theta: np.ndarray    # rad
    weights: np.ndarray  # rad
    n_points: int

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly(self.theta))
        object.__setattr__(self, "weights", _readonly(self.weights))
        if self.theta.ndim != 1 or self.weights.shape != self.theta.shape:
            raise ValidationError("theta and weights must be 1-d arrays of equal length")
        if self.n_points != self.theta.size:
            raise ValidationError("n_points inconsistent with theta length")
        if np.any(np.diff(self.theta) <= 0):
            raise ValidationError("theta must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValidationError("quadrature weights must be positive")

    @property
    def theta_max(self) -> float:
        return float(self.theta[-1])

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)


def make_grid(
    theta_max: float,
    n_points: int = 501,
    scheme: str = "trapezoid",
    *,
    min_points: int = 8,
) -> AngularGrid:
    """Symmetric quadrature grid on [-theta_max, +theta_max].

    Args:
        theta_max: half-range of emission angles, rad.
        n_points: number of samples per axis.
        scheme: ``"trapezoid"`` (uniform spacing) or ``"gauss-legendre"``.
        min_points: guard against unusably coarse grids; lower it only in
            tests that exercise degenerate grids on purpose.

    Raises:
        ValidationError: for non-positive ``theta_max``, fewer than
            ``min_points`` samples, or an unknown scheme.
    """
    theta_max = _require_finite_positive("theta_max", theta_max)
    n_points = int(n_points)
    if n_points < min_points:
        raise ValidationError(f"n_points must be >= {min_points}, got {n_points}")
    if theta_max > SMALL_ANGLE_LIMIT:
        warnings.warn(
            f"theta_max={theta_max:g} rad exceeds the small-angle regime "
            f"(|theta| < {SMALL_ANGLE_LIMIT} rad)",
            stacklevel=2,
        )
    if scheme == "trapezoid":
        theta = np.linspace(-theta_max, theta_max, n_points)
        step = 2.0 * theta_max / (n_points - 1)
        weights = np.full(n_points, step)
        weights[0] = weights[-1] = 0.5 * step
    elif scheme == "gauss-legendre":
        nodes, w = roots_legendre(n_points)
        theta = theta_max * nodes
        weights = theta_max * w
    else:
        raise ValidationError(f"unknown quadrature scheme {scheme!r}")
    # Enforce exact reflection symmetry (removes last-ulp asymmetries).
    theta = 0.5 * (theta - theta[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return AngularGrid(theta=theta, weights=weights, n_points=n_points)


def tpa_amplitude(geometry: OpaGeometry, theta_s, theta_i, crystals: str = "two"):
    """Joint two-photon amplitude F(theta_s, theta_i).

    Broadcasts over array inputs and returns a scalar for scalar inputs.
    ``crystals`` selects the two-crystal amplitude (with the interference
    cosine) or the single-crystal reference (pump envelope times
    phase-matching sinc only).  Emission angles beyond the small-angle
    regime trigger a warning but are still evaluated (the expression is
    entire).
    """
    if crystals not in ("one", "two"):
        raise ValidationError(f"crystals must be 'one' or 'two', got {crystals!r}")
    ts = np.asarray(theta_s, dtype=float)
    ti = np.asarray(theta_i, dtype=float)
    biggest = max(np.max(np.abs(ts), initial=0.0), np.max(np.abs(ti), initial=0.0))
    if biggest > SMALL_ANGLE_LIMIT:
        warnings.warn(
            f"emission angle {biggest:g} rad exceeds the small-angle regime "
            f"(|theta| < {SMALL_ANGLE_LIMIT} rad); the amplitude is extrapolated",
            stacklevel=2,
        )
    g = geometry
    plus_sq = (ts + ti) ** 2
    minus_sq = (ts - ti) ** 2
    pump = np.exp(-(g.sigma**2) * (g.k_p**2) * plus_sq / 8.0)
    out = pump * _sinc(g.crystal_length * g.k_p * minus_sq / 16.0)
    if crystals == "two":
        phase = ((g.crystal_length + g.gap_length / g.n_p) * g.k_p * minus_sq / 16.0
                 - g.delta_k * g.gap_length / (2.0 * g.n_p))
        out = out * np.cos(phase)
    if np.isscalar(theta_s) and np.isscalar(theta_i):
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class TpaKernel:
    """Two-photon amplitude sampled on an angular grid.

    ``matrix`` holds the weighted samples ``F(theta_i, theta_j) *
    sqrt(w_i w_j)`` scaled to unit Frobenius norm; ``norm`` is the Frobenius
    norm removed by that scaling (useful as a relative-coupling diagnostic
    across gap lengths).  ``matrix`` is symmetric because the amplitude
    depends only on ``theta_s + theta_i`` and ``(theta_s - theta_i)**2``.
    """

    geometry: OpaGeometry
    grid: AngularGrid
    matrix: np.ndarray
    norm: float
    crystals: str = "two"

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))

    @property
    def n(self) -> int:
        return self.grid.n_points

    @property
    def amplitude(self) -> np.ndarray:
        """Unweighted amplitude samples F(theta_i, theta_j) on the grid."""
        sw = self.grid.sqrt_weights
        return self.matrix * self.norm / np.outer(sw, sw)


def kernel_from_amplitude(
    geometry: OpaGeometry,
    grid: AngularGrid,
    amplitude: np.ndarray,
    crystals: str = "two",
) -> TpaKernel:
    """Weight and normalize raw amplitude samples into a :class:`TpaKernel`.

    Raises:
        ValidationError: if the amplitude matrix is not symmetric or has the
            wrong shape.
        NumericalError: if the samples are not finite or identically zero.
    """
    amp = np.asarray(amplitude, dtype=float)
    n = grid.n_points
    if amp.shape != (n, n):
        raise ValidationError(f"amplitude must be {n}x{n}, got {amp.shape}")
    if not np.all(np.isfinite(amp)):
        raise NumericalError("amplitude samples contain non-finite values")
    scale = np.max(np.abs(amp))
    if scale == 0.0:
        raise NumericalError("amplitude is identically zero on this grid")
    if np.max(np.abs(amp - amp.T)) > 1e-12 * scale:
        raise ValidationError("amplitude matrix must be symmetric")
    sw = grid.sqrt_weights
    weighted = amp * np.outer(sw, sw)
    norm = float(np.linalg.norm(weighted))
    if not math.isfinite(norm) or norm == 0.0:
        raise NumericalError("weighted kernel has no finite norm")
    return TpaKernel(geometry=geometry, grid=grid, matrix=weighted / norm,
                     norm=norm, crystals=crystals)


def required_points(geometry: OpaGeometry, theta_max: float, crystals: str = "two") -> int:
    """Minimum grid size that keeps the phase-matching core Nyquist-sampled.

    The check tracks the total oscillatory phase (sinc argument plus, for two
    crystals, the interference-cosine argument) along one grid axis and
    requires less than pi of phase advance per sample inside the sinc core
    ``|theta_s - theta_i| <= sqrt(16 pi / (Lc kp))``, where the kernel
    carries its weight.  The far sinc tail oscillates faster at large gaps
    but is suppressed as 1/x, so it is deliberately not the gate.
    """
    g = geometry
    theta_minus_core = min(2.0 * theta_max, math.sqrt(16.0 * math.pi / (g.crystal_length * g.k_p)))
    rate = g.crystal_length * g.k_p / 8.0
    if crystals == "two":
        rate += (g.crystal_length + g.gap_length / g.n_p) * g.k_p / 8.0
    grad = rate * theta_minus_core  # rad of phase per rad of angle
    if grad <= 0.0:
        return 2
    return int(math.ceil(2.0 * theta_max * grad / math.pi)) + 1


def build_kernel(geometry: OpaGeometry, grid: AngularGrid, crystals: str = "two") -> TpaKernel:
    """Sample, weight, and normalize the two-photon amplitude on ``grid``.

    Raises:
        GridResolutionError: if the grid undersamples the phase-matching
            structure (see :func:`required_points`).
    """
    if crystals not in ("one", "two"):
        raise ValidationError(f"crystals must be 'one' or 'two', got {crystals!r}")
    needed = required_points(geometry, grid.theta_max, crystals)
    max_step = float(np.max(np.diff(grid.theta)))
    # Gauss-Legendre grids are densest at the edges; gate on the largest step.
    if max_step > 2.0 * grid.theta_max / max(needed - 1, 1):
        raise GridResolutionError(
            f"grid with {grid.n_points} points (max step {max_step:.3e} rad) "
            f"undersamples the kernel at gap_length={geometry.gap_length:g} m; "
            f"need >= {needed} uniform points over [-{grid.theta_max:g}, "
            f"{grid.theta_max:g}] rad"
        )
    amp = tpa_amplitude(geometry, grid.theta[:, None], grid.theta[None, :], crystals)
    return kernel_from_amplitude(geometry, grid, amp, crystals)
