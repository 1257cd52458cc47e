"""Direct Bogoliubov propagation of the discretized quadratic Hamiltonian.

This is the brute-force validation route for the analytic per-mode solution
in :mod:`bsv_modes.gain`.  In the plane-wave (grid) basis the interaction
couples every signal mode a_i to every idler mode b_j through the weighted
kernel matrix M, and the Heisenberg equations integrate to

    a_out = A a_in + B b_in^dagger,   A = cosh(G M),   B = sinh(G M),

where the matrix functions are evaluated through the real eigendecomposition
of the symmetric M (never by series summation).  Commutator preservation
requires the symplectic condition A A^T - B B^T = 1.

Vacuum-state moments follow from Wick's theorem.  With the signal
correlation matrix N = B B^T:

    <N_s>   = tr N
    <N_s^2> = (tr N)^2 + tr(N^2) + tr N

Two g2 conventions coexist and are both reported:

* ``g2_normally_ordered``: <:N_s^2:> / <N_s>^2 = 1 + tr(N^2) / (tr N)^2.
  This equals the mode-counting value 1 + sum(p_n^2) at any gain and is the
  quantity compared against :func:`bsv_modes.gain.evolve`.
* ``g2_photon_number``: <N_s^2> / <N_s>^2, which carries the extra shot
  term 1/<N_s>; a single mode gives 2 + 1/<N_s>.  The two conventions
  coincide in the bright-beam limit.

Intended for small grids only (validation, not production).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gain as gain_mod
from . import schmidt as schmidt_mod
from .errors import NumericalError, ValidationError
from .kernel import TpaKernel, _readonly, build_geometry, kernel_from_amplitude, make_grid

#: Largest grid accepted by the oracle; it exists to validate, not to scale.
MAX_ORACLE_SIZE = 64

_SYMPLECTIC_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BogoliubovPropagator:
    """Input-output transformation of a two-beam quadratic interaction."""

    coupling: np.ndarray     # G * M
    transform_a: np.ndarray  # cosh branch
    transform_b: np.ndarray  # sinh branch

    def __post_init__(self):
        object.__setattr__(self, "coupling", _readonly(self.coupling))
        object.__setattr__(self, "transform_a", _readonly(self.transform_a))
        object.__setattr__(self, "transform_b", _readonly(self.transform_b))


@dataclass(frozen=True)
class GaussianMoments:
    """Vacuum-state photon-number moments of the signal beam."""

    mean_photons: float
    mean_square_photons: float
    g2_normally_ordered: float | None  # None for the vacuum output
    g2_photon_number: float | None


def propagate_matrix(matrix: np.ndarray, gain_G: float,
                     max_size: int = MAX_ORACLE_SIZE) -> BogoliubovPropagator:
    """Build the Bogoliubov transformation for a raw symmetric coupling matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"coupling matrix must be square, got shape {m.shape}")
    if m.shape[0] > max_size:
        raise ValidationError(
            f"oracle grids are capped at {max_size} points (got {m.shape[0]}); "
            "it validates the analytic route, it does not replace it"
        )
    if not np.all(np.isfinite(m)):
        raise NumericalError("coupling matrix contains non-finite entries")
    scale = float(np.max(np.abs(m)))
    if scale > 0.0 and float(np.max(np.abs(m - m.T))) > 1e-10 * scale:
        raise ValidationError("coupling matrix must be symmetric")
    gain_G = float(gain_G)
    if not math.isfinite(gain_G) or gain_G < 0.0:
        raise ValidationError(f"gain_G must be finite and >= 0, got {gain_G!r}")

    sym = 0.5 * (m + m.T)
    evals, q = np.linalg.eigh(sym)
    a = (q * np.cosh(gain_G * evals)) @ q.T
    b = (q * np.sinh(gain_G * evals)) @ q.T
    prop = BogoliubovPropagator(coupling=gain_G * sym, transform_a=a, transform_b=b)
    defect = symplectic_defect(prop)
    if defect > 1e-8:
        raise NumericalError(f"symplectic condition violated by {defect:.3e}")
    return prop


def propagate(kernel: TpaKernel, gain_G: float,
              max_size: int = MAX_ORACLE_SIZE) -> BogoliubovPropagator:
    """Bogoliubov transformation of a sampled kernel at gain G."""
    return propagate_matrix(kernel.matrix, gain_G, max_size=max_size)


def symplectic_defect(prop: BogoliubovPropagator) -> float:
    """Max-norm violation of A A^T - B B^T = 1."""
    a, b = prop.transform_a, prop.transform_b
    residual = a @ a.T - b @ b.T - np.eye(a.shape[0])
    return float(np.max(np.abs(residual)))


def moments(prop: BogoliubovPropagator) -> GaussianMoments:
    """Signal-beam photon-number moments over the input vacuum."""
    b = prop.transform_b
    n_mat = b @ b.T
    mean = float(np.trace(n_mat))
    tr_n2 = float(np.sum(n_mat * n_mat))  # tr(N^2) for symmetric N
    mean_square = mean**2 + tr_n2 + mean
    if mean > 0.0:
        g2_normal = 1.0 + tr_n2 / mean**2
        g2_photon = mean_square / mean**2
    else:
        g2_normal = None
        g2_photon = None
    return GaussianMoments(
        mean_photons=mean,
        mean_square_photons=mean_square,
        g2_normally_ordered=g2_normal,
        g2_photon_number=g2_photon,
    )


# ---------------------------------------------------------------------------
# Equivalence suite: analytic per-mode route vs direct propagation.
# ---------------------------------------------------------------------------

DEFAULT_GAINS = (0.5, 1.0, 2.0, 4.0)
DEFAULT_TOL_MEAN = 1e-8
DEFAULT_TOL_G2 = 1e-6


@dataclass(frozen=True)
class EquivalenceCase:
    size: int
    gain_G: float
    rel_err_mean: float
    abs_err_g2: float


@dataclass(frozen=True)
class EquivalenceReport:
    passed: bool
    tol_mean: float
    tol_g2: float
    sizes: tuple[int, ...]
    gains: tuple[float, ...]
    cases: tuple[EquivalenceCase, ...] = field(repr=False)

    @property
    def worst_mean_case(self) -> EquivalenceCase:
        return max(self.cases, key=lambda c: c.rel_err_mean)

    @property
    def worst_g2_case(self) -> EquivalenceCase:
        return max(self.cases, key=lambda c: c.abs_err_g2)


def random_symmetric_kernel(size: int, rng: np.random.Generator) -> TpaKernel:
    """Synthetic symmetric kernel on a uniform grid, for validation runs."""
    raw = rng.standard_normal((size, size))
    amp = 0.5 * (raw + raw.T)
    grid = make_grid(0.05, size, min_points=2)
    return kernel_from_amplitude(build_geometry(), grid, amp)


def equivalence_report(
    n_kernels: int = 10,
    size_range: tuple[int, int] = (8, 32),
    gains: tuple[float, ...] = DEFAULT_GAINS,
    seed: int = 20230355,
    tol_mean: float = DEFAULT_TOL_MEAN,
    tol_g2: float = DEFAULT_TOL_G2,
) -> EquivalenceReport:
    """Compare the analytic mode route against direct propagation.

    For each random symmetric kernel and gain, the total signal photon
    number from :func:`bsv_modes.gain.evolve` must match tr(B B^T) to
    ``tol_mean`` relative, and the mode-counting g2 must match the
    normally-ordered Wick g2 to ``tol_g2`` absolute.
    """
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in rng.integers(size_range[0], size_range[1] + 1, n_kernels))
    cases = []
    passed = True
    for size in sizes:
        kernel = random_symmetric_kernel(size, rng)
        dec = schmidt_mod.decompose(kernel, eigenvalue_floor=0.0)
        for g_val in gains:
            report = gain_mod.evolve(dec, g_val, m_l=1.0, transverse_dims=1)
            mom = moments(propagate(kernel, g_val))
            rel_mean = abs(report.total_photons - mom.mean_photons) / mom.mean_photons
            err_g2 = abs(report.g2 - mom.g2_normally_ordered)
            cases.append(EquivalenceCase(size=size, gain_G=g_val,
                                         rel_err_mean=rel_mean, abs_err_g2=err_g2))
            if rel_mean > tol_mean or err_g2 > tol_g2:
                passed = False
    return EquivalenceReport(
        passed=passed,
        tol_mean=tol_mean,
        tol_g2=tol_g2,
        sizes=sizes,
        gains=tuple(float(g) for g in gains),
        cases=tuple(cases),
    )
