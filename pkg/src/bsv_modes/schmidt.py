"""Schmidt decomposition of the weighted two-photon amplitude.

The decomposition F(ts, ti) = sum_n sqrt(lambda_n) u_n(ts) v_n(ti) is
obtained from the sampled kernel matrix.  Because the kernel is symmetric,
the singular value decomposition is constructed from the real symmetric
eigendecomposition M = Q diag(e) Q^T:

    sqrt(lambda_n) = |e_n|,   u_n = q_n,   v_n = sign(e_n) q_n.

This is an exact SVD of a symmetric matrix, it is cheaper than a general
SVD, and it guarantees |u_n| == |v_n| pointwise even for nearly degenerate
singular values (a general SVD routine may mix +e/-e subspaces there).

Mode samples are returned unweighted, u_n(theta_i) = Q[i, n] / sqrt(w_i),
so they are orthonormal under the grid quadrature:
sum_i w_i u_m(theta_i) u_n(theta_i) = delta_mn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, NumericalError, ValidationError
from .kernel import AngularGrid, TpaKernel, _readonly

#: Treat adjacent singular values closer than this (relative to the largest)
#: as a degenerate group when fixing the output order.
_DEGENERACY_RTOL = 1e-12

_ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Eigenvalues and discrete mode functions of a kernel.

    ``lambdas`` are the retained normalized eigenvalues (squared singular
    values) in descending order; together with ``discarded_mass`` they sum
    to one.  ``schmidt_number`` is computed from the full spectrum before
    truncation.
    """

    lambdas: np.ndarray        # descending, sum + discarded_mass == 1
    modes_u: np.ndarray        # (n_grid, n_modes) signal mode samples
    modes_v: np.ndarray        # (n_grid, n_modes) idler mode samples
    schmidt_number: float      # K = 1 / sum(lambda**2), full spectrum
    retained_modes: int
    discarded_mass: float
    grid: AngularGrid

    def __post_init__(self):
        object.__setattr__(self, "lambdas", _readonly(self.lambdas))
        object.__setattr__(self, "modes_u", _readonly(self.modes_u))
        object.__setattr__(self, "modes_v", _readonly(self.modes_v))


def schmidt_number(lambdas) -> float:
    """Effective mode count K = (sum lambda)**2 / sum(lambda**2).

    Scale-invariant (the input need not be normalized) and invariant under
    reordering.  Raises ValidationError for negative entries or an all-zero
    spectrum.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValidationError("lambdas must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(lam)):
        raise ValidationError("lambdas must be finite")
    if np.any(lam < 0.0):
        raise ValidationError("lambdas must be non-negative")
    total = float(lam.sum())
    if total <= 0.0:
        raise ValidationError("at least one eigenvalue must be positive")
    return float(total**2 / np.dot(lam, lam))


def _order_with_tie_break(singulars: np.ndarray, evecs: np.ndarray,
                          abs_theta: np.ndarray) -> np.ndarray:
    """Descending order of singular values; ties resolved reproducibly.

    Within a degenerate group the modes are ordered by the mean absolute
    angle of |u_n|^2 (ascending), so the most axis-centered mode comes
    first regardless of the backend's arbitrary subspace basis order.
    """
    order = np.argsort(-singulars, kind="stable")
    s = singulars[order]
    tol = _DEGENERACY_RTOL * (s[0] if s.size else 0.0)
    start = 0
    for stop in range(1, s.size + 1):
        if stop == s.size or s[start] - s[stop] > tol:
            if stop - start > 1:
                group = order[start:stop]
                moments = abs_theta @ (evecs[:, group] ** 2)
                order[start:stop] = group[np.argsort(moments, kind="stable")]
            start = stop
    return order


def decompose(
    kernel: TpaKernel,
    eigenvalue_floor: float = 1e-12,
    max_modes: int | None = None,
) -> SchmidtDecomposition:
    """Decompose a unit-normalized kernel into Schmidt modes.

    Args:
        kernel: a :class:`TpaKernel` (unit Frobenius norm, symmetric).
        eigenvalue_floor: drop modes with lambda below this fraction of the
            leading eigenvalue; the dropped mass is reported, not lost.
        max_modes: optional hard cap on the retained mode count.

    Raises:
        ValidationError: if the kernel is not unit-normalized.
        DecompositionError: if the matrix contains non-finite entries or the
            eigendecomposition fails.
    """
    m = kernel.matrix
    if not np.all(np.isfinite(m)):
        raise DecompositionError("kernel matrix contains non-finite entries")
    fro = float(np.linalg.norm(m))
    if abs(fro - 1.0) > 1e-8:
        raise ValidationError(f"kernel must be unit-normalized, Frobenius norm {fro!r}")
    try:
        evals, evecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}") from exc

    singulars = np.abs(evals)
    order = _order_with_tie_break(singulars, evecs, np.abs(kernel.grid.theta))
    lam_full = singulars[order] ** 2
    k_full = schmidt_number(lam_full)

    floor = eigenvalue_floor * lam_full[0]
    keep = int(np.count_nonzero(lam_full >= floor))
    if max_modes is not None:
        keep = min(keep, int(max_modes))
    keep = max(keep, 1)
    lam = lam_full[:keep]
    discarded = float(lam_full[keep:].sum())

    kept = order[:keep]
    q = evecs[:, kept]
    signs = np.where(evals[kept] >= 0.0, 1.0, -1.0)

    # Reproducible sign convention: largest-magnitude sample of u_n positive.
    peak_rows = np.argmax(np.abs(q), axis=0)
    flips = np.where(q[peak_rows, np.arange(keep)] < 0.0, -1.0, 1.0)
    q = q * flips

    gram = q.T @ q
    defect = float(np.max(np.abs(gram - np.eye(keep))))
    if defect > _ORTHONORMALITY_TOL:
        raise NumericalError(f"mode orthonormality defect {defect:.3e}")

    inv_sw = 1.0 / kernel.grid.sqrt_weights
    modes_u = q * inv_sw[:, None]
    modes_v = modes_u * signs[None, :]
    return SchmidtDecomposition(
        lambdas=lam,
        modes_u=modes_u,
        modes_v=modes_v,
        schmidt_number=k_full,
        retained_modes=keep,
        discarded_mass=discarded,
        grid=kernel.grid,
    )


def reconstruction(dec: SchmidtDecomposition) -> np.ndarray:
    """Weighted-matrix reconstruction sum_n sqrt(lambda_n) u~_n v~_n^T.

    The squared Frobenius distance between this and the original kernel
    matrix equals the discarded eigenvalue mass (SVD completeness).
    """
    sw = dec.grid.sqrt_weights[:, None]
    uw = dec.modes_u * sw
    vw = dec.modes_v * sw
    return (uw * np.sqrt(dec.lambdas)) @ vw.T
