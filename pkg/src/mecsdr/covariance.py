"""Covariance estimation for grouped samples.

Provides the classical per-group and pooled estimators together with two
entropy-guided combinations that remain usable when each group holds far
fewer samples than variables:

* ``mecs_estimator`` keeps, direction by direction on the joint
  eigenbasis of a group plus the pool, whichever of the two variance
  contributions is larger.
* ``mec_estimator`` first selects the group whose covariance has the
  largest Gaussian entropy, combines it with the pooled estimate the
  same way, and backfills directions that carry no dispersion
  information at all with the average selected variance so the result
  stays positive definite even for badly undersized groups.

Eigen utilities (decomposition with a fixed sign convention, pseudo
inverse square root, entropy of a Gaussian with the given covariance)
live here as well because every other module leans on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DegenerateGroupError,
    DegeneratePoolError,
    DimensionMismatchError,
    EntropyUndefinedError,
    InvalidBasisError,
    NumericError,
)

DEFAULT_RANK_TOL = 1e-12

ESTIMATOR_KINDS = ("mle", "pooled", "group", "mecs", "mec")

MEC_RULES = ("max", "mean")

# Entry pairs (i, j) / (j, i) may differ by this much, relative to the
# entry magnitude, before a matrix is rejected as asymmetric.
_SYMMETRY_RTOL = 1e-10

# Eigenvalues this far below zero (relative to the largest eigenvalue)
# are rounding debris from a PSD input and get clamped to zero; anything
# more negative means the input was not PSD to begin with.
_NEGATIVE_EIG_RTOL = 1e-10

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class EigenSystem:
    """Orthonormal eigenvectors (columns) with eigenvalues sorted descending."""

    vectors: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        v, w = self.vectors, self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatchError("eigenvector matrix must be square")
        if w.ndim != 1 or w.shape[0] != v.shape[0]:
            raise DimensionMismatchError("eigenvalue count must match dimension")
        if np.any(np.diff(w) > 0):
            raise NumericError("eigenvalues must be sorted non-increasing")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CovEstimate:
    """A symmetric covariance estimate plus the metadata reports need."""

    matrix: np.ndarray
    kind: str
    spectrum: EigenSystem
    entropy: float
    rank_tol: float
    effective_rank: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigen_min(self) -> float:
        return float(self.spectrum.values[-1])

    @property
    def eigen_max(self) -> float:
        return float(self.spectrum.values[0])


@dataclass(frozen=True)
class GroupedData:
    """Per-group data matrices sharing one variable space.

    Every group needs at least two rows (its covariance divides by
    ``n_i - 1``) and there must be at least two groups.
    """

    groups: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        groups = tuple(np.asarray(g, dtype=float) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if len(groups) < 2:
            raise DegenerateGroupError("need at least two groups")
        dims = set()
        for i, g in enumerate(groups):
            if g.ndim != 2:
                raise DimensionMismatchError(f"group {i} is not a 2-d matrix")
            if g.shape[0] < 2:
                raise DegenerateGroupError(
                    f"group {i} has {g.shape[0]} row(s); covariance needs at least 2"
                )
            if not np.isfinite(g).all():
                raise NumericError(f"group {i} contains non-finite values")
            dims.add(g.shape[1])
        if len(dims) != 1:
            raise DimensionMismatchError(f"groups disagree on dimension: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.groups[0].shape[1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)

    @property
    def total(self) -> int:
        return sum(self.sizes)


def _check_symmetric(matrix, name: str = "matrix") -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NumericError(f"{name} contains non-finite entries")
    gap = np.abs(m - m.T)
    bound = _SYMMETRY_RTOL * np.maximum(1.0, np.abs(m))
    if np.any(gap > bound):
        raise NumericError(f"{name} is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def _clamp_spectrum(values: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Zero out tiny negative eigenvalues; reject genuinely negative ones."""
    lam_max = float(values.max(initial=0.0))
    floor = -_NEGATIVE_EIG_RTOL * max(lam_max, 0.0)
    if np.any(values < floor):
        raise NumericError(f"{name} is not positive semi-definite within tolerance")
    return np.where(values < 0.0, 0.0, values)


def _entropy_from_values(values: np.ndarray, dim: int, rank_tol: float) -> float:
    """Gaussian entropy with the log-determinant taken over the retained spectrum."""
    lam_max = float(values.max(initial=0.0))
    if lam_max <= 0.0:
        raise EntropyUndefinedError("all eigenvalues are zero")
    retained = values[values > rank_tol * lam_max]
    if retained.size == 0:
        raise EntropyUndefinedError("no eigenvalue above the rank threshold")
    return 0.5 * dim * _LOG_2PI + 0.5 * float(np.log(retained).sum()) + 0.5 * dim


def _effective_rank(values: np.ndarray, rank_tol: float) -> int:
    lam_max = float(values.max(initial=0.0))
    return int(np.count_nonzero(values > rank_tol * lam_max))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude component is positive."""
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


def group_covariance(x) -> np.ndarray:
    """Sample covariance of one group, divisor ``n - 1``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatchError("group data must be a 2-d matrix")
    if not np.isfinite(x).all():
        raise NumericError("group data contains non-finite values")
    n = x.shape[0]
    if n < 2:
        raise DegenerateGroupError(f"group has {n} row(s); covariance needs at least 2")
    centered = x - x.mean(axis=0)
    s = centered.T @ centered / (n - 1.0)
    return 0.5 * (s + s.T)


def pooled_covariance(data: GroupedData) -> np.ndarray:
    """Size-weighted average of the group covariances."""
    denom = data.total - len(data.groups)
    if denom <= 0:
        raise DegeneratePoolError("no degrees of freedom left after grouping")
    acc = np.zeros((data.dim, data.dim))
    for g in data.groups:
        centered = g - g.mean(axis=0)
        acc += centered.T @ centered
    acc /= denom
    return 0.5 * (acc + acc.T)


def gaussian_entropy(matrix, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Entropy in nats of a Gaussian with the given covariance.

    Rank-deficient input gets the log-determinant of its retained
    spectrum (eigenvalues above ``rank_tol`` times the largest) so group
    comparisons stay finite for undersized samples.  Raises
    ``EntropyUndefinedError`` when nothing survives the threshold.
    """
    m = _check_symmetric(matrix)
    values = _clamp_spectrum(np.linalg.eigvalsh(m))
    return _entropy_from_values(values, m.shape[0], rank_tol)


def _group_entropy(x: np.ndarray, dim: int, rank_tol: float) -> float:
    # The nonzero spectrum of the covariance equals that of the n x n
    # Gram matrix of centered rows, which is much cheaper when n < p.
    n = x.shape[0]
    centered = x - x.mean(axis=0)
    if n - 1 < dim:
        small = centered @ centered.T / (n - 1.0)
    else:
        small = centered.T @ centered / (n - 1.0)
    values = _clamp_spectrum(np.linalg.eigvalsh(0.5 * (small + small.T)))
    return _entropy_from_values(values, dim, rank_tol)


def select_max_entropy_group(
    data: GroupedData, rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[int, np.ndarray]:
    """Index and covariance of the group with the largest Gaussian entropy.

    Groups whose entropy is undefined (zero covariance) are skipped;
    exact ties go to the smallest index.
    """
    best_index = -1
    best_entropy = -np.inf
    for i, g in enumerate(data.groups):
        try:
            h = _group_entropy(g, data.dim, rank_tol)
        except EntropyUndefinedError:
            continue
        if h > best_entropy:
            best_index, best_entropy = i, h
    if best_index < 0:
        raise EntropyUndefinedError("every group covariance is degenerate")
    return best_index, group_covariance(data.groups[best_index])


def _contributions(basis: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->j", basis, matrix @ basis)


def variance_contributions(basis, matrix) -> np.ndarray:
    """Diagonal of ``basis.T @ matrix @ basis`` for an orthonormal basis."""
    b = np.asarray(basis, dtype=float)
    m = _check_symmetric(matrix)
    if b.ndim != 2 or b.shape != m.shape:
        raise DimensionMismatchError("basis and matrix shapes disagree")
    gram = b.T @ b
    if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-8):
        raise InvalidBasisError("basis columns are not orthonormal within 1e-8")
    return _contributions(b, m)


def sym_eigen(matrix) -> EigenSystem:
    """Symmetric eigendecomposition, eigenvalues descending.

    Each eigenvector is flipped so its largest-magnitude component is
    positive, which keeps directions reproducible across runs.
    """
    m = _check_symmetric(matrix)
    values, vectors = np.linalg.eigh(m)
    order = np.argsort(values, kind="stable")[::-1]
    return EigenSystem(vectors=_fix_signs(vectors[:, order]), values=values[order])


def estimate_from_matrix(
    matrix, kind: str, rank_tol: float = DEFAULT_RANK_TOL
) -> CovEstimate:
    """Wrap an explicit covariance matrix as a ``CovEstimate``."""
    if kind not in ESTIMATOR_KINDS:
        raise ConfigError(f"unknown estimator kind {kind!r}")
    eig = sym_eigen(matrix)
    values = _clamp_spectrum(eig.values)
    spectrum = EigenSystem(vectors=eig.vectors, values=values)
    return CovEstimate(
        matrix=0.5 * (np.asarray(matrix, dtype=float) + np.asarray(matrix, dtype=float).T),
        kind=kind,
        spectrum=spectrum,
        entropy=_entropy_from_values(values, spectrum.dim, rank_tol),
        rank_tol=rank_tol,
        effective_rank=_effective_rank(values, rank_tol),
    )


def _assemble_from_basis(
    vectors: np.ndarray, values: np.ndarray, kind: str, rank_tol: float
) -> CovEstimate:
    """Build a ``CovEstimate`` whose matrix is defined by its own spectrum."""
    values = _clamp_spectrum(values, name="selected variances")
    order = np.argsort(values, kind="stable")[::-1]
    vectors = _fix_signs(vectors[:, order])
    values = values[order]
    matrix = (vectors * values) @ vectors.T
    matrix = 0.5 * (matrix + matrix.T)
    return CovEstimate(
        matrix=matrix,
        kind=kind,
        spectrum=EigenSystem(vectors=vectors, values=values),
        entropy=_entropy_from_values(values, values.shape[0], rank_tol),
        rank_tol=rank_tol,
        effective_rank=_effective_rank(values, rank_tol),
    )


def mecs_estimator(
    group_cov, pooled_cov, rank_tol: float = DEFAULT_RANK_TOL
) -> CovEstimate:
    """Combine one group covariance with the pool by per-direction maxima.

    On the eigenbasis of ``group_cov + pooled_cov`` the two matrices
    reduce to per-direction variance contributions; the estimate keeps
    the larger contribution in every direction.
    """
    g = _check_symmetric(group_cov, "group covariance")
    p = _check_symmetric(pooled_cov, "pooled covariance")
    if g.shape != p.shape:
        raise DimensionMismatchError(
            f"group covariance is {g.shape[0]}-dimensional, pool is {p.shape[0]}-dimensional"
        )
    _, psi = np.linalg.eigh(g + p)
    z = np.maximum(_contributions(psi, g), _contributions(psi, p))
    return _assemble_from_basis(psi, z, "mecs", rank_tol)


def mec_estimator(
    data: GroupedData, rule: str = "max", rank_tol: float = DEFAULT_RANK_TOL
) -> CovEstimate:
    """Entropy-selected covariance combined with the pool.

    Picks the group covariance with maximum Gaussian entropy, forms the
    eigenbasis of its sum with the pooled covariance, and selects per
    direction either the larger of the two variance contributions
    (``rule="max"``) or their average (``rule="mean"``).

    Directions where the summed covariance itself has no dispersion
    (eigenvalue at or below ``rank_tol`` times the largest) carry no
    information about scale; they receive the average selected variance
    instead of zero, so the estimate stays positive definite and
    invertible even when the total sample count is far below the
    dimension.  Full-rank inputs are never touched by this backfill.
    """
    if rule not in MEC_RULES:
        raise ConfigError(f"unknown combination rule {rule!r}; expected one of {MEC_RULES}")
    _, s_me = select_max_entropy_group(data, rank_tol)
    s_p = pooled_covariance(data)
    mix = s_me + s_p
    lam, psi = np.linalg.eigh(mix)
    phi_me = _contributions(psi, s_me)
    phi_p = _contributions(psi, s_p)
    if rule == "max":
        z = np.maximum(phi_me, phi_p)
    else:
        z = 0.5 * (phi_me + phi_p)
    z = _clamp_spectrum(z, name="selected variances")
    threshold = rank_tol * max(float(lam.max(initial=0.0)), 0.0)
    null_dirs = lam <= threshold
    if null_dirs.any() and not null_dirs.all():
        z = z.copy()
        z[null_dirs] = z.mean()
    return _assemble_from_basis(psi, z, "mec", rank_tol)


def inv_sqrt(est: CovEstimate) -> np.ndarray:
    """Pseudo inverse square root on the retained eigen-subspace.

    For full-rank input this is the exact inverse square root; for
    rank-deficient input only eigenvalues above ``rank_tol`` times the
    largest take part and the null space maps to zero.
    """
    values = est.spectrum.values
    lam_max = float(values.max(initial=0.0))
    keep = values > est.rank_tol * lam_max
    if not keep.any():
        raise EntropyUndefinedError("covariance estimate has effective rank zero")
    v = est.spectrum.vectors[:, keep]
    w = (v / np.sqrt(values[keep])) @ v.T
    return 0.5 * (w + w.T)
