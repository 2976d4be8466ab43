"""Sufficient dimension reduction via inverse-moment kernels.

Slices the response, whitens the predictors with a chosen covariance
estimate, builds the first-moment (SIR-style) or second-moment
(SAVE-style) kernel matrix and back-transforms its leading eigenvectors
into directions in the original predictor space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import (
    DEFAULT_RANK_TOL,
    CovEstimate,
    GroupedData,
    estimate_from_matrix,
    group_covariance,
    inv_sqrt,
    mec_estimator,
    mecs_estimator,
    pooled_covariance,
    select_max_entropy_group,
    sym_eigen,
)
from .errors import (
    ConfigError,
    DegenerateSliceError,
    DimensionMismatchError,
    NumericError,
    SingularCovarianceError,
    SlicingError,
)

METHODS = ("sir", "save")

COV_KINDS = ("mle", "mecs", "mec")

DEFAULT_SLICES = 10


@dataclass(frozen=True)
class SlicedResponse:
    """Slice membership for every sample.

    ``assignment`` holds 0-based slice ids; slices are contiguous and
    monotone in the response for numeric input, and one per distinct
    label for categorical input (``labels`` then maps slice id to
    label).  ``notes`` records adjustments such as a reduced slice
    count.
    """

    assignment: np.ndarray
    H: int
    fractions: np.ndarray
    labels: tuple | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        counts = np.bincount(self.assignment, minlength=self.H)
        if counts.size != self.H or (counts == 0).any():
            raise SlicingError("every slice must be non-empty")

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.H)


@dataclass(frozen=True)
class SdrFit:
    """Fitted directions plus everything needed to reapply them."""

    method: str
    directions: np.ndarray
    kernel_eigenvalues: np.ndarray
    whitener: np.ndarray
    cov_kind: str
    H: int
    center: np.ndarray
    train_scores: np.ndarray
    mec_rule: str = "max"
    rank_tol: float = DEFAULT_RANK_TOL
    cov_entropy: float = float("nan")
    cov_eigen_min: float = float("nan")
    cov_eigen_max: float = float("nan")
    cov_effective_rank: int = 0
    notes: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.directions.shape[0]

    @property
    def d(self) -> int:
        return self.directions.shape[1]


def _is_categorical(y: np.ndarray) -> bool:
    return y.dtype.kind not in "fiu"


def slice_response(y, H: int = DEFAULT_SLICES) -> SlicedResponse:
    """Assign each sample to a response slice.

    Numeric responses are sorted and cut into ``H`` contiguous slices of
    approximately equal count; samples sharing a response value never
    split across slices (the whole tied block stays in the lower
    slice).  When the response has fewer than ``H`` distinct values the
    slice count drops to the distinct count and a note records that.
    Categorical responses ignore ``H`` and use one slice per label.
    """
    y = np.asarray(y)
    if y.ndim != 1:
        raise SlicingError("response must be a 1-d vector")
    n = y.shape[0]
    if n < 2:
        raise SlicingError(f"cannot slice {n} sample(s)")

    if _is_categorical(y):
        labels = sorted(set(y.tolist()))
        if len(labels) < 2:
            raise SlicingError("categorical response has a single class")
        index = {label: i for i, label in enumerate(labels)}
        assignment = np.fromiter((index[v] for v in y.tolist()), dtype=int, count=n)
        counts = np.bincount(assignment, minlength=len(labels))
        return SlicedResponse(
            assignment=assignment,
            H=len(labels),
            fractions=counts / float(n),
            labels=tuple(labels),
        )

    if H < 2:
        raise ConfigError(f"need at least 2 slices, got {H}")
    if not np.isfinite(y.astype(float)).all():
        raise SlicingError("numeric response contains non-finite values")

    uniques, counts = np.unique(y, return_counts=True)
    notes: list[str] = []
    if uniques.size < H:
        notes.append(f"slice count reduced from {H} to {uniques.size} distinct response values")
        H = int(uniques.size)
    if H < 2:
        raise SlicingError("response is constant; nothing to slice")

    # Greedy walk over distinct values: a value's whole tied block joins
    # the current slice, which closes once its quota is met or exactly
    # one distinct value per remaining slice is left.
    slice_of_value = np.empty(uniques.size, dtype=int)
    current = 0
    filled = 0
    remaining = n
    slices_left = H
    for k in range(uniques.size):
        slice_of_value[k] = current
        filled += int(counts[k])
        values_left = uniques.size - k - 1
        if slices_left > 1 and (
            filled >= remaining / slices_left or values_left == slices_left - 1
        ):
            remaining -= filled
            filled = 0
            current += 1
            slices_left -= 1
    if current != H - 1:
        raise SlicingError("slicing produced an empty slice")

    assignment = slice_of_value[np.searchsorted(uniques, y)]
    slice_counts = np.bincount(assignment, minlength=H)
    return SlicedResponse(
        assignment=assignment,
        H=H,
        fractions=slice_counts / float(n),
        notes=tuple(notes),
    )


def grouped_from_slices(X: np.ndarray, slices: SlicedResponse) -> GroupedData:
    """Split the rows of ``X`` into one group per slice."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] != slices.assignment.shape[0]:
        raise DimensionMismatchError("row count does not match the slice assignment")
    return GroupedData(tuple(X[slices.assignment == h] for h in range(slices.H)))


def standardize(X, cov: CovEstimate) -> np.ndarray:
    """Center the rows of ``X`` and whiten them with ``cov``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError("predictor matrix must be 2-d")
    if X.shape[1] != cov.dim:
        raise DimensionMismatchError(
            f"data has {X.shape[1]} columns but covariance is {cov.dim}-dimensional"
        )
    return (X - X.mean(axis=0)) @ inv_sqrt(cov)


def sir_kernel(Z: np.ndarray, slices: SlicedResponse) -> np.ndarray:
    """Weighted outer products of within-slice means of standardized data."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] != slices.assignment.shape[0]:
        raise DimensionMismatchError("row count does not match the slice assignment")
    p = Z.shape[1]
    kernel = np.zeros((p, p))
    for h in range(slices.H):
        rows = Z[slices.assignment == h]
        if rows.shape[0] == 0:
            raise SlicingError(f"slice {h} is empty")
        mean = rows.mean(axis=0)
        kernel += slices.fractions[h] * np.outer(mean, mean)
    return 0.5 * (kernel + kernel.T)


def save_kernel(Z: np.ndarray, slices: SlicedResponse) -> np.ndarray:
    """Weighted squared deviations of within-slice covariances from identity."""
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] != slices.assignment.shape[0]:
        raise DimensionMismatchError("row count does not match the slice assignment")
    p = Z.shape[1]
    eye = np.eye(p)
    kernel = np.zeros((p, p))
    for h in range(slices.H):
        rows = Z[slices.assignment == h]
        if rows.shape[0] < 2:
            raise DegenerateSliceError(
                f"slice {h} has {rows.shape[0]} sample(s); within-slice covariance needs 2"
            )
        gap = eye - group_covariance(rows)
        kernel += slices.fractions[h] * (gap @ gap)
    return 0.5 * (kernel + kernel.T)


def build_cov_estimate(
    X: np.ndarray,
    slices: SlicedResponse,
    cov_kind: str,
    rule: str = "max",
    rank_tol: float = DEFAULT_RANK_TOL,
) -> CovEstimate:
    """Covariance estimate used for whitening.

    ``mle`` is the marginal sample covariance and refuses to run when
    the sample count does not exceed the dimension; ``mecs`` and ``mec``
    treat the slices as groups and build the entropy-guided estimates.
    """
    n, p = X.shape
    if cov_kind == "mle":
        if n <= p:
            raise SingularCovarianceError(
                f"marginal covariance of {n} samples in {p} dimensions is singular; "
                "use cov_kind 'mecs' or 'mec'"
            )
        return estimate_from_matrix(group_covariance(X), "mle", rank_tol)
    grouped = grouped_from_slices(X, slices)
    if cov_kind == "mecs":
        _, s_ref = select_max_entropy_group(grouped, rank_tol)
        return mecs_estimator(s_ref, pooled_covariance(grouped), rank_tol)
    if cov_kind == "mec":
        return mec_estimator(grouped, rule=rule, rank_tol=rank_tol)
    raise ConfigError(f"unknown covariance kind {cov_kind!r}; expected one of {COV_KINDS}")


def fit_sdr(
    X,
    y,
    method: str = "sir",
    cov_kind: str = "mle",
    H: int = DEFAULT_SLICES,
    d: int = 1,
    rule: str = "max",
    rank_tol: float = DEFAULT_RANK_TOL,
    cov: CovEstimate | None = None,
) -> SdrFit:
    """Estimate ``d`` sufficient directions for the regression of y on X.

    Pipeline: slice the response, estimate the predictor covariance
    (``mle`` uses the marginal sample covariance; ``mecs``/``mec`` build
    an entropy-guided estimate from the slices treated as groups),
    whiten, form the method's kernel matrix, and map its leading
    eigenvectors back through the whitener.  Passing ``cov`` skips the
    estimation step and whitens with the given estimate instead.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    if cov_kind not in COV_KINDS:
        raise ConfigError(f"unknown covariance kind {cov_kind!r}; expected one of {COV_KINDS}")
    if d < 1:
        raise ConfigError(f"direction count must be at least 1, got {d}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError("predictor matrix must be 2-d")
    if not np.isfinite(X).all():
        raise NumericError("predictor matrix contains non-finite values")
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError("predictor and response row counts differ")

    slices = slice_response(y, H)
    if method == "sir" and d > slices.H - 1:
        raise ConfigError(
            f"sir cannot estimate more than H-1={slices.H - 1} directions, requested {d}"
        )

    if cov is None:
        cov = build_cov_estimate(X, slices, cov_kind, rule, rank_tol)
    elif cov.dim != X.shape[1]:
        raise DimensionMismatchError(
            f"covariance is {cov.dim}-dimensional but data has {X.shape[1]} columns"
        )
    whitener = inv_sqrt(cov)
    center = X.mean(axis=0)
    Z = (X - center) @ whitener

    kernel = sir_kernel(Z, slices) if method == "sir" else save_kernel(Z, slices)
    eig = sym_eigen(kernel)
    directions = whitener @ eig.vectors[:, :d]

    return SdrFit(
        method=method,
        directions=directions,
        kernel_eigenvalues=eig.values,
        whitener=whitener,
        cov_kind=cov_kind,
        H=slices.H,
        center=center,
        train_scores=(X - center) @ directions,
        mec_rule=rule,
        rank_tol=rank_tol,
        cov_entropy=cov.entropy,
        cov_eigen_min=cov.eigen_min,
        cov_eigen_max=cov.eigen_max,
        cov_effective_rank=cov.effective_rank,
        notes=slices.notes,
    )


def project(X, fit: SdrFit) -> np.ndarray:
    """Map new rows onto the fitted directions."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != fit.dim:
        raise DimensionMismatchError(
            f"data has shape {X.shape} but the fit expects {fit.dim} columns"
        )
    return (X - fit.center) @ fit.directions
