"""Evaluation harness: correlations, six small classifiers, ROC/AUC and
simple least-squares regression diagnostics.

The classifiers are intentionally tiny and fully deterministic; they are
meant to score one- or two-dimensional reduced predictors, not to
compete with a general-purpose learning library.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import betainc, expit

from .errors import ConfigError, NumericError, UndefinedCorrelationError

CLASSIFIER_KINDS = ("lr", "lda", "qda", "knn1", "nbayes", "ctree")

_LOG_2PI = float(np.log(2.0 * np.pi))


# ---------------------------------------------------------------------------
# correlation and regression
# ---------------------------------------------------------------------------


def abs_correlation(u, y) -> float:
    """Absolute Pearson correlation between two vectors."""
    u = np.asarray(u, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if u.shape[0] != y.shape[0]:
        raise NumericError("vectors have different lengths")
    if u.shape[0] < 3:
        raise NumericError("correlation needs at least 3 samples")
    du = u - u.mean()
    dy = y - y.mean()
    su = float(np.sqrt((du * du).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if su == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation against a constant vector")
    return abs(float((du * dy).sum()) / (su * sy))


@dataclass(frozen=True)
class RegressionMetrics:
    slope: float
    se: float
    mse: float
    adj_r2: float
    p_value: float


def _t_two_sided_p(t: float, df: int) -> float:
    # P(|T| >= |t|) for Student t via the regularized incomplete beta.
    if not np.isfinite(t):
        return 0.0
    x = df / (df + t * t)
    return float(betainc(0.5 * df, 0.5, x))


def ols_regress(u, y) -> RegressionMetrics:
    """Simple linear regression of ``y`` on ``u`` with an intercept.

    ``mse`` divides the residual sum of squares by ``n``; the slope's
    standard error and p-value use the usual ``n - 2`` degrees of
    freedom.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = u.shape[0]
    if n != y.shape[0]:
        raise NumericError("predictor and response lengths differ")
    if n < 4:
        raise NumericError("regression needs at least 4 samples")
    du = u - u.mean()
    sxx = float((du * du).sum())
    if sxx == 0.0:
        raise NumericError("constant predictor")
    dy = y - y.mean()
    sst = float((dy * dy).sum())
    if sst == 0.0:
        raise NumericError("constant response")
    slope = float((du * dy).sum()) / sxx
    resid = dy - slope * du
    rss = float((resid * resid).sum())
    r2 = 1.0 - rss / sst
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - 2)
    sigma2 = rss / (n - 2)
    se = float(np.sqrt(sigma2 / sxx))
    t = slope / se if se > 0.0 else float("inf") * np.sign(slope or 1.0)
    return RegressionMetrics(
        slope=slope,
        se=se,
        mse=rss / n,
        adj_r2=adj_r2,
        p_value=_t_two_sided_p(float(t), n - 2),
    )


# ---------------------------------------------------------------------------
# confusion counts and rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassifierMetrics:
    """Rates in [0, 1]; a rate whose denominator was empty is ``None``
    and its name is listed in ``undefined``."""

    ccr: float
    tpr: float | None
    fpr: float | None
    ppv: float | None
    npv: float | None
    auc: float | None = None
    undefined: tuple[str, ...] = ()


def confusion_counts(predictions, truth, positive_label) -> ConfusionCounts:
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise NumericError("prediction and truth lengths differ")
    pred_pos = predictions == positive_label
    true_pos = truth == positive_label
    return ConfusionCounts(
        tp=int(np.count_nonzero(pred_pos & true_pos)),
        fp=int(np.count_nonzero(pred_pos & ~true_pos)),
        tn=int(np.count_nonzero(~pred_pos & ~true_pos)),
        fn=int(np.count_nonzero(~pred_pos & true_pos)),
    )


def _rate(num: int, denom: int, name: str, undefined: list[str]) -> float | None:
    if denom == 0:
        undefined.append(name)
        return None
    return num / denom


def confusion_metrics(predictions, truth, positive_label) -> ClassifierMetrics:
    """Rates from a confusion table; 0/0 rates come back flagged, never NaN."""
    c = confusion_counts(predictions, truth, positive_label)
    if c.total == 0:
        raise NumericError("no samples to evaluate")
    undefined: list[str] = []
    return ClassifierMetrics(
        ccr=(c.tp + c.tn) / c.total,
        tpr=_rate(c.tp, c.tp + c.fn, "tpr", undefined),
        fpr=_rate(c.fp, c.fp + c.tn, "fpr", undefined),
        ppv=_rate(c.tp, c.tp + c.fp, "ppv", undefined),
        npv=_rate(c.tn, c.tn + c.fn, "npv", undefined),
        auc=None,
        undefined=tuple(undefined),
    )


def _positive_mask(labels, positive_label=None) -> np.ndarray:
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.shape[0] != 2:
        raise NumericError(f"need exactly two classes, got {classes.shape[0]}")
    if positive_label is None:
        positive_label = classes[1]
    return labels == positive_label


def roc_auc(scores, labels, positive_label=None) -> float:
    """Area under the ROC curve; tied scores earn half credit.

    Computed from midranks, which makes it exactly the pairwise
    comparison statistic: the fraction of (positive, negative) pairs the
    score orders correctly, ties counting one half.
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    pos = _positive_mask(labels, positive_label)
    n = scores.shape[0]
    if pos.shape[0] != n:
        raise NumericError("scores and labels lengths differ")
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(n)
    sorted_scores = scores[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - 0.5 * n_pos * (n_pos + 1)) / (n_pos * n_neg)


def roc_points(scores, labels, positive_label=None) -> list[tuple[float | None, float, float]]:
    """ROC staircase as (threshold, fpr, tpr) triples.

    The first triple has a ``None`` threshold and anchors (0, 0); each
    following triple gives the rates when everything scoring at or above
    that threshold is called positive.
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    pos = _positive_mask(labels, positive_label)
    n_pos = int(pos.sum())
    n_neg = int(pos.shape[0] - n_pos)
    order = np.argsort(-scores, kind="mergesort")
    points: list[tuple[float | None, float, float]] = [(None, 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < order.shape[0]:
        threshold = scores[order[i]]
        while i < order.shape[0] and scores[order[i]] == threshold:
            if pos[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((float(threshold), fp / n_neg, tp / n_pos))
    return points


# ---------------------------------------------------------------------------
# classifiers
# ---------------------------------------------------------------------------


def _prep_training(scores, labels) -> tuple[np.ndarray, np.ndarray, tuple]:
    X = np.asarray(scores, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    if labels.shape[0] != X.shape[0]:
        raise NumericError("scores and labels lengths differ")
    if X.shape[0] < 4:
        raise NumericError("classifier training needs at least 4 samples")
    classes = np.unique(labels)
    if classes.shape[0] != 2:
        raise NumericError(f"need exactly two classes, got {classes.shape[0]}")
    y01 = (labels == classes[1]).astype(float)
    return X, y01, (classes[0], classes[1])


def _as_query(X, dim: int) -> np.ndarray:
    Q = np.asarray(X, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape[1] != dim:
        raise NumericError(f"query has {Q.shape[1]} columns, model expects {dim}")
    return Q


def _reg_variance(var):
    # Keeps degenerate (zero) variances usable without moving healthy ones.
    return var + 1e-9 * (1.0 + var)


def _scalar_gauss_loglik(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (_LOG_2PI + np.log(var)) - 0.5 * (x - mean) ** 2 / var


def _logistic_irls(
    A: np.ndarray, y01: np.ndarray, max_iter: int = 100, tol: float = 1e-8
) -> tuple[np.ndarray, bool]:
    """Iteratively reweighted least squares for the logistic model.

    Returns the coefficients and a separation flag.  On separation the
    likelihood has no maximum; iteration stops at the last stable
    coefficient vector, which is what gets returned.
    """
    beta = np.zeros(A.shape[1])
    separated = False
    for _ in range(max_iter):
        eta = np.clip(A @ beta, -30.0, 30.0)
        prob = expit(eta)
        w = np.maximum(prob * (1.0 - prob), 1e-12)
        z = eta + (y01 - prob) / w
        awa = A.T @ (A * w[:, None])
        rhs = A.T @ (w * z)
        try:
            new = np.linalg.solve(awa, rhs)
        except np.linalg.LinAlgError:
            new = np.linalg.lstsq(awa, rhs, rcond=None)[0]
        if not np.isfinite(new).all() or float(np.linalg.norm(new)) > 1e8:
            separated = True
            break
        delta = float(np.max(np.abs(new - beta)))
        beta = new
        if delta < tol:
            break
    # A coefficient vector with every training margin strictly positive
    # is a witness that the classes are linearly separable.
    margins = np.where(y01 == 1.0, A @ beta, -(A @ beta))
    if np.all(margins > 0.0):
        separated = True
    return beta, separated


class LogisticClassifier:
    """Logistic regression fitted by IRLS (at most 100 steps, tol 1e-8)."""

    kind = "lr"

    def fit(self, scores, labels) -> "LogisticClassifier":
        X, y01, self.classes_ = _prep_training(scores, labels)
        A = np.column_stack([np.ones(X.shape[0]), X])
        self.coef_, self.separated = _logistic_irls(A, y01)
        self._dim = X.shape[1]
        return self

    def decision_scores(self, X) -> np.ndarray:
        Q = _as_query(X, self._dim)
        A = np.column_stack([np.ones(Q.shape[0]), Q])
        return expit(np.clip(A @ self.coef_, -30.0, 30.0))

    def predict(self, X) -> np.ndarray:
        picks = self.decision_scores(X) > 0.5
        return np.where(picks, self.classes_[1], self.classes_[0])


class LdaClassifier:
    """Gaussian discriminant with a shared covariance."""

    kind = "lda"

    def fit(self, scores, labels) -> "LdaClassifier":
        X, y01, self.classes_ = _prep_training(scores, labels)
        n, d = X.shape
        self._dim = d
        pooled = np.zeros((d, d))
        self._weights = []
        self._biases = []
        masks = [y01 == 0.0, y01 == 1.0]
        means = [X[m].mean(axis=0) for m in masks]
        for m, mu in zip(masks, means):
            centered = X[m] - mu
            pooled += centered.T @ centered
        pooled /= n
        pooled += 1e-9 * (1.0 + np.trace(pooled) / d) * np.eye(d)
        inv = np.linalg.inv(pooled)
        for m, mu in zip(masks, means):
            prior = float(m.sum()) / n
            w = inv @ mu
            self._weights.append(w)
            self._biases.append(-0.5 * float(mu @ w) + float(np.log(prior)))
        return self

    def _discriminants(self, Q: np.ndarray) -> np.ndarray:
        return np.stack(
            [Q @ w + b for w, b in zip(self._weights, self._biases)], axis=1
        )

    def decision_scores(self, X) -> np.ndarray:
        delta = self._discriminants(_as_query(X, self._dim))
        return expit(delta[:, 1] - delta[:, 0])

    def predict(self, X) -> np.ndarray:
        delta = self._discriminants(_as_query(X, self._dim))
        picks = delta[:, 1] > delta[:, 0]
        return np.where(picks, self.classes_[1], self.classes_[0])


class _GaussianClassConditional:
    """Shared machinery for the per-class Gaussian classifiers."""

    def _fit_moments(self, scores, labels) -> None:
        X, y01, self.classes_ = _prep_training(scores, labels)
        n, d = X.shape
        self._dim = d
        self._means = []
        self._variances = []  # per-coordinate, regularized
        self._log_priors = []
        self._train = (X, y01)
        for c in (0.0, 1.0):
            rows = X[y01 == c]
            mu = rows.mean(axis=0)
            var = _reg_variance(((rows - mu) ** 2).mean(axis=0))
            self._means.append(mu)
            self._variances.append(var)
            self._log_priors.append(float(np.log(rows.shape[0] / n)))

    def _loglik(self, Q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decision_scores(self, X) -> np.ndarray:
        ll = self._loglik(_as_query(X, self._dim))
        return expit(ll[:, 1] - ll[:, 0])

    def predict(self, X) -> np.ndarray:
        ll = self._loglik(_as_query(X, self._dim))
        picks = ll[:, 1] > ll[:, 0]
        return np.where(picks, self.classes_[1], self.classes_[0])


class GaussianNbClassifier(_GaussianClassConditional):
    """Naive Bayes with Gaussian class-conditionals per coordinate."""

    kind = "nbayes"

    def fit(self, scores, labels) -> "GaussianNbClassifier":
        self._fit_moments(scores, labels)
        return self

    def _loglik(self, Q: np.ndarray) -> np.ndarray:
        cols = []
        for c in (0, 1):
            ll = self._log_priors[c]
            for j in range(self._dim):
                ll = ll + _scalar_gauss_loglik(
                    Q[:, j], self._means[c][j], self._variances[c][j]
                )
            cols.append(ll)
        return np.stack(cols, axis=1)


class QdaClassifier(_GaussianClassConditional):
    """Gaussian discriminant with one full covariance per class.

    In one dimension this reduces to the same scalar likelihoods naive
    Bayes uses, and the two produce identical outputs by construction.
    """

    kind = "qda"

    def fit(self, scores, labels) -> "QdaClassifier":
        self._fit_moments(scores, labels)
        X, y01 = self._train
        d = self._dim
        self._covs = []
        self._inv_covs = []
        self._log_dets = []
        if d > 1:
            for c in (0.0, 1.0):
                rows = X[y01 == c]
                centered = rows - rows.mean(axis=0)
                cov = centered.T @ centered / rows.shape[0]
                cov += 1e-9 * (1.0 + np.trace(cov) / d) * np.eye(d)
                self._covs.append(cov)
                self._inv_covs.append(np.linalg.inv(cov))
                self._log_dets.append(float(np.linalg.slogdet(cov)[1]))
        return self

    def _loglik(self, Q: np.ndarray) -> np.ndarray:
        if self._dim == 1:
            cols = [
                self._log_priors[c]
                + _scalar_gauss_loglik(Q[:, 0], self._means[c][0], self._variances[c][0])
                for c in (0, 1)
            ]
            return np.stack(cols, axis=1)
        cols = []
        for c in (0, 1):
            diff = Q - self._means[c]
            quad = np.einsum("ij,jk,ik->i", diff, self._inv_covs[c], diff)
            cols.append(
                self._log_priors[c]
                - 0.5 * (self._dim * _LOG_2PI + self._log_dets[c])
                - 0.5 * quad
            )
        return np.stack(cols, axis=1)


class NearestNeighborClassifier:
    """Single nearest neighbor under Euclidean distance.

    Distance ties resolve to the training sample with the lower index.
    """

    kind = "knn1"

    def fit(self, scores, labels) -> "NearestNeighborClassifier":
        X, y01, self.classes_ = _prep_training(scores, labels)
        self._X = X
        self._y01 = y01
        self._dim = X.shape[1]
        return self

    def _distances(self, Q: np.ndarray) -> np.ndarray:
        diff = Q[:, None, :] - self._X[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))

    def predict(self, X) -> np.ndarray:
        dist = self._distances(_as_query(X, self._dim))
        nearest = np.argmin(dist, axis=1)
        picks = self._y01[nearest] == 1.0
        return np.where(picks, self.classes_[1], self.classes_[0])

    def decision_scores(self, X) -> np.ndarray:
        dist = self._distances(_as_query(X, self._dim))
        d_pos = dist[:, self._y01 == 1.0].min(axis=1)
        d_neg = dist[:, self._y01 == 0.0].min(axis=1)
        total = d_pos + d_neg
        out = np.full(dist.shape[0], 0.5)
        nonzero = total > 0.0
        out[nonzero] = d_neg[nonzero] / total[nonzero]
        return out


def _gini(n_pos: int, n_total: int) -> float:
    if n_total == 0:
        return 0.0
    p = n_pos / n_total
    return 2.0 * p * (1.0 - p)


class TreeClassifier:
    """Axis-aligned binary tree grown on Gini impurity.

    Depth is capped at 3 and every leaf keeps at least 2 training
    samples.  Split ties resolve to the lowest feature index and then
    the lowest threshold, so refits are reproducible.
    """

    kind = "ctree"
    max_depth = 3
    min_leaf = 2

    def fit(self, scores, labels) -> "TreeClassifier":
        X, y01, self.classes_ = _prep_training(scores, labels)
        self._dim = X.shape[1]
        self._root = self._build(X, y01, depth=0)
        return self

    def _best_split(self, X: np.ndarray, y01: np.ndarray):
        n = X.shape[0]
        best = None  # (gini, feature, threshold)
        for j in range(self._dim):
            order = np.argsort(X[:, j], kind="mergesort")
            xs = X[order, j]
            ys = y01[order]
            left_pos = np.cumsum(ys)
            total_pos = left_pos[-1]
            for i in range(self.min_leaf - 1, n - self.min_leaf):
                if xs[i] == xs[i + 1]:
                    continue
                n_left = i + 1
                n_right = n - n_left
                g = (
                    n_left * _gini(int(left_pos[i]), n_left)
                    + n_right * _gini(int(total_pos - left_pos[i]), n_right)
                ) / n
                if best is None or g < best[0] - 1e-12:
                    best = (g, j, 0.5 * (xs[i] + xs[i + 1]))
        return best

    def _build(self, X: np.ndarray, y01: np.ndarray, depth: int) -> dict:
        n = X.shape[0]
        prob = float(y01.mean())
        leaf = {"leaf": True, "prob": prob}
        if depth >= self.max_depth or n < 2 * self.min_leaf or prob in (0.0, 1.0):
            return leaf
        split = self._best_split(X, y01)
        if split is None or split[0] >= _gini(int(y01.sum()), n) - 1e-12:
            return leaf
        _, j, threshold = split
        mask = X[:, j] <= threshold
        return {
            "leaf": False,
            "feature": j,
            "threshold": threshold,
            "left": self._build(X[mask], y01[mask], depth + 1),
            "right": self._build(X[~mask], y01[~mask], depth + 1),
        }

    def decision_scores(self, X) -> np.ndarray:
        Q = _as_query(X, self._dim)
        out = np.empty(Q.shape[0])
        for i, row in enumerate(Q):
            node = self._root
            while not node["leaf"]:
                node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
            out[i] = node["prob"]
        return out

    def predict(self, X) -> np.ndarray:
        picks = self.decision_scores(X) > 0.5
        return np.where(picks, self.classes_[1], self.classes_[0])


_CLASSIFIERS = {
    "lr": LogisticClassifier,
    "lda": LdaClassifier,
    "qda": QdaClassifier,
    "knn1": NearestNeighborClassifier,
    "nbayes": GaussianNbClassifier,
    "ctree": TreeClassifier,
}


def fit_classifier(kind: str, scores, labels):
    """Train one of the six small classifiers on reduced predictors."""
    if kind not in _CLASSIFIERS:
        raise ConfigError(f"unknown classifier {kind!r}; expected one of {CLASSIFIER_KINDS}")
    return _CLASSIFIERS[kind]().fit(scores, labels)


class LogisticSlope(NamedTuple):
    se: float
    separated: bool


def logistic_se(u, labels) -> LogisticSlope:
    """Standard error of the logistic slope for a single predictor.

    Uses the inverse Fisher information at the IRLS solution.  When the
    classes are perfectly separated the flag is set and the value comes
    from the last stable iterate.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    _, y01, _ = _prep_training(u, labels)
    A = np.column_stack([np.ones(u.shape[0]), u])
    beta, separated = _logistic_irls(A, y01)
    eta = np.clip(A @ beta, -30.0, 30.0)
    prob = expit(eta)
    w = np.maximum(prob * (1.0 - prob), 1e-12)
    info = A.T @ (A * w[:, None])
    cov = np.linalg.inv(info)
    return LogisticSlope(se=float(np.sqrt(cov[1, 1])), separated=separated)


def evaluate_classifier(model, scores, truth, positive_label) -> ClassifierMetrics:
    """Confusion rates plus AUC for a fitted classifier on given data."""
    predictions = model.predict(scores)
    metrics = confusion_metrics(predictions, truth, positive_label)
    auc = roc_auc(model.decision_scores(scores), truth, positive_label)
    return replace(metrics, auc=auc)
