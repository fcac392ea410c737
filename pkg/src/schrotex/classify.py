"""PCA + LDA classification with stratified k-fold cross-validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .transform import InvalidParameterError

LDA_RIDGE = 1e-6
# features spreading less than this are treated as constant (e.g. first central moments)
NEAR_CONSTANT = 1e-9


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (n_retained, n_features), rows orthonormal
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])


@dataclass(frozen=True)
class LdaModel:
    classes: np.ndarray
    class_means: np.ndarray  # (n_classes, dim)
    shared_covariance: np.ndarray
    class_priors: np.ndarray
    # cached discriminant weights: score_c(x) = x @ coef[c] + intercept[c]
    coef: np.ndarray
    intercept: np.ndarray


@dataclass
class ClassificationReport:
    fold_accuracies: list
    success_rate: float
    deviation: float
    confusion: np.ndarray
    classes: list
    params: dict = field(default_factory=dict)
    fold_models: list = field(default_factory=list, repr=False, compare=False)

    def summary(self) -> str:
        return f"{self.success_rate:.2f}±{self.deviation:.2f}"

    def to_dict(self) -> dict:
        return {
            "success_rate": self.success_rate,
            "deviation": self.deviation,
            "fold_accuracies": list(self.fold_accuracies),
            "confusion": self.confusion.tolist(),
            "classes": list(self.classes),
            "params": dict(self.params),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidParameterError(f"feature matrix must be 2D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError("feature matrix contains non-finite values")
    return X


def pca_fit(X, variance_target: float = 0.95) -> PcaModel:
    """Eigen-decompose the sample covariance and keep the leading components.

    Retains the shortest prefix whose cumulative explained variance reaches
    ``variance_target``. Data without any variance yields one zero-variance
    component.
    """
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InvalidParameterError("PCA needs at least 2 samples")
    if not 0 < variance_target <= 1:
        raise InvalidParameterError(f"variance_target must lie in (0, 1], got {variance_target}")
    mean = X.mean(axis=0)
    centred = X - mean
    cov = centred.T @ centred / (X.shape[0] - 1)
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval, kind="stable")[::-1]
    eigval = np.clip(eigval[order], 0.0, None)
    eigvec = eigvec[:, order].T
    # fix the sign so that refits on the same data are reproducible
    pivot = np.argmax(np.abs(eigvec), axis=1)
    signs = np.sign(eigvec[np.arange(eigvec.shape[0]), pivot])
    eigvec = eigvec * np.where(signs == 0, 1.0, signs)[:, None]

    total = eigval.sum()
    if total <= 0:
        return PcaModel(mean, eigvec[:1], eigval[:1], np.zeros(1))
    ratio = eigval / total
    cumulative = np.cumsum(ratio)
    keep = int(np.searchsorted(cumulative, variance_target - 1e-12)) + 1
    keep = min(keep, eigval.size)
    return PcaModel(mean, eigvec[:keep], eigval[:keep], ratio[:keep])


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = _as_matrix(np.atleast_2d(X))
    if X.shape[1] != model.mean.size:
        raise InvalidParameterError(
            f"feature dimension {X.shape[1]} does not match PCA model ({model.mean.size})"
        )
    return (X - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, scores) -> np.ndarray:
    return np.asarray(scores) @ model.components + model.mean


def lda_fit(X, labels, ridge: float = LDA_RIDGE) -> LdaModel:
    """Gaussian discriminant with one covariance shared by all classes.

    The pooled within-class covariance is regularized with
    ``ridge * trace / dim`` on the diagonal, so a singular estimate never
    fails.
    """
    X = _as_matrix(X)
    labels = np.asarray(labels)
    if labels.shape[0] != X.shape[0]:
        raise InvalidParameterError("labels and feature rows differ in length")
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if classes.size < 2:
        raise InvalidParameterError("LDA needs at least 2 classes")
    if counts.min() < 2:
        raise InvalidParameterError(
            f"class {classes[np.argmin(counts)]!r} has fewer than 2 samples"
        )
    n, dim = X.shape
    means = np.stack([X[inverse == c].mean(axis=0) for c in range(classes.size)])
    within = X - means[inverse]
    cov = within.T @ within / max(n - classes.size, 1)
    cov = 0.5 * (cov + cov.T)
    scale = np.trace(cov) / dim
    if scale <= 0:
        scale = 1.0
    cov = cov + ridge * scale * np.eye(dim)
    priors = counts / n
    coef = np.linalg.solve(cov, means.T).T
    intercept = -0.5 * np.einsum("cd,cd->c", means, coef) + np.log(priors)
    return LdaModel(classes, means, cov, priors, coef, intercept)


def lda_decision(model: LdaModel, X) -> np.ndarray:
    X = _as_matrix(np.atleast_2d(X))
    return X @ model.coef.T + model.intercept


def lda_predict(model: LdaModel, X) -> np.ndarray:
    """Predicted labels; ties go to the lowest class index."""
    return model.classes[np.argmax(lda_decision(model, X), axis=1)]


def stratified_folds(labels, k: int = 10, seed: int = 0) -> list:
    """Split sample indices into ``k`` stratified test folds.

    Each class's indices are shuffled with a seeded generator and dealt
    round-robin; the dealing position carries over between classes so fold
    sizes stay balanced. Classes with fewer than ``k`` samples simply miss
    some folds.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if k < 2 or k > n:
        raise InvalidParameterError(f"k must satisfy 2 <= k <= n_samples ({n}), got {k}")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    position = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        for idx in rng.permutation(members):
            folds[position % k].append(int(idx))
            position += 1
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def fit_pipeline(X, labels, variance_target: float = 0.95, standardize: bool = True):
    """Fit scaling, PCA and LDA on training rows; return a predictor triple."""
    X = _as_matrix(X)
    if standardize:
        loc = X.mean(axis=0)
        spread = X.std(axis=0)
        spread[spread < NEAR_CONSTANT] = 1.0
    else:
        loc = np.zeros(X.shape[1])
        spread = np.ones(X.shape[1])
    scaled = (X - loc) / spread
    pca = pca_fit(scaled, variance_target)
    lda = lda_fit(pca_transform(pca, scaled), labels)
    return (loc, spread), pca, lda


def predict_pipeline(models, X) -> np.ndarray:
    (loc, spread), pca, lda = models
    X = _as_matrix(np.atleast_2d(X))
    return lda_predict(lda, pca_transform(pca, (X - loc) / spread))


def cross_validate(
    X,
    labels,
    k: int = 10,
    seed: int = 0,
    variance_target: float = 0.95,
    standardize: bool = True,
) -> ClassificationReport:
    """Stratified k-fold PCA + LDA evaluation.

    Models are fit on training rows only. ``success_rate`` is the mean fold
    accuracy in percent, ``deviation`` the sample standard deviation of the
    fold accuracies as fractions.
    """
    X = _as_matrix(X)
    labels = np.asarray(labels)
    if labels.shape[0] != X.shape[0]:
        raise InvalidParameterError("labels and feature rows differ in length")
    classes = np.unique(labels)
    if classes.size < 2:
        raise InvalidParameterError("classification needs at least 2 classes")
    folds = stratified_folds(labels, k, seed)
    class_index = {c: i for i, c in enumerate(classes.tolist())}
    confusion = np.zeros((classes.size, classes.size), dtype=np.int64)
    accuracies = []
    models = []
    all_idx = np.arange(X.shape[0])
    for test in folds:
        train = np.setdiff1d(all_idx, test, assume_unique=True)
        fold_model = fit_pipeline(X[train], labels[train], variance_target, standardize)
        models.append(fold_model)
        if test.size == 0:
            continue
        predicted = predict_pipeline(fold_model, X[test])
        truth = labels[test]
        for a, b in zip(truth.tolist(), predicted.tolist()):
            confusion[class_index[a], class_index[b]] += 1
        accuracies.append(float(np.mean(predicted == truth)))
    acc = np.array(accuracies)
    deviation = float(acc.std(ddof=1)) if acc.size > 1 else 0.0
    return ClassificationReport(
        fold_accuracies=accuracies,
        success_rate=float(acc.mean() * 100.0),
        deviation=deviation,
        confusion=confusion,
        classes=[str(c) for c in classes.tolist()],
        params={
            "k": k,
            "seed": seed,
            "pca_variance": variance_target,
            "standardize": standardize,
            "lda_ridge": LDA_RIDGE,
        },
        fold_models=models,
    )
