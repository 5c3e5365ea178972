"""PLS regression and supporting chemometrics.

Single-response NIPALS PLS with X-deflation (Wold et al. 2001), k-fold
cross-validated component selection, VIP scores, PCA, per-band Pearson
correlation, and the R^2/RMSE evaluation metrics.

For one response NIPALS needs no inner iteration: each component is
w = X'y / |X'y|, t = Xw, followed by deflation of X. The rotated weights
R = W (P'W)^-1 are accumulated during the fit, which makes coefficients
for *every* intermediate component count available from a single fit --
cross-validation over k and the coefficient-driven resampling in CARS
both rely on that path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DataError, ValidationError


@dataclass(frozen=True)
class DataMatrix:
    """Samples x variables with unique column labels (source tag + nm)."""

    values: np.ndarray
    columns: tuple
    ids: Optional[tuple] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(self.ids))
        if v.ndim != 2:
            raise ValidationError("DataMatrix values must be 2-D")
        if v.shape[0] < 2:
            raise ValidationError("DataMatrix needs at least 2 rows")
        if v.shape[1] != len(self.columns):
            raise ValidationError(
                f"{v.shape[1]} columns but {len(self.columns)} labels"
            )
        if len(set(self.columns)) != len(self.columns):
            raise ValidationError("column labels must be unique")
        if self.ids is not None and len(self.ids) != v.shape[0]:
            raise ValidationError("ids length must match row count")
        if not np.all(np.isfinite(v)):
            raise DataError("DataMatrix contains non-finite values")
        v.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def take_rows(self, indices) -> "DataMatrix":
        idx = np.asarray(indices, dtype=int)
        ids = tuple(self.ids[i] for i in idx) if self.ids is not None else None
        return DataMatrix(self.values[idx], self.columns, ids)

    def take_columns(self, indices) -> "DataMatrix":
        idx = np.asarray(indices, dtype=int)
        return DataMatrix(self.values[:, idx], tuple(self.columns[i] for i in idx), self.ids)


def hstack_matrices(blocks: Sequence[DataMatrix]) -> DataMatrix:
    """Concatenate matrices column-wise; rows (and ids, if set) must align."""
    if not blocks:
        raise ValidationError("nothing to concatenate")
    ids = blocks[0].ids
    for b in blocks[1:]:
        if b.n_rows != blocks[0].n_rows:
            raise ValidationError("blocks disagree on row count")
        if ids is not None and b.ids is not None and b.ids != ids:
            raise DataError("blocks disagree on sample ordering")
    values = np.hstack([b.values for b in blocks])
    columns = tuple(c for b in blocks for c in b.columns)
    return DataMatrix(values, columns, ids)


@dataclass(frozen=True)
class DatasetSplit:
    """Train/test index partition from one seeded shuffle."""

    train_indices: tuple
    test_indices: tuple
    seed: int

    def __post_init__(self):
        train, test = set(self.train_indices), set(self.test_indices)
        if train & test:
            raise ValidationError("train and test indices overlap")
        n = len(self.train_indices) + len(self.test_indices)
        if train | test != set(range(n)):
            raise ValidationError("split does not cover 0..n-1 exactly")


def split(n: int, frac: float = 2.0 / 3.0, seed: int = 0) -> DatasetSplit:
    """Random train/test split: first ``round(frac*n)`` of a permutation."""
    if n < 3:
        raise ValidationError(f"need at least 3 samples to split, got {n}")
    if not 0.0 < frac < 1.0:
        raise ValidationError(f"split fraction must be in (0, 1), got {frac}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(frac * n))
    return DatasetSplit(
        train_indices=tuple(int(i) for i in perm[:n_train]),
        test_indices=tuple(int(i) for i in perm[n_train:]),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# PLS1 core on raw arrays (shared by the model API, CV, and CARS)
# ---------------------------------------------------------------------------

class _Pls1Core(NamedTuple):
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    weights: np.ndarray      # p x k, unit columns
    x_loadings: np.ndarray   # p x k
    rotations: np.ndarray    # p x k, R = W (P'W)^-1
    y_loadings: np.ndarray   # k
    score_ss: np.ndarray     # k, t_a' t_a
    k_eff: int

    def coefficient_path(self) -> np.ndarray:
        """p x k_eff cumulative coefficients (scaled space) for k = 1..k_eff."""
        k = self.k_eff
        return np.cumsum(self.rotations[:, :k] * self.y_loadings[None, :k], axis=1)


def _pls1_core(values: np.ndarray, y: np.ndarray, k: int, scale: bool) -> _Pls1Core:
    n, p = values.shape
    x_mean = values.mean(axis=0)
    if scale:
        x_scale = values.std(axis=0, ddof=1)
        x_scale = np.where(x_scale > 0, x_scale, 1.0)  # keep zero-variance columns
    else:
        x_scale = np.ones(p)
    y_mean = float(y.mean())
    y_sd = float(y.std(ddof=1)) if n > 1 else 0.0
    y_scale = y_sd if y_sd > 0 else 1.0

    Xs = (values - x_mean) / x_scale
    ys = (y - y_mean) / y_scale

    W = np.zeros((p, k))
    P = np.zeros((p, k))
    R = np.zeros((p, k))
    q = np.zeros(k)
    t_ss = np.zeros(k)

    k_eff = 0
    for a in range(k):
        w = Xs.T @ ys
        w_norm = np.linalg.norm(w)
        if w_norm <= 1e-12:
            break   # X deflated to rank 0 or y orthogonal to what is left
        w /= w_norm
        t = Xs @ w
        tt = float(t @ t)
        if tt <= np.finfo(float).tiny:
            break
        pa = Xs.T @ t / tt
        qa = float(ys @ t / tt)
        Xs -= np.outer(t, pa)

        r = w if a == 0 else w - R[:, :a] @ (P[:, :a].T @ w)
        W[:, a], P[:, a], R[:, a] = w, pa, r
        q[a], t_ss[a] = qa, tt
        k_eff = a + 1

    return _Pls1Core(x_mean, x_scale, y_mean, y_scale, W, P, R, q, t_ss, k_eff)


def _fold_assignment(n: int, folds: int, seed: int):
    """Seeded shuffle into ``folds`` contiguous blocks, remainder spread 1/fold."""
    perm = np.random.default_rng(seed).permutation(n)
    sizes = np.full(folds, n // folds)
    sizes[: n % folds] += 1
    out = []
    start = 0
    for s in sizes:
        out.append(perm[start:start + s])
        start += s
    return out


def rmsecv_curve(
    values: np.ndarray,
    y: np.ndarray,
    k_max: int,
    folds: int,
    seed: int,
    scale: bool = True,
) -> np.ndarray:
    """RMSECV for every component count 1..k from seeded k-fold CV.

    k is capped at what the smallest training fold supports. Array-level
    kernel shared by :func:`select_components` and the CARS selector.
    """
    n = values.shape[0]
    if folds > n:
        raise ValidationError(f"{folds} folds for {n} samples")
    if folds < 2:
        raise ValidationError("need at least 2 folds")
    assignment = _fold_assignment(n, folds, seed)
    min_train = n - max(len(f) for f in assignment)
    k_fit = min(k_max, min_train - 1, values.shape[1])
    if k_fit < 1:
        raise ValidationError("not enough samples per fold to fit any component")

    sse = np.zeros(k_fit)
    for val_idx in assignment:
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        core = _pls1_core(values[mask], y[mask], k_fit, scale)
        if core.k_eff == 0:
            sse += float(((core.y_mean - y[val_idx]) ** 2).sum())
            continue
        xs = (values[val_idx] - core.x_mean) / core.x_scale
        path = core.coefficient_path()
        preds = core.y_mean + core.y_scale * (xs @ path)     # n_val x k_eff
        resid = preds - y[val_idx][:, None]
        sse[: core.k_eff] += (resid ** 2).sum(axis=0)
        if core.k_eff < k_fit:
            # components beyond the deflated rank predict like the last one
            sse[core.k_eff:] += float((resid[:, -1] ** 2).sum())
    return np.sqrt(sse / n)


# ---------------------------------------------------------------------------
# Model API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlsrModel:
    """Fitted PLS1 model: latent structure plus folded-back coefficients.

    ``weights`` (W), ``x_loadings`` (P) and ``rotations`` (R) are p x k in
    autoscaled space; ``y_loadings`` (q) and ``score_ss`` (t't per
    component) complete the latent path. ``coefficients``/``intercept``
    are in original units. ``n_components_effective`` < n_components when
    X ran out of rank during deflation.
    """

    n_components: int
    columns: tuple
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    weights: np.ndarray
    x_loadings: np.ndarray
    rotations: np.ndarray
    y_loadings: np.ndarray
    score_ss: np.ndarray
    coefficients: np.ndarray
    intercept: float
    n_components_effective: int

    def scaled_coefficient_path(self) -> np.ndarray:
        """p x k_eff coefficients in scaled space after 1..k_eff components."""
        k = self.n_components_effective
        return np.cumsum(self.rotations[:, :k] * self.y_loadings[None, :k], axis=1)

    def _check_columns(self, X: DataMatrix):
        if X.columns != self.columns:
            raise ValidationError("prediction columns do not match training columns")

    def predict(self, X: DataMatrix) -> np.ndarray:
        """Predictions in original units via the folded-back coefficients."""
        self._check_columns(X)
        return self.intercept + X.values @ self.coefficients

    def transform(self, X: DataMatrix) -> np.ndarray:
        """Latent scores of new data, via sequential deflation by P."""
        self._check_columns(X)
        xs = (X.values - self.x_mean) / self.x_scale
        k = self.n_components_effective
        scores = np.empty((xs.shape[0], k))
        for a in range(k):
            t = xs @ self.weights[:, a]
            scores[:, a] = t
            xs = xs - np.outer(t, self.x_loadings[:, a])
        return scores

    def predict_via_scores(self, X: DataMatrix) -> np.ndarray:
        """Predictions through the latent path; must agree with ``predict``."""
        k = self.n_components_effective
        yhat_scaled = self.transform(X) @ self.y_loadings[:k]
        return self.y_mean + self.y_scale * yhat_scaled


def fit_plsr(X: DataMatrix, y, k: int, scale: bool = True) -> PlsrModel:
    """Fit a k-component PLS1 model of y on X.

    Predictors are centred and (by default) autoscaled; zero-variance
    columns are retained with scale 1 and end up with zero coefficients,
    preserving column indexing for band bookkeeping.
    """
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.values.shape
    if y.size != n:
        raise ValidationError(f"y has {y.size} entries for {n} rows")
    if not np.all(np.isfinite(y)):
        raise DataError("y contains non-finite values")
    if not 1 <= k <= min(n - 1, p):
        raise ValidationError(f"k = {k} outside [1, min(rows-1, cols)] = "
                              f"[1, {min(n - 1, p)}]")

    core = _pls1_core(X.values, y, k, scale)
    k_eff = core.k_eff
    b_scaled = core.coefficient_path()[:, -1] if k_eff else np.zeros(p)
    coefficients = b_scaled * (core.y_scale / core.x_scale)
    intercept = core.y_mean - float(core.x_mean @ coefficients)

    return PlsrModel(
        n_components=k,
        columns=X.columns,
        x_mean=core.x_mean,
        x_scale=core.x_scale,
        y_mean=core.y_mean,
        y_scale=core.y_scale,
        weights=core.weights,
        x_loadings=core.x_loadings,
        rotations=core.rotations,
        y_loadings=core.y_loadings,
        score_ss=core.score_ss,
        coefficients=coefficients,
        intercept=intercept,
        n_components_effective=k_eff,
    )


def predict(model: PlsrModel, X: DataMatrix) -> np.ndarray:
    return model.predict(X)


@dataclass(frozen=True)
class CvReport:
    """RMSECV per component count from one seeded k-fold pass."""

    rmsecv: tuple
    k_best: int
    folds: int
    seed: int


def select_components(
    X: DataMatrix,
    y,
    k_max: int,
    folds: int = 10,
    seed: int = 0,
    scale: bool = True,
    tolerance: float = 0.02,
):
    """Pick the component count by k-fold RMSECV.

    Returns ``(k_best, CvReport)`` where k_best is the smallest k whose
    RMSECV is within ``tolerance`` (relative) of the minimum -- a
    parsimony rule against overfitting.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.n_rows:
        raise ValidationError("y length must match row count")
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    rmsecv = rmsecv_curve(X.values, y, k_max, folds, seed, scale)
    threshold = rmsecv.min() * (1.0 + tolerance)
    k_best = int(np.argmax(rmsecv <= threshold)) + 1
    return k_best, CvReport(
        rmsecv=tuple(float(v) for v in rmsecv), k_best=k_best, folds=folds, seed=seed
    )


def vip(model: PlsrModel) -> np.ndarray:
    """Variable importance in projection.

    VIP_j = sqrt(p * sum_a ssy_a w_aj^2 / sum_a ssy_a) with unit-norm
    weights; ssy_a = q_a^2 t_a't_a is the y-variance captured by component
    a. The squared scores average to exactly 1 over variables.
    """
    k = model.n_components_effective
    p = len(model.columns)
    if k == 0:
        return np.zeros(p)
    ssy = model.y_loadings[:k] ** 2 * model.score_ss[:k]
    total = ssy.sum()
    if total <= 0:
        return np.zeros(p)
    contrib = (model.weights[:, :k] ** 2) @ ssy
    return np.sqrt(p * contrib / total)


def r2(y, yhat) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size == 0 or y.size != yhat.size:
        raise ValidationError("r2 needs equal, nonzero-length inputs")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise DataError("r2 undefined: observed values have zero variance")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def rmse(y, yhat) -> float:
    """Root mean square error."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size == 0 or y.size != yhat.size:
        raise ValidationError("rmse needs equal, nonzero-length inputs")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


@dataclass(frozen=True)
class PcaResult:
    scores: np.ndarray              # n x k
    loadings: np.ndarray            # p x k, orthonormal columns
    explained_variance: np.ndarray  # k, descending


def pca(X: DataMatrix, k: int) -> PcaResult:
    """PCA of the centred matrix via SVD, components by descending variance.

    Loading signs are fixed so each component's largest-magnitude loading
    is positive, keeping output deterministic.
    """
    n, p = X.values.shape
    if not 1 <= k <= min(n - 1, p):
        raise ValidationError(f"k = {k} outside [1, min(rows-1, cols)] = "
                              f"[1, {min(n - 1, p)}]")
    xc = X.values - X.values.mean(axis=0)
    u, s, vt = np.linalg.svd(xc, full_matrices=False)
    flip = np.sign(vt[np.arange(vt.shape[0]), np.abs(vt).argmax(axis=1)])
    flip = np.where(flip == 0, 1.0, flip)
    vt = vt * flip[:, None]
    u = u * flip[None, :]
    return PcaResult(
        scores=(u[:, :k] * s[:k]),
        loadings=vt[:k].T,
        explained_variance=s[:k] ** 2 / (n - 1),
    )


def band_correlation(X: DataMatrix, y) -> np.ndarray:
    """Pearson correlation of each column with y; zero-variance gives 0."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.n_rows:
        raise ValidationError("y length must match row count")
    xc = X.values - X.values.mean(axis=0)
    yc = y - y.mean()
    x_ss = np.sqrt((xc ** 2).sum(axis=0))
    y_ss = float(np.sqrt((yc ** 2).sum()))
    if y_ss == 0:
        return np.zeros(X.n_cols)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = (xc.T @ yc) / (x_ss * y_ss)
    return np.where(x_ss > 0, corr, 0.0)
