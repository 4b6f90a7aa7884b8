"""Fuzzy partitioning of telemetry samples.

Three procedures share one interface.  ``fcm_fit`` is the classical
alternating scheme: squared-Euclidean memberships and weighted-mean centers,
iterated until the membership matrix stops moving.  ``probcp_fit`` and
``posscp_fit`` replace the squared distance with a saturating robust distance
(scaled log-cosh per axis) and move centers with small per-sample steps,
``eta * w**beta * tanh((x - c) / beta_i)``, visiting samples in a fixed order
each epoch.  They differ only in the weight rule: probabilistic weights are
normalized across clusters, possibilistic weights compare each distance
against a per-cluster spread estimated online, so a sample can be an outlier
to every cluster at once.

All fits stop when the Frobenius norm of the membership change drops to
``epsilon`` (default 1e-4) or after ``max_iterations`` epochs (default 100).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dataset import FeatureMatrix
from .errors import (
    DegenerateDataError,
    InsufficientDataError,
    InvalidConfigError,
    InvalidDataError,
    ShapeMismatchError,
)

DEFAULT_EPSILON = 1e-4
DEFAULT_MAX_ITERATIONS = 100
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETA = 2.0
SPREAD_FLOOR = 1e-12

_LN2 = math.log(2.0)


def _as_values(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        values = data.values
    else:
        values = np.asarray(data, dtype=float)
    if values.ndim != 2:
        raise InvalidDataError("expected a 2-D sample matrix, got ndim=%d" % values.ndim)
    if values.size and not np.isfinite(values).all():
        raise InvalidDataError("sample matrix contains NaN or infinite entries")
    return np.ascontiguousarray(values, dtype=float)


def _as_scales(beta_i, n_features: int) -> np.ndarray:
    scales = np.asarray(beta_i, dtype=float)
    if scales.ndim == 0:
        scales = np.full(n_features, float(scales))
    if scales.shape != (n_features,):
        raise ShapeMismatchError(
            "per-axis scale vector has shape %s, expected (%d,)" % (scales.shape, n_features)
        )
    if not np.isfinite(scales).all() or (scales <= 0).any():
        raise InvalidConfigError("per-axis scales must be finite and positive")
    return np.ascontiguousarray(scales)


def robust_distance(x, c, beta_i=1.0) -> float:
    """Saturating distance sum_i beta_i * log(cosh((x_i - c_i) / beta_i)).

    Near the center it behaves like half the squared distance; far away it
    grows only linearly, so single extreme samples cannot dominate a fit.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.shape != c.shape:
        raise ShapeMismatchError("point and center shapes differ: %s vs %s" % (x.shape, c.shape))
    if x.ndim != 1:
        raise InvalidDataError("robust_distance expects 1-D vectors")
    scales = _as_scales(beta_i, x.shape[0])
    t = np.abs((x - c) / scales)
    return float(np.sum(scales * (t + np.log1p(np.exp(-2.0 * t)) - _LN2)))


def robust_distance_matrix(X, centers, beta_i=1.0) -> np.ndarray:
    """Robust distances from every row of ``X`` to every center, shape (n, m)."""
    X = _as_values(X)
    centers = np.ascontiguousarray(np.asarray(centers, dtype=float))
    if centers.ndim != 2 or centers.shape[1] != X.shape[1]:
        raise ShapeMismatchError(
            "centers have shape %s, expected (m, %d)" % (centers.shape, X.shape[1])
        )
    scales = _as_scales(beta_i, X.shape[1])
    return _kernels.robust_distance_matrix(X, centers, scales)


def squared_distance_matrix(X, centers) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    centers = np.asarray(centers, dtype=float)
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("kji,kji->kj", diff, diff)


def initial_centers(X, n_clusters: int, seed) -> np.ndarray:
    """Pick ``n_clusters`` distinct data points uniformly at random.

    Duplicate rows are collapsed first so two centers can never start on the
    same point; fewer distinct rows than clusters is an error.
    """
    X = _as_values(X)
    if n_clusters < 1:
        raise InvalidConfigError("n_clusters must be >= 1, got %d" % n_clusters)
    _, first_seen = np.unique(X, axis=0, return_index=True)
    distinct = X[np.sort(first_seen)]
    if distinct.shape[0] < n_clusters:
        raise DegenerateDataError(
            "need %d distinct samples for %d clusters, found %d"
            % (n_clusters, n_clusters, distinct.shape[0])
        )
    rng = np.random.default_rng(seed)
    idx = rng.choice(distinct.shape[0], size=n_clusters, replace=False)
    return np.ascontiguousarray(distinct[idx])


def fcm_memberships(X, centers) -> np.ndarray:
    """Membership weights from inverse squared distances, rows sum to one.

    A sample lying exactly on a center gets full weight there (first such
    center wins) and zero elsewhere.
    """
    X = np.asarray(X, dtype=float)
    d2 = squared_distance_matrix(X, centers)
    W = np.empty_like(d2)
    on_center = d2 == 0.0
    hit = on_center.any(axis=1)
    if hit.any():
        W[hit] = 0.0
        rows = np.nonzero(hit)[0]
        W[rows, np.argmax(on_center[rows], axis=1)] = 1.0
    rest = ~hit
    if rest.any():
        inv = 1.0 / d2[rest]
        W[rest] = inv / inv.sum(axis=1, keepdims=True)
    return W


def probcp_memberships(X, centers, beta=DEFAULT_BETA, beta_i=1.0) -> np.ndarray:
    """Probabilistic weights D**(1/(1-beta)) normalized across clusters."""
    D = robust_distance_matrix(X, centers, beta_i)
    W = np.empty_like(D)
    on_center = D == 0.0
    hit = on_center.any(axis=1)
    if hit.any():
        W[hit] = 0.0
        rows = np.nonzero(hit)[0]
        W[rows, np.argmax(on_center[rows], axis=1)] = 1.0
    rest = ~hit
    if rest.any():
        u = D[rest] ** (1.0 / (1.0 - beta))
        W[rest] = u / u.sum(axis=1, keepdims=True)
    return W


def _spread_weights(D, spread, beta) -> np.ndarray:
    """Possibilistic weight table from a precomputed distance matrix."""
    W = np.empty_like(D)
    zero = D == 0.0
    W[zero] = 1.0
    nz = ~zero
    W[nz] = 1.0 / (1.0 + (D[nz] / np.broadcast_to(spread, D.shape)[nz]) ** (1.0 / (beta - 1.0)))
    return W


def posscp_memberships(X, centers, spread, beta=DEFAULT_BETA, beta_i=1.0) -> np.ndarray:
    """Possibilistic weights 1 / (1 + (D/spread)**(1/(beta-1))), unnormalized.

    Each column is independent: the weight is 1 on the center, 1/2 where the
    distance equals the cluster spread, and falls toward 0 beyond it.
    """
    D = robust_distance_matrix(X, centers, beta_i)
    spread = np.asarray(spread, dtype=float)
    if spread.shape != (D.shape[1],):
        raise ShapeMismatchError(
            "spread has shape %s, expected (%d,)" % (spread.shape, D.shape[1])
        )
    if (spread <= 0).any():
        raise InvalidConfigError("cluster spreads must be positive")
    return _spread_weights(D, spread, beta)


@dataclass
class TrainingTrace:
    """Per-iteration objective values and membership deltas for one fit."""

    errors: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


@dataclass
class ClusterModel:
    """Fitted centers plus everything needed to reproduce memberships."""

    algorithm: str
    centers: np.ndarray
    beta: float = DEFAULT_BETA
    beta_i: np.ndarray | None = None
    learning_rate: float | None = None
    epsilon: float = DEFAULT_EPSILON
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    spread: np.ndarray | None = None
    spread_floored: bool = False

    @property
    def n_clusters(self) -> int:
        return self.centers.shape[0]

    @property
    def n_features(self) -> int:
        return self.centers.shape[1]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "centers": self.centers.tolist(),
            "beta": self.beta,
            "beta_i": None if self.beta_i is None else self.beta_i.tolist(),
            "learning_rate": self.learning_rate,
            "epsilon": self.epsilon,
            "max_iterations": self.max_iterations,
            "spread": None if self.spread is None else self.spread.tolist(),
            "spread_floored": self.spread_floored,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ClusterModel":
        return cls(
            algorithm=payload["algorithm"],
            centers=np.asarray(payload["centers"], dtype=float),
            beta=float(payload["beta"]),
            beta_i=None if payload.get("beta_i") is None else np.asarray(payload["beta_i"], dtype=float),
            learning_rate=payload.get("learning_rate"),
            epsilon=float(payload.get("epsilon", DEFAULT_EPSILON)),
            max_iterations=int(payload.get("max_iterations", DEFAULT_MAX_ITERATIONS)),
            spread=None if payload.get("spread") is None else np.asarray(payload["spread"], dtype=float),
            spread_floored=bool(payload.get("spread_floored", False)),
        )

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "ClusterModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def memberships(model: ClusterModel, X) -> np.ndarray:
    """Membership weights of new samples under a fitted model."""
    X = _as_values(X)
    if X.shape[1] != model.n_features:
        raise ShapeMismatchError(
            "samples have %d features, model expects %d" % (X.shape[1], model.n_features)
        )
    if X.shape[0] == 0:
        return np.empty((0, model.n_clusters))
    if model.algorithm == "fcm":
        return fcm_memberships(X, model.centers)
    if model.algorithm == "probcp":
        return probcp_memberships(X, model.centers, model.beta, model.beta_i)
    if model.algorithm == "posscp":
        return posscp_memberships(X, model.centers, model.spread, model.beta, model.beta_i)
    raise InvalidConfigError("unknown clustering algorithm %r" % model.algorithm)


def objective(model: ClusterModel, X, W=None) -> float:
    """Weighted-distance objective J = sum_k sum_j w**beta * dist(x_k, c_j)."""
    X = _as_values(X)
    if W is None:
        W = memberships(model, X)
    if model.algorithm == "fcm":
        D = squared_distance_matrix(X, model.centers)
    else:
        D = robust_distance_matrix(X, model.centers, model.beta_i)
    return float(np.sum(W**model.beta * D))


def _check_common(X, n_clusters, epsilon, max_iterations):
    if n_clusters < 2:
        raise InvalidConfigError("n_clusters must be >= 2, got %d" % n_clusters)
    if X.shape[0] <= n_clusters:
        raise InsufficientDataError(
            "need more samples than clusters, got %d samples for %d clusters"
            % (X.shape[0], n_clusters)
        )
    if epsilon <= 0:
        raise InvalidConfigError("epsilon must be positive, got %g" % epsilon)
    if max_iterations < 1:
        raise InvalidConfigError("max_iterations must be >= 1, got %d" % max_iterations)


def fcm_fit(
    data,
    n_clusters: int = 2,
    seed=0,
    beta: float = DEFAULT_BETA,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
):
    """Alternating fuzzy c-means fit.

    Returns ``(model, memberships, trace)`` where memberships are the final
    weights of the training samples.
    """
    if beta <= 1.0:
        raise InvalidConfigError("beta must exceed 1, got %g" % beta)
    X = _as_values(data)
    _check_common(X, n_clusters, epsilon, max_iterations)
    centers = initial_centers(X, n_clusters, seed)
    W = fcm_memberships(X, centers)
    trace = TrainingTrace()
    for _ in range(max_iterations):
        Wb = W**beta
        mass = Wb.sum(axis=0)
        new_centers = centers.copy()
        occupied = mass > 0.0
        new_centers[occupied] = (Wb.T[occupied] @ X) / mass[occupied, None]
        W_next = fcm_memberships(X, new_centers)
        delta = float(np.linalg.norm(W_next - W))
        centers, W = new_centers, W_next
        trace.iterations += 1
        trace.deltas.append(delta)
        trace.errors.append(float(np.sum(W**beta * squared_distance_matrix(X, centers))))
        if delta <= epsilon:
            trace.converged = True
            break
    model = ClusterModel(
        algorithm="fcm",
        centers=centers,
        beta=beta,
        epsilon=epsilon,
        max_iterations=max_iterations,
    )
    return model, W, trace


def probcp_fit(
    data,
    n_clusters: int = 2,
    seed=0,
    beta: float = DEFAULT_BETA,
    beta_i=1.0,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
):
    """Robust competitive fit with normalized (probabilistic) weights."""
    if beta <= 1.0:
        raise InvalidConfigError("beta must exceed 1, got %g" % beta)
    if learning_rate <= 0:
        raise InvalidConfigError("learning_rate must be positive, got %g" % learning_rate)
    X = _as_values(data)
    _check_common(X, n_clusters, epsilon, max_iterations)
    scales = _as_scales(beta_i, X.shape[1])
    centers = initial_centers(X, n_clusters, seed)
    W = probcp_memberships(X, centers, beta, scales)
    trace = TrainingTrace()
    for _ in range(max_iterations):
        _kernels.probcp_epoch(X, centers, scales, beta, learning_rate)
        W_next = probcp_memberships(X, centers, beta, scales)
        delta = float(np.linalg.norm(W_next - W))
        W = W_next
        trace.iterations += 1
        trace.deltas.append(delta)
        trace.errors.append(
            float(np.sum(W**beta * _kernels.robust_distance_matrix(X, centers, scales)))
        )
        if delta <= epsilon:
            trace.converged = True
            break
    model = ClusterModel(
        algorithm="probcp",
        centers=centers,
        beta=beta,
        beta_i=scales,
        learning_rate=learning_rate,
        epsilon=epsilon,
        max_iterations=max_iterations,
    )
    return model, W, trace


def posscp_fit(
    data,
    n_clusters: int = 2,
    seed=0,
    beta: float = DEFAULT_BETA,
    beta_i=1.0,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epsilon: float = DEFAULT_EPSILON,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
):
    """Robust competitive fit with spread-scaled (possibilistic) weights.

    Because possibilistic weights carry no cross-cluster competition, centers
    started on raw data points routinely fall into the same basin and merge.
    The fit therefore warm-starts from the converged normalized-weight
    procedure (same data, same seed) and refines those centers
    possibilistically.  Per-cluster spreads start from a provisional
    normalized-weight pass over the warm-start centers; after each epoch the
    spread is recomputed as the weight**beta-weighted mean of the robust
    distances over the whole dataset.  A spread collapsing to zero is floored
    at a tiny positive value and flagged on the model.
    """
    if beta <= 1.0:
        raise InvalidConfigError("beta must exceed 1, got %g" % beta)
    if learning_rate <= 0:
        raise InvalidConfigError("learning_rate must be positive, got %g" % learning_rate)
    X = _as_values(data)
    _check_common(X, n_clusters, epsilon, max_iterations)
    scales = _as_scales(beta_i, X.shape[1])
    warm, _, _ = probcp_fit(
        X,
        n_clusters=n_clusters,
        seed=seed,
        beta=beta,
        beta_i=scales,
        learning_rate=learning_rate,
        epsilon=epsilon,
        max_iterations=max_iterations,
    )
    centers = np.ascontiguousarray(warm.centers)

    def _spread_from(D, W):
        Wb = W**beta
        num = (Wb * D).sum(axis=0)
        den = Wb.sum(axis=0)
        with np.errstate(invalid="ignore"):
            out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), SPREAD_FLOOR)
        floored = bool((out < SPREAD_FLOOR).any())
        return np.ascontiguousarray(np.maximum(out, SPREAD_FLOOR)), floored

    D = _kernels.robust_distance_matrix(X, centers, scales)
    spread, spread_floored = _spread_from(D, probcp_memberships(X, centers, beta, scales))
    W = _spread_weights(D, spread, beta)
    trace = TrainingTrace()
    for _ in range(max_iterations):
        _kernels.posscp_epoch(X, centers, spread, scales, beta, learning_rate)
        D = _kernels.robust_distance_matrix(X, centers, scales)
        spread, floored = _spread_from(D, _spread_weights(D, spread, beta))
        spread_floored = spread_floored or floored
        W_next = _spread_weights(D, spread, beta)
        delta = float(np.linalg.norm(W_next - W))
        W = W_next
        trace.iterations += 1
        trace.deltas.append(delta)
        trace.errors.append(float(np.sum(W**beta * D)))
        if delta <= epsilon:
            trace.converged = True
            break
    model = ClusterModel(
        algorithm="posscp",
        centers=centers,
        beta=beta,
        beta_i=scales,
        learning_rate=learning_rate,
        epsilon=epsilon,
        max_iterations=max_iterations,
        spread=spread,
        spread_floored=spread_floored,
    )
    return model, W, trace


_FITTERS = {"fcm": fcm_fit, "probcp": probcp_fit, "posscp": posscp_fit}


def fit(algorithm: str, data, n_clusters: int = 2, seed=0, **options):
    """Dispatch to one of the fitting procedures by name."""
    try:
        fitter = _FITTERS[algorithm]
    except KeyError:
        raise InvalidConfigError("unknown clustering algorithm %r" % algorithm) from None
    return fitter(data, n_clusters=n_clusters, seed=seed, **options)


def predict(model: ClusterModel, data) -> np.ndarray:
    """Membership weights for new samples, centers held fixed.

    Evaluating the weight formula of a converged model on its own training
    data reproduces the final training memberships.
    """
    return memberships(model, data)


@dataclass
class AggregateResult:
    """Mean/std of per-sample training and held-out error over repeated fits."""

    algorithm: str
    runs: int
    train_errors: list
    test_errors: list

    @property
    def train_mean(self) -> float:
        return float(np.mean(self.train_errors))

    @property
    def train_std(self) -> float:
        return float(np.std(self.train_errors))

    @property
    def test_mean(self) -> float:
        return float(np.mean(self.test_errors))

    @property
    def test_std(self) -> float:
        return float(np.std(self.test_errors))


def fit_averaged(
    algorithm: str,
    data,
    n_clusters: int = 2,
    runs: int = 25,
    seed=0,
    test_fraction: float = 0.3,
    **options,
) -> AggregateResult:
    """Repeat a fit with distinct seeds and aggregate the objective.

    Each run draws its own train/held-out split and fit seed from ``seed``;
    errors are the per-sample weighted-distance objective so that splits of
    different sizes stay comparable.
    """
    if runs < 1:
        raise InvalidConfigError("runs must be >= 1, got %d" % runs)
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfigError("test_fraction must lie in (0, 1), got %g" % test_fraction)
    X = _as_values(data)
    train_errors, test_errors = [], []
    for run in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), run]))
        order = rng.permutation(X.shape[0])
        n_test = max(1, int(round(test_fraction * X.shape[0])))
        test_idx, train_idx = order[:n_test], order[n_test:]
        model, W, _ = fit(algorithm, X[train_idx], n_clusters=n_clusters, seed=(seed, run), **options)
        train_errors.append(objective(model, X[train_idx], W) / train_idx.size)
        test_errors.append(objective(model, X[test_idx]) / test_idx.size)
    return AggregateResult(
        algorithm=algorithm, runs=runs, train_errors=train_errors, test_errors=test_errors
    )
