"""Reference clusterers the framework is measured against.

Three stock algorithms — Lloyd's K-Means, bottom-up agglomerative linkage,
and BIRCH with a clustering-feature tree — fitted on the same standardized
telemetry and scored with the same hardened-assignment / best-train-naming
protocol as the fuzzy procedures.  All three are deterministic given their
parameters and seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, preprocess
from .clustering import initial_centers, squared_distance_matrix
from .errors import (
    InsufficientDataError,
    InvalidConfigError,
    ShapeMismatchError,
)
from .evaluation import evaluate_assignments, stratified_split

KMEANS_MAX_ITERATIONS = 300
BIRCH_THRESHOLD = 0.5
BIRCH_BRANCHING = 50
_LINKAGE_CODES = {"single": 0, "complete": 1, "average": 2}


def _as_values(data) -> np.ndarray:
    values = data.values if hasattr(data, "values") else data
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeMismatchError("expected a 2-D sample matrix, got ndim=%d" % values.ndim)
    return values


@dataclass
class BaselineModel:
    """Fitted reference clusterer: assignment centers plus fit artifacts."""

    kind: str  # "kmeans" | "agglomerative" | "birch"
    centers: np.ndarray  # (k, d); new samples go to the nearest center
    parameters: dict = field(default_factory=dict)
    objective_trace: list | None = None  # kmeans: within-cluster SS per iteration
    merges: np.ndarray | None = None  # agglomerative: (n-1, 3) sorted merge history
    subcluster_counts: np.ndarray | None = None  # birch: leaf entry sizes
    subcluster_centroids: np.ndarray | None = None  # birch: leaf entry centroids
    subcluster_radii: np.ndarray | None = None  # birch: leaf entry radii

    @property
    def n_clusters(self) -> int:
        return self.centers.shape[0]

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "kind": self.kind,
            "centers": self.centers.tolist(),
            "parameters": dict(self.parameters),
            "objective_trace": None if self.objective_trace is None else list(self.objective_trace),
            "merges": arr(self.merges),
            "subcluster_counts": arr(self.subcluster_counts),
            "subcluster_centroids": arr(self.subcluster_centroids),
            "subcluster_radii": arr(self.subcluster_radii),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "BaselineModel":
        def arr(key):
            v = payload.get(key)
            return None if v is None else np.asarray(v, dtype=float)

        return cls(
            kind=payload["kind"],
            centers=np.asarray(payload["centers"], dtype=float),
            parameters=dict(payload.get("parameters", {})),
            objective_trace=payload.get("objective_trace"),
            merges=arr("merges"),
            subcluster_counts=arr("subcluster_counts"),
            subcluster_centroids=arr("subcluster_centroids"),
            subcluster_radii=arr("subcluster_radii"),
        )

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "BaselineModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def assign(model: BaselineModel, data) -> np.ndarray:
    """Hard assignment of samples to the nearest model center."""
    X = _as_values(data)
    if X.shape[1] != model.centers.shape[1]:
        raise ShapeMismatchError(
            "samples have %d features, model expects %d" % (X.shape[1], model.centers.shape[1])
        )
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return squared_distance_matrix(X, model.centers).argmin(axis=1)


# ---------------------------------------------------------------------------
# K-Means


def kmeans_fit(data, k: int = 2, seed=0, max_iterations: int = KMEANS_MAX_ITERATIONS) -> BaselineModel:
    """Lloyd's iterations from seeded data-point centers to an assignment fixpoint.

    An empty cluster is reseeded from the point currently farthest from its
    own center, which keeps every center occupied without extra randomness.
    """
    if k < 2:
        raise InvalidConfigError("k must be >= 2, got %d" % k)
    X = _as_values(data)
    if X.shape[0] < k:
        raise InsufficientDataError("need at least k=%d samples, got %d" % (k, X.shape[0]))
    centers = initial_centers(X, k, seed)
    previous = None
    trace = []
    for _ in range(max_iterations):
        d2 = squared_distance_matrix(X, centers)
        labels = d2.argmin(axis=1)
        own = d2[np.arange(X.shape[0]), labels].copy()
        for j in range(k):
            if not (labels == j).any():
                far = int(own.argmax())
                centers[j] = X[far]
                labels[far] = j
                own[far] = 0.0
        trace.append(float(np.sum((X - centers[labels]) ** 2)))
        if previous is not None and np.array_equal(labels, previous):
            break
        previous = labels
        for j in range(k):
            centers[j] = X[labels == j].mean(axis=0)
    return BaselineModel(
        kind="kmeans",
        centers=centers,
        parameters={"k": k, "seed": int(seed), "max_iterations": max_iterations},
        objective_trace=trace,
    )


# ---------------------------------------------------------------------------
# Agglomerative linkage


def _pairwise_distances(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.clip(d2, 0.0, None, out=d2)
    return np.sqrt(d2)


def _cut_at(merges: np.ndarray, n: int, k: int) -> np.ndarray:
    """Labels for a k-cluster cut: apply the n-k cheapest merges."""
    # representative leaf of every cluster id in creation order
    rep = np.empty(n + merges.shape[0], dtype=np.int64)
    rep[:n] = np.arange(n)
    for t in range(merges.shape[0]):
        rep[n + t] = rep[int(merges[t, 0])]
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(merges[:, 2], kind="stable")
    for t in order[: n - k]:
        a = find(rep[int(merges[t, 0])])
        b = find(rep[int(merges[t, 1])])
        parent[max(a, b)] = min(a, b)
    roots = np.array([find(i) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    # renumber so cluster ids appear in first-sample order
    seen: dict[int, int] = {}
    out = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab not in seen:
            seen[lab] = len(seen)
        out[i] = seen[lab]
    return out


def agglomerative_fit(data, k: int = 2, linkage: str = "average") -> BaselineModel:
    """Bottom-up Euclidean linkage clustering cut at k clusters.

    The merge history is computed with a nearest-neighbor chain and stored
    sorted by height; assignment centers are the cut-cluster centroids so the
    model can score held-out samples like the other baselines.
    """
    if linkage not in _LINKAGE_CODES:
        raise InvalidConfigError("linkage must be one of %s, got %r" % (sorted(_LINKAGE_CODES), linkage))
    if k < 2:
        raise InvalidConfigError("k must be >= 2, got %d" % k)
    X = _as_values(data)
    n = X.shape[0]
    if n < k:
        raise InsufficientDataError("need at least k=%d samples, got %d" % (k, n))
    if n == k:
        labels = np.arange(n)
        merges = np.empty((0, 3))
    else:
        merges = _kernels.nn_chain_linkage(_pairwise_distances(X), _LINKAGE_CODES[linkage])
        labels = _cut_at(merges, n, k)
        merges = merges[np.argsort(merges[:, 2], kind="stable")]
    centers = np.vstack([X[labels == j].mean(axis=0) for j in range(k)])
    return BaselineModel(
        kind="agglomerative",
        centers=centers,
        parameters={"k": k, "linkage": linkage},
        merges=merges,
    )


# ---------------------------------------------------------------------------
# BIRCH


@dataclass
class ClusterFeature:
    """Additive summary of a point set: count, linear sum, squared norm sum."""

    count: int
    linear_sum: np.ndarray
    square_sum: float

    @classmethod
    def of_point(cls, x: np.ndarray) -> "ClusterFeature":
        return cls(1, x.copy(), float(x @ x))

    def merged(self, other: "ClusterFeature") -> "ClusterFeature":
        return ClusterFeature(
            self.count + other.count,
            self.linear_sum + other.linear_sum,
            self.square_sum + other.square_sum,
        )

    @property
    def centroid(self) -> np.ndarray:
        return self.linear_sum / self.count

    @property
    def radius(self) -> float:
        c = self.centroid
        return float(np.sqrt(max(self.square_sum / self.count - c @ c, 0.0)))


class _CFNode:
    __slots__ = ("is_leaf", "features", "children")

    def __init__(self, is_leaf: bool):
        self.is_leaf = is_leaf
        self.features: list[ClusterFeature] = []
        self.children: list["_CFNode"] = []  # empty in leaves

    def centroids(self) -> np.ndarray:
        return np.vstack([cf.centroid for cf in self.features])


class CFTree:
    """Single-pass clustering-feature tree with threshold absorption."""

    def __init__(self, threshold: float = BIRCH_THRESHOLD, branching: int = BIRCH_BRANCHING):
        if threshold <= 0:
            raise InvalidConfigError("threshold must be positive, got %g" % threshold)
        if branching < 2:
            raise InvalidConfigError("branching must be >= 2, got %d" % branching)
        self.threshold = threshold
        self.branching = branching
        self.root = _CFNode(is_leaf=True)

    def insert(self, x: np.ndarray) -> None:
        split = self._insert(self.root, np.asarray(x, dtype=np.float64))
        if split is not None:
            root = _CFNode(is_leaf=False)
            for cf, node in zip(*split):
                root.features.append(cf)
                root.children.append(node)
            self.root = root

    def _insert(self, node: _CFNode, x: np.ndarray):
        if node.is_leaf:
            if node.features:
                d2 = ((node.centroids() - x) ** 2).sum(axis=1)
                best = int(d2.argmin())
                grown = node.features[best].merged(ClusterFeature.of_point(x))
                if grown.radius <= self.threshold:
                    node.features[best] = grown
                    return None
            node.features.append(ClusterFeature.of_point(x))
        else:
            d2 = ((node.centroids() - x) ** 2).sum(axis=1)
            best = int(d2.argmin())
            split = self._insert(node.children[best], x)
            if split is None:
                node.features[best] = node.features[best].merged(ClusterFeature.of_point(x))
            else:
                cfs, nodes = split
                node.features[best : best + 1] = cfs
                node.children[best : best + 1] = nodes
        if len(node.features) > self.branching:
            return self._split(node)
        return None

    def _split(self, node: _CFNode):
        """Farthest-pair seeding, then nearest-seed redistribution."""
        cents = node.centroids()
        sq = np.einsum("ij,ij->i", cents, cents)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (cents @ cents.T)
        i, j = np.unravel_index(int(d2.argmax()), d2.shape)
        to_second = d2[:, j] < d2[:, i]
        halves = (_CFNode(node.is_leaf), _CFNode(node.is_leaf))
        for idx in range(len(node.features)):
            half = halves[1] if to_second[idx] else halves[0]
            half.features.append(node.features[idx])
            if not node.is_leaf:
                half.children.append(node.children[idx])
        cfs = []
        for half in halves:
            total = half.features[0]
            for cf in half.features[1:]:
                total = total.merged(cf)
            cfs.append(total)
        return cfs, halves

    def leaf_features(self) -> list[ClusterFeature]:
        """Leaf entries in insertion (left-to-right) order."""
        out: list[ClusterFeature] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.extend(node.features)
            else:
                stack.extend(reversed(node.children))
        return out


def build_cf_tree(data, threshold: float = BIRCH_THRESHOLD, branching: int = BIRCH_BRANCHING) -> CFTree:
    X = _as_values(data)
    tree = CFTree(threshold=threshold, branching=branching)
    for row in X:
        tree.insert(row)
    return tree


def birch_fit(
    data,
    threshold: float = BIRCH_THRESHOLD,
    branching: int = BIRCH_BRANCHING,
    k: int = 2,
    seed=0,
) -> BaselineModel:
    """CF-tree compression followed by K-Means over the leaf subclusters."""
    if k < 2:
        raise InvalidConfigError("k must be >= 2, got %d" % k)
    tree = build_cf_tree(data, threshold=threshold, branching=branching)
    leaves = tree.leaf_features()
    if len(leaves) < k:
        raise InsufficientDataError(
            "CF tree compressed the data to %d subclusters, need at least k=%d" % (len(leaves), k)
        )
    centroids = np.vstack([cf.centroid for cf in leaves])
    km = kmeans_fit(centroids, k=k, seed=seed)
    return BaselineModel(
        kind="birch",
        centers=km.centers,
        parameters={"k": k, "threshold": threshold, "branching": branching, "seed": int(seed)},
        subcluster_counts=np.array([cf.count for cf in leaves], dtype=float),
        subcluster_centroids=centroids,
        subcluster_radii=np.array([cf.radius for cf in leaves]),
    )


# ---------------------------------------------------------------------------


def evaluate_baseline(model: BaselineModel, train, test, train_labels, test_labels):
    """(mse_train, mse_test) under the standard best-train-naming protocol."""
    result = evaluate_assignments(
        assign(model, train), assign(model, test), train_labels, test_labels
    )
    return result.mse_train, result.mse_test


COMPARE_METHODS = ("KMeans", "Hierarchical", "BIRCH", "CDF")


@dataclass
class CompareRow:
    """Averaged head-to-head scores for one clustering method."""

    method: str
    repeats: int
    mse_train: float
    mse_test: float
    std: float
    train_std: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "repeats": self.repeats,
            "mse_train": self.mse_train,
            "mse_test": self.mse_test,
            "std": self.std,
            "train_std": self.train_std,
        }


def run_comparison(
    matrix,
    labels,
    repeats: int = 20,
    samples: int = 4000,
    seed_base: int = 3000,
    test_fraction: float = 0.3,
    pipeline_config: str = "EA_PCA",
    algorithm: str = "posscp",
    linkage: str = "average",
    birch_threshold: float = BIRCH_THRESHOLD,
    birch_branching: int = BIRCH_BRANCHING,
    entropy_threshold: float = 0.0,
    variance_threshold: float = 0.95,
) -> list[CompareRow]:
    """Score the reference clusterers against the full detection pipeline.

    Each repeat draws a fresh random subsample (hierarchical linkage is
    quadratic in memory, so the full dataset is not an option), splits it
    once, and hands the *same* train/test rows to every method.  The
    reference methods see the cleaned, standardized feature space; the
    pipeline row additionally applies its own selection and projection
    stages.  Returned rows are averages over all repeats, in the fixed
    order KMeans, Hierarchical, BIRCH, CDF.
    """
    from .pipeline import evaluate_pipeline, fit_pipeline

    if repeats < 1:
        raise InvalidConfigError("repeats must be at least 1")
    labels = np.asarray(labels, dtype=bool)
    if labels.shape[0] != matrix.n_samples:
        raise ShapeMismatchError(
            f"{labels.shape[0]} labels for {matrix.n_samples} samples"
        )
    samples = min(int(samples), matrix.n_samples)
    scores = {method: ([], []) for method in COMPARE_METHODS}
    for repeat in range(repeats):
        rng = np.random.default_rng(np.random.SeedSequence([seed_base, repeat]))
        idx = rng.permutation(matrix.n_samples)[:samples]
        sub = matrix.take_rows(idx)
        sub_labels = labels[idx]
        split = stratified_split(sub_labels, test_fraction, seed=seed_base + repeat)
        cleaned, _ = preprocess.clean(sub)
        scaler = preprocess.fit_scaler(cleaned.take_rows(split.train))
        scaled = preprocess.transform(scaler, cleaned).values
        train, test = scaled[split.train], scaled[split.test]
        y_train, y_test = sub_labels[split.train], sub_labels[split.test]
        fit_seed = seed_base + 100 + repeat
        fitted = (
            ("KMeans", kmeans_fit(train, k=2, seed=fit_seed)),
            ("Hierarchical", agglomerative_fit(train, k=2, linkage=linkage)),
            (
                "BIRCH",
                birch_fit(
                    train,
                    threshold=birch_threshold,
                    branching=birch_branching,
                    k=2,
                    seed=fit_seed,
                ),
            ),
        )
        for method, model in fitted:
            mse_train, mse_test = evaluate_baseline(
                model, train, test, y_train, y_test
            )
            scores[method][0].append(mse_train)
            scores[method][1].append(mse_test)
        pipeline = fit_pipeline(
            sub,
            sub_labels,
            config=pipeline_config,
            algorithm=algorithm,
            seed=fit_seed,
            split_seed=seed_base + repeat,
            test_fraction=test_fraction,
            entropy_threshold=entropy_threshold,
            variance_threshold=variance_threshold,
        )
        result = evaluate_pipeline(pipeline, sub, sub_labels, test_fraction)
        scores["CDF"][0].append(result.mse_train)
        scores["CDF"][1].append(result.mse_test)
    rows = []
    for method in COMPARE_METHODS:
        trains, tests = (np.asarray(side, dtype=np.float64) for side in scores[method])
        rows.append(
            CompareRow(
                method=method,
                repeats=repeats,
                mse_train=float(trains.mean()),
                mse_test=float(tests.mean()),
                std=float(tests.std()),
                train_std=float(trains.std()),
            )
        )
    return rows
