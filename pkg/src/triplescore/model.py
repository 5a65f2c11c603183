"""Random Forest regression: training, prediction, importance, serialization.

Each tree is grown on a bootstrap sample (with replacement, same size as the
training set). At every node a fixed number of candidate features is sampled
without replacement and the split minimizing the weighted child variance is
chosen by exact search over midpoints of the sorted unique feature values.
Leaves predict the mean label of the samples routed to them.

Randomness is driven by numpy's SeedSequence: the forest seed is spawned into
one child sequence per tree, so serial and parallel training produce
bit-identical forests regardless of scheduling.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import fileio
from .errors import DataFormatError, SchemaMismatchError
from .features import FeatureVector

MODEL_MAGIC = b"TSRF"
MODEL_VERSION = 1

# A split must reduce the node's sum of squared errors by more than this
# relative tolerance, else the node becomes a leaf (guards float noise).
_SSE_REL_TOL = 1e-12


@dataclass(frozen=True)
class ForestParams:
    """Forest hyperparameters; defaults match the reference configuration."""

    n_trees: int = 1000
    max_features: int = 3
    min_samples_leaf: int = 1
    rng_seed: int = 0

    @classmethod
    def for_relation(cls, relation: str, **overrides) -> "ForestParams":
        """Defaults per relation: 1000 trees, 3 features for profession, 2 for nationality."""
        overrides.setdefault("max_features", 2 if relation == "nationality" else 3)
        return cls(**overrides)

    def validated(self) -> "ForestParams":
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        return self


@dataclass
class RegressionTree:
    """Flat node arrays; feature[i] == -1 marks a leaf.

    value holds the node's mean label (the prediction at leaves); n_samples
    and impurity_decrease feed the importance computation.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity_decrease: np.ndarray

    def predict_one(self, x) -> float:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return float(self.value[node])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.float64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            feat = self.feature[node]
            if feat < 0:
                out[rows] = self.value[node]
                continue
            goes_left = X[rows, feat] <= self.threshold[node]
            stack.append((self.right[node], rows[~goes_left]))
            stack.append((self.left[node], rows[goes_left]))
        return out


@dataclass
class RegressionForest:
    """A trained ensemble tagged with its relation and feature schema."""

    params: ForestParams
    trees: list[RegressionTree]
    schema: tuple[str, ...]
    relation: str


def _node_sse(y: np.ndarray) -> float:
    mean = y.mean()
    return float(np.sum((y - mean) ** 2))


def _best_split(X, y, idx, candidates, min_samples_leaf):
    """Exact best split over the candidate features; None when no valid split.

    Returns (total child SSE, feature, threshold, left indices, right indices).
    Candidates are scanned in sampled order and strict improvement is required
    to replace the incumbent, which pins tie-breaking.
    """
    best = None
    n = idx.size
    for f in candidates:
        v = X[idx, f]
        # Stable sort keeps equal-valued runs in a reproducible order, so the
        # prefix sums (and therefore float-level costs) are deterministic.
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = y[idx][order]
        boundaries = np.nonzero(sv[1:] != sv[:-1])[0]
        if boundaries.size == 0:
            continue
        n_left = boundaries + 1
        n_right = n - n_left
        valid = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        if not valid.any():
            continue
        boundaries = boundaries[valid]
        n_left = n_left[valid]
        n_right = n_right[valid]
        cs = np.cumsum(sy)
        cs2 = np.cumsum(sy * sy)
        total, total2 = cs[-1], cs2[-1]
        sum_left = cs[boundaries]
        sum2_left = cs2[boundaries]
        sse = (sum2_left - sum_left * sum_left / n_left) + (
            (total2 - sum2_left) - (total - sum_left) ** 2 / n_right
        )
        j = int(np.argmin(sse))
        if best is None or sse[j] < best[0]:
            cut = boundaries[j]
            threshold = (sv[cut] + sv[cut + 1]) / 2.0
            left_idx = idx[order[: cut + 1]]
            right_idx = idx[order[cut + 1 :]]
            best = (float(sse[j]), int(f), float(threshold), left_idx, right_idx)
    return best


def _grow_tree(X, y, max_features, min_samples_leaf, rng) -> RegressionTree:
    """Grow one tree on an already-bootstrapped (X, y)."""
    n_features = X.shape[1]
    m = min(max_features, n_features)
    feature, threshold, left, right = [], [], [], []
    value, counts, decrease = [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        counts.append(0)
        decrease.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(np.arange(y.size), root)]
    while stack:
        idx, node = stack.pop()
        ny = y[idx]
        n = idx.size
        counts[node] = n
        value[node] = float(ny.mean())
        sse = _node_sse(ny)
        if n < 2 * min_samples_leaf or sse <= 0.0:
            continue
        candidates = rng.choice(n_features, size=m, replace=False)
        best = _best_split(X, y, idx, candidates, min_samples_leaf)
        if best is None or (sse - best[0]) <= _SSE_REL_TOL * max(1.0, sse):
            continue
        child_sse, feat, thr, left_idx, right_idx = best
        feature[node] = feat
        threshold[node] = thr
        decrease[node] = (sse - child_sse) / n  # variance decrease at this node
        l = new_node()
        r = new_node()
        left[node] = l
        right[node] = r
        stack.append((right_idx, r))
        stack.append((left_idx, l))
    return RegressionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
        n_samples=np.array(counts, dtype=np.int64),
        impurity_decrease=np.array(decrease, dtype=np.float64),
    )


def _train_tree_range(args):
    """Train trees [start, stop) of a forest; used by both serial and parallel paths."""
    X, y, max_features, min_samples_leaf, rng_seed, n_trees, start, stop = args
    children = np.random.SeedSequence(rng_seed).spawn(n_trees)
    trees = []
    for i in range(start, stop):
        rng = np.random.Generator(np.random.PCG64(children[i]))
        boot = rng.integers(0, y.size, size=y.size)
        trees.append(_grow_tree(X[boot], y[boot], max_features, min_samples_leaf, rng))
    return trees


def train(instances, params: ForestParams, jobs: int = 1) -> RegressionForest:
    """Train a forest on (FeatureVector, label) instances.

    Labels must lie in 0..7 and all instances must share one schema. Training
    is deterministic for a given seed, including under parallel jobs.
    """
    instances = list(instances)
    if len(instances) < 2:
        raise ValueError(f"need at least 2 training instances, got {len(instances)}")
    params = params.validated()
    schema = instances[0][0].names
    relation = instances[0][0].relation
    for fv, label in instances:
        if fv.names != schema or fv.relation != relation:
            raise SchemaMismatchError("training instances have mixed feature schemas")
        if not 0 <= label <= 7:
            raise ValueError(f"label {label} outside 0..7")
    if params.max_features > len(schema):
        raise ValueError(
            f"max_features {params.max_features} exceeds schema size {len(schema)}"
        )
    X = np.array([fv.values for fv, _ in instances], dtype=np.float64)
    y = np.array([label for _, label in instances], dtype=np.float64)

    common = (X, y, params.max_features, params.min_samples_leaf, params.rng_seed, params.n_trees)
    if jobs <= 1 or params.n_trees == 1:
        trees = _train_tree_range(common + (0, params.n_trees))
    else:
        jobs = min(jobs, params.n_trees)
        bounds = np.linspace(0, params.n_trees, jobs + 1, dtype=int)
        tasks = [common + (int(bounds[i]), int(bounds[i + 1])) for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trees = [tree for chunk in pool.map(_train_tree_range, tasks) for tree in chunk]
    return RegressionForest(params=params, trees=trees, schema=schema, relation=relation)


def _check_schema(forest: RegressionForest, fv: FeatureVector):
    if fv.names != forest.schema or fv.relation != forest.relation:
        raise SchemaMismatchError(
            f"feature vector ({fv.relation}, {len(fv.names)} features) does not match "
            f"model ({forest.relation}, {len(forest.schema)} features)"
        )


def predict(forest: RegressionForest, fv: FeatureVector) -> float:
    """Raw ranking score: mean of the per-tree leaf values."""
    _check_schema(forest, fv)
    x = fv.as_array()
    return float(np.mean([tree.predict_one(x) for tree in forest.trees]))


def predict_batch(forest: RegressionForest, X: np.ndarray) -> np.ndarray:
    """Raw scores for a feature matrix with columns in schema order."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(forest.schema):
        raise SchemaMismatchError(
            f"feature matrix has {X.shape[-1] if X.ndim else 0} columns, "
            f"model expects {len(forest.schema)}"
        )
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for tree in forest.trees:
        acc += tree.predict_batch(X)
    return acc / len(forest.trees)


def map_score(s_r: float) -> int:
    """Clamp a raw score to [0, 7] and round half away from zero to an integer."""
    if not math.isfinite(s_r):
        raise ValueError(f"raw score must be finite, got {s_r!r}")
    if s_r < 0:
        return 0
    if s_r > 7:
        return 7
    return int(math.floor(s_r + 0.5))


def feature_importance(forest: RegressionForest) -> dict[str, float]:
    """Mean impurity-decrease importance per feature, normalized to sum 1.

    The impurity is label variance (the regression analogue of the Gini
    score); a forest that never split reports all zeros, unnormalized.
    """
    totals = np.zeros(len(forest.schema), dtype=np.float64)
    for tree in forest.trees:
        internal = tree.feature >= 0
        if not internal.any():
            continue
        weights = tree.n_samples[internal] * tree.impurity_decrease[internal]
        np.add.at(totals, tree.feature[internal], weights / tree.n_samples[0])
    totals /= len(forest.trees)
    total = totals.sum()
    if total > 0:
        totals /= total
    return dict(zip(forest.schema, totals.tolist()))


def save_forest(forest: RegressionForest, path) -> None:
    """Write a versioned, self-describing model file (deterministic bytes)."""
    meta = {
        "relation": forest.relation,
        "schema": list(forest.schema),
        "params": {
            "n_trees": forest.params.n_trees,
            "max_features": forest.params.max_features,
            "min_samples_leaf": forest.params.min_samples_leaf,
            "rng_seed": forest.params.rng_seed,
        },
    }
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(fileio.pack_u32(MODEL_VERSION))
    buf.write(fileio.pack_str(json.dumps(meta, sort_keys=True, separators=(",", ":"))))
    buf.write(fileio.pack_u32(len(forest.trees)))
    for tree in forest.trees:
        buf.write(fileio.pack_u32(tree.feature.size))
        buf.write(tree.feature.astype("<i4").tobytes())
        buf.write(tree.threshold.astype("<f8").tobytes())
        buf.write(tree.left.astype("<i4").tobytes())
        buf.write(tree.right.astype("<i4").tobytes())
        buf.write(tree.value.astype("<f8").tobytes())
        buf.write(tree.n_samples.astype("<i8").tobytes())
        buf.write(tree.impurity_decrease.astype("<f8").tobytes())
    fileio.atomic_write_bytes(path, buf.getvalue())


def load_forest(path) -> RegressionForest:
    """Load a model file written by save_forest."""
    with open(path, "rb") as fh:
        magic = fileio.read_exact(fh, 4, path)
        if magic != MODEL_MAGIC:
            raise DataFormatError(f"not a model file (bad magic {magic!r})", path=path)
        version = fileio.read_u32(fh, path)
        if version != MODEL_VERSION:
            raise DataFormatError(
                f"unsupported model version {version} (expected {MODEL_VERSION})", path=path
            )
        try:
            meta = json.loads(fileio.read_str(fh, path))
            params = ForestParams(**meta["params"])
            relation = meta["relation"]
            schema = tuple(meta["schema"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataFormatError(f"corrupt model metadata: {exc}", path=path) from None
        n_trees = fileio.read_u32(fh, path)
        trees = []
        for _ in range(n_trees):
            n_nodes = fileio.read_u32(fh, path)

            def arr(dtype, itemsize):
                raw = fileio.read_exact(fh, n_nodes * itemsize, path)
                return np.frombuffer(raw, dtype=dtype).copy()

            trees.append(
                RegressionTree(
                    feature=arr("<i4", 4),
                    threshold=arr("<f8", 8),
                    left=arr("<i4", 4),
                    right=arr("<i4", 4),
                    value=arr("<f8", 8),
                    n_samples=arr("<i8", 8),
                    impurity_decrease=arr("<f8", 8),
                )
            )
    return RegressionForest(params=params, trees=trees, schema=schema, relation=relation)


def params_with_seed(params: ForestParams, seed: int) -> ForestParams:
    return replace(params, rng_seed=int(seed))
