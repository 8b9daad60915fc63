"""
Clustering metrics: NMI, AMI, ARI, Hungarian-matched accuracy, hierarchy
rollup and a cosine K-NN probe.

All scores are computed from one ContingencyTable, rows indexed by the
predicted labels and columns by the true labels, natural logs throughout.
Labels absent from both partitions never enter the table.
"""

from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import entropy as shannon_entropy
from sklearn.metrics.cluster import contingency_matrix
from sklearn.neighbors import NearestNeighbors

from selfclassifier.exceptions import DimensionError, HierarchyError, ParameterError
from selfclassifier.schemas.report import ClusterScores, LevelMetrics
from selfclassifier.utils.validators import validate_labels, validate_same_length

Labels = Union[Sequence[int], np.ndarray, "Partition"]

# Degenerate AMI denominators below this are treated as zero
AMI_DENOMINATOR_EPS = 1e-12


class Normalizer(str, Enum):
    """Mean used to normalize mutual information."""

    GEOMETRIC = "geometric"
    ARITHMETIC = "arithmetic"
    MAX = "max"
    MIN = "min"


class MappingMode(str, Enum):
    """How predicted clusters are mapped to classes for accuracy."""

    MATCHING = "matching"
    MAJORITY = "majority"


class Partition:
    """Labels of M items, ids >= 0 and below n_labels when that is given."""

    def __init__(self, labels: Sequence[int] | np.ndarray, n_labels: Optional[int] = None):
        self.labels = validate_labels(labels)
        if n_labels is not None and self.labels.size and self.labels.max() >= n_labels:
            raise ParameterError(f"label {self.labels.max()} >= declared label-space size {n_labels}")
        self.n_labels = n_labels

    def __len__(self):
        return self.labels.shape[0]


def _labels(x: Labels) -> np.ndarray:
    if isinstance(x, Partition):
        return x.labels
    return validate_labels(x)


class ContingencyTable:
    """K_pred x K_true co-occurrence counts with their marginals."""

    def __init__(self, pred: Labels, truth: Labels):
        pred_labels = _labels(pred)
        truth_labels = _labels(truth)
        validate_same_length(pred_labels, truth_labels)
        if pred_labels.shape[0] == 0:
            raise ParameterError("partitions must label at least one item")
        self.pred_classes = np.unique(pred_labels)
        self.true_classes = np.unique(truth_labels)
        self.counts = np.asarray(contingency_matrix(pred_labels, truth_labels), dtype=np.int64)
        self.row_sums = self.counts.sum(axis=1)
        self.col_sums = self.counts.sum(axis=0)
        self.total = int(self.counts.sum())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.counts.shape  # type: ignore[return-value]

    def is_relabeling(self) -> bool:
        """True when the two partitions are equal up to a renaming of ids."""
        nonzero = self.counts > 0
        return self.shape[0] == self.shape[1] and bool(
            np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1)
        )


def _entropy(counts: np.ndarray) -> float:
    if counts.size <= 1:
        return 0.0
    return float(shannon_entropy(counts))


def mutual_information(table: ContingencyTable) -> float:
    """I(pred; truth) in nats."""
    rows, cols = np.nonzero(table.counts)
    n_ij = table.counts[rows, cols].astype(np.float64)
    m = float(table.total)
    outer = table.row_sums[rows].astype(np.float64) * table.col_sums[cols]
    mi = float(np.sum(n_ij / m * (np.log(n_ij) + np.log(m) - np.log(outer))))
    return max(mi, 0.0)


def _mean(h1: float, h2: float, normalizer: Normalizer) -> float:
    normalizer = Normalizer(normalizer)
    if normalizer is Normalizer.GEOMETRIC:
        return float(np.sqrt(h1 * h2))
    if normalizer is Normalizer.ARITHMETIC:
        return (h1 + h2) / 2.0
    if normalizer is Normalizer.MAX:
        return max(h1, h2)
    return min(h1, h2)


def nmi(pred: Labels, truth: Labels, normalizer: Normalizer = Normalizer.GEOMETRIC) -> float:
    """
    Normalized mutual information in [0, 1].

    Equals 1 when both partitions are constant and 0 when exactly one is.

    Raises:
        DimensionError: If the partitions differ in length
    """
    table = ContingencyTable(pred, truth)
    h_pred = _entropy(table.row_sums)
    h_true = _entropy(table.col_sums)
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    if table.is_relabeling():
        return 1.0
    score = mutual_information(table) / _mean(h_pred, h_true, normalizer)
    return float(min(max(score, 0.0), 1.0))


def log_factorials(n: int) -> np.ndarray:
    """log(k!) for k = 0..n by cumulative log sums."""
    table = np.zeros(n + 1)
    if n > 0:
        table[1:] = np.cumsum(np.log(np.arange(1, n + 1, dtype=np.float64)))
    return table


def expected_mutual_information(table: ContingencyTable) -> float:
    """
    Exact E[MI] under random relabeling with the marginals held fixed.

    Every cell count follows a hypergeometric law; the sum runs over the
    feasible counts max(1, a+b-M)..min(a, b) of every (row, column) pair.
    """
    m = table.total
    lf = log_factorials(m)
    a = table.row_sums
    b = table.col_sums
    log_m = np.log(m)
    emi = 0.0
    for a_i in a:
        for b_j in b:
            low = max(1, a_i + b_j - m)
            high = min(a_i, b_j)
            if low > high:
                continue
            n = np.arange(low, high + 1)
            log_prob = (
                lf[a_i] + lf[b_j] + lf[m - a_i] + lf[m - b_j] - lf[m]
                - lf[n] - lf[a_i - n] - lf[b_j - n] - lf[m - a_i - b_j + n]
            )
            term = n / m * (np.log(n) + log_m - np.log(a_i) - np.log(b_j))
            emi += float(np.sum(term * np.exp(log_prob)))
    return emi


def ami(pred: Labels, truth: Labels, normalizer: Normalizer = Normalizer.ARITHMETIC) -> float:
    """
    Mutual information adjusted for chance, at most 1.

    Returns 1 for partitions equal up to relabeling and 0 when the
    denominator vanishes otherwise.
    """
    table = ContingencyTable(pred, truth)
    if table.is_relabeling():
        return 1.0
    mi = mutual_information(table)
    emi = expected_mutual_information(table)
    h_pred = _entropy(table.row_sums)
    h_true = _entropy(table.col_sums)
    denominator = _mean(h_pred, h_true, normalizer) - emi
    if abs(denominator) < AMI_DENOMINATOR_EPS:
        return 0.0
    return float((mi - emi) / denominator)


def _pairs(counts: np.ndarray) -> float:
    counts = counts.astype(np.float64)
    return float(np.sum(counts * (counts - 1) / 2.0))


def ari(pred: Labels, truth: Labels) -> float:
    """
    Adjusted Rand index by pair counting, at most 1.

    Raises:
        ParameterError: If fewer than two items are labeled
    """
    table = ContingencyTable(pred, truth)
    if table.total < 2:
        raise ParameterError("ARI needs at least two items")
    sum_cells = _pairs(table.counts)
    sum_rows = _pairs(table.row_sums)
    sum_cols = _pairs(table.col_sums)
    all_pairs = table.total * (table.total - 1) / 2.0
    expected = sum_rows * sum_cols / all_pairs
    numerator = sum_cells - expected
    denominator = (sum_rows + sum_cols) / 2.0 - expected
    if denominator == 0.0:
        return 1.0 if numerator == 0.0 else 0.0
    return float(numerator / denominator)


def hungarian_acc(pred: Labels, truth: Labels) -> Tuple[float, Dict[int, int]]:
    """
    Accuracy under the best one-to-one cluster-to-class matching.

    Rectangular tables are solved directly; with more clusters than classes
    the surplus clusters stay unmatched and count as errors.

    Returns:
        (accuracy, predicted label -> true label for every matched cluster)
    """
    table = ContingencyTable(pred, truth)
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    matched = int(table.counts[rows, cols].sum())
    mapping = {int(table.pred_classes[r]): int(table.true_classes[c]) for r, c in zip(rows, cols)}
    return matched / table.total, mapping


def majority_acc(pred: Labels, truth: Labels) -> Tuple[float, Dict[int, int]]:
    """Accuracy when every cluster takes its most frequent class (many-to-one)."""
    table = ContingencyTable(pred, truth)
    best = np.argmax(table.counts, axis=1)
    matched = int(table.counts[np.arange(table.shape[0]), best].sum())
    mapping = {int(p): int(table.true_classes[c]) for p, c in zip(table.pred_classes, best)}
    return matched / table.total, mapping


def cluster_scores(
    pred: Labels,
    truth: Labels,
    nmi_normalizer: Normalizer = Normalizer.GEOMETRIC,
    ami_normalizer: Normalizer = Normalizer.ARITHMETIC,
) -> ClusterScores:
    """All flat scores of one prediction."""
    pred_labels = _labels(pred)
    truth_labels = _labels(truth)
    table = ContingencyTable(pred_labels, truth_labels)
    return ClusterScores(
        acc=hungarian_acc(pred_labels, truth_labels)[0],
        majority_acc=majority_acc(pred_labels, truth_labels)[0],
        nmi=nmi(pred_labels, truth_labels, nmi_normalizer),
        ami=ami(pred_labels, truth_labels, ami_normalizer),
        ari=ari(pred_labels, truth_labels) if table.total >= 2 else 1.0,
        n_clusters=table.shape[0],
        n_classes=table.shape[1],
    )


# ============================================
# HIERARCHY
# ============================================


class HierarchyMap:
    """
    Leaf-to-superclass maps for an ordered list of levels.

    Raises:
        HierarchyError: If a level's superclass ids are not dense from 0 or
            the levels cover different leaf sets
    """

    def __init__(self, levels: Dict[str, Dict[int, int]]):
        if not levels:
            raise HierarchyError("hierarchy has no levels")
        leaves: Optional[set] = None
        for name, mapping in levels.items():
            supers = set(mapping.values())
            if supers != set(range(len(supers))):
                raise HierarchyError(f"level {name!r}: superclass ids must be dense in [0, {len(supers)})")
            if leaves is None:
                leaves = set(mapping)
            elif set(mapping) != leaves:
                raise HierarchyError(f"level {name!r} maps a different set of leaves")
        self.levels: Dict[str, Dict[int, int]] = {name: dict(m) for name, m in levels.items()}

    @property
    def level_names(self) -> List[str]:
        return list(self.levels)

    def n_superclasses(self, level: str) -> int:
        return len(set(self.levels[level].values()))

    def roll_up(self, truth: Labels, level: str) -> np.ndarray:
        """
        Replace every leaf label by its superclass at level.

        Raises:
            HierarchyError: If a leaf is not mapped
        """
        mapping = self.levels[level]
        labels = _labels(truth)
        missing = sorted(set(np.unique(labels).tolist()) - set(mapping))
        if missing:
            raise HierarchyError(f"leaves {missing[:10]} are not mapped at level {level!r}")
        return np.array([mapping[int(leaf)] for leaf in labels], dtype=np.int64)


def hierarchical_eval(
    pred: Labels,
    truth_leaf: Labels,
    hierarchy: HierarchyMap,
    nmi_normalizer: Normalizer = Normalizer.GEOMETRIC,
    ami_normalizer: Normalizer = Normalizer.ARITHMETIC,
) -> List[LevelMetrics]:
    """
    Score the unmerged predicted clusters against the truth rolled up to every level.

    Several predicted clusters may land in one superclass, so level accuracy
    uses the many-to-one mapping; the other scores are computed as for flat
    predictions.

    Raises:
        HierarchyError: If a true leaf is not mapped at some level
    """
    pred_labels = _labels(pred)
    results = []
    for level in hierarchy.level_names:
        rolled = hierarchy.roll_up(truth_leaf, level)
        scores = cluster_scores(pred_labels, rolled, nmi_normalizer, ami_normalizer)
        results.append(
            LevelMetrics(level=level, scores=scores.model_copy(update={"acc": scores.majority_acc}))
        )
    return results


# ============================================
# K-NN PROBE
# ============================================


def knn_probe(
    train_emb: np.ndarray,
    train_labels: Labels,
    test_emb: np.ndarray,
    test_labels: Labels,
    k: int = 20,
) -> float:
    """
    Top-1 accuracy of a cosine K-NN majority vote.

    K is capped at the training-set size. Vote ties go to the class of the
    most similar neighbor among the tied classes.

    Raises:
        ParameterError: If either set is empty or k < 1
    """
    train_emb = np.atleast_2d(np.asarray(train_emb, dtype=np.float64))
    test_emb = np.atleast_2d(np.asarray(test_emb, dtype=np.float64))
    y_train = _labels(train_labels)
    y_test = _labels(test_labels)
    if y_train.size == 0 or y_test.size == 0:
        raise ParameterError("K-NN probe needs non-empty train and test sets")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if train_emb.shape[0] != y_train.size or test_emb.shape[0] != y_test.size:
        raise DimensionError("embedding rows and label counts differ")
    k = min(k, y_train.size)

    index = NearestNeighbors(n_neighbors=k, metric="cosine", algorithm="brute").fit(train_emb)
    _, neighbors = index.kneighbors(test_emb)

    correct = 0
    for row, truth in zip(neighbors, y_test):
        votes = y_train[row]
        counts = np.bincount(votes)
        winners = np.flatnonzero(counts == counts.max())
        # neighbors are sorted by decreasing similarity
        prediction = next(label for label in votes if label in winners)
        correct += int(prediction == truth)
    return correct / y_test.size
