"""Decision interpretability: sentence importance, timing statistics, tests.

Sentence importance measures how far the classifier's decision value moves
when one sentence is left out of the document mean. Timing analysis pools
durations between adjacent landmarks per bigram label and compares the two
classes with a Mann-Whitney U test (exact when feasible and tie-free,
normal approximation with tie correction otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import erfc, sqrt

import numpy as np

from .classify import SvmModel, decision_value
from .errors import (
    DegenerateSimilarityError,
    InsufficientInputError,
    ShapeError,
    ValidationError,
)
from .landmarks import LandmarkSequence


@dataclass(frozen=True)
class ImportanceEntry:
    sentence_id: str
    d_modified: float
    delta: float


@dataclass(frozen=True)
class ImportanceReport:
    d_original: float
    entries: tuple[ImportanceEntry, ...]  # in input sentence order
    top: tuple[str, ...]  # ranked by descending delta, ties by input order


def sentence_importance(
    svm: SvmModel,
    sentence_vectors: np.ndarray,
    sentence_ids: tuple[str, ...] | None = None,
    k: int = 5,
) -> ImportanceReport:
    """Leave-one-out deltas of the SVM decision value over the document mean.

    The document vector is the mean of all sentence vectors; leaving out
    sentence i rescales that mean to the remaining n-1 rows. Documents of a
    single sentence are rejected because the leave-one-out mean is undefined.
    """
    x = np.atleast_2d(np.asarray(sentence_vectors, dtype=np.float64))
    n = x.shape[0]
    if n < 2:
        raise InsufficientInputError("sentence importance needs >= 2 sentences")
    if sentence_ids is None:
        sentence_ids = tuple(str(i) for i in range(n))
    if len(sentence_ids) != n:
        raise ShapeError("one id per sentence vector required")

    v_doc = x.mean(axis=0)
    d_original = float(decision_value(svm, v_doc))
    total = x.sum(axis=0)
    entries = []
    for i in range(n):
        v_mod = (total - x[i]) / (n - 1)
        d_mod = float(decision_value(svm, v_mod))
        entries.append(ImportanceEntry(sentence_ids[i], d_mod, abs(d_original - d_mod)))
    ranked = sorted(range(n), key=lambda i: (-entries[i].delta, i))
    top = tuple(sentence_ids[i] for i in ranked[: min(k, n)])
    return ImportanceReport(d_original, tuple(entries), top)


@dataclass(frozen=True)
class DurationStats:
    bigram: str
    count: int
    mean: float
    median: float
    variance: float | None  # n-1 convention; None when count < 2
    std: float | None
    minimum: float
    maximum: float
    iqr: float
    skewness: float  # population-moment Fisher skewness; 0 for zero variance
    kurtosis_excess: float  # m4/m2^2 - 3; 0 for zero variance
    sufficient: bool  # False when count < 2


def duration_stats(bigram: str, values) -> DurationStats:
    """The nine summary statistics under the documented conventions.

    Variance and std use the n-1 denominator; quartiles interpolate
    linearly; skewness and excess kurtosis use population moments and are
    defined as 0 when the second moment vanishes.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise InsufficientInputError("duration set is empty")
    sufficient = x.size >= 2
    q25, q75 = np.percentile(x, [25, 75])
    m = x.mean()
    m2 = float(np.mean((x - m) ** 2))
    if m2 > 0:
        skew = float(np.mean((x - m) ** 3)) / m2**1.5
        kurt = float(np.mean((x - m) ** 4)) / m2**2 - 3.0
    else:
        skew, kurt = 0.0, 0.0
    return DurationStats(
        bigram=bigram,
        count=int(x.size),
        mean=float(m),
        median=float(np.median(x)),
        variance=float(x.var(ddof=1)) if sufficient else None,
        std=float(x.std(ddof=1)) if sufficient else None,
        minimum=float(x.min()),
        maximum=float(x.max()),
        iqr=float(q75 - q25),
        skewness=skew,
        kurtosis_excess=kurt,
        sufficient=sufficient,
    )


def adjacent_durations(seq: LandmarkSequence) -> list[tuple[str, float]]:
    """(bigram label, duration) for every overlapping adjacent landmark pair."""
    out = []
    lms = seq.landmarks
    for a, b in zip(lms, lms[1:]):
        out.append((a.label + b.label, b.time - a.time))
    return out


def bigram_duration_stats(
    sequences_by_class: dict[str, list[LandmarkSequence]],
    bigram_filter: set[str] | None = None,
) -> dict[tuple[str, str], DurationStats]:
    """Per-(class, bigram) duration statistics pooled across sequences."""
    pools: dict[tuple[str, str], list[float]] = {}
    for cls, seqs in sequences_by_class.items():
        for seq in seqs:
            for label, duration in adjacent_durations(seq):
                if bigram_filter is not None and label not in bigram_filter:
                    continue
                pools.setdefault((cls, label), []).append(duration)
    return {key: duration_stats(key[1], vals) for key, vals in sorted(pools.items())}


@dataclass(frozen=True)
class TestResult:
    u: float  # U statistic of the first sample
    p: float  # two-sided
    n1: int
    n2: int
    exact: bool
    significant: bool  # p < 0.05


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def _u_counts(n: int, m: int) -> tuple[int, ...]:
    """Number of tie-free rank arrangements of (n, m) per U value 0..n*m.

    Iterative form of the recurrence f(n, m, u) = f(n-1, m, u-m)
    + f(n, m-1, u): the largest pooled value is either from sample 1
    (beating all m of sample 2) or from sample 2 (beating none).
    """
    table = [[(1,)] * (m + 1)] + [[(1,)] + [None] * m for _ in range(n)]
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            out = [0] * (i * j + 1)
            for u, cnt in enumerate(table[i - 1][j]):
                out[u + j] += cnt
            for u, cnt in enumerate(table[i][j - 1]):
                out[u] += cnt
            table[i][j] = tuple(out)
    return table[n][m]


def mann_whitney_u(a, b, exact_limit: int = 400) -> TestResult:
    """Two-sided Mann-Whitney U test with midrank ties.

    Exact p by counting rank arrangements when n*m <= exact_limit and the
    pooled sample is tie-free; otherwise a normal approximation with
    tie-corrected variance and continuity correction.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValidationError("both samples must be non-empty")
    n1, n2 = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u1 = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    nm = n1 * n2

    has_ties = np.unique(pooled).size < pooled.size
    if nm <= exact_limit and not has_ties:
        counts = _u_counts(n1, n2)
        total = sum(counts)
        u_low = min(u1, nm - u1)
        p = 2.0 * sum(counts[: int(u_low) + 1]) / total
        p = min(1.0, p)
        return TestResult(u1, p, n1, n2, True, p < 0.05)

    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1)) if n > 1 else 0.0
    sigma_sq = nm / 12.0 * ((n + 1) - tie_term)
    if sigma_sq <= 0:
        return TestResult(u1, 1.0, n1, n2, False, False)
    mu = nm / 2.0
    diff = u1 - mu
    cc = 0.5 if diff > 0 else (-0.5 if diff < 0 else 0.0)
    z = (diff - cc) / sqrt(sigma_sq)
    p = min(1.0, erfc(abs(z) / sqrt(2.0)))
    return TestResult(u1, p, n1, n2, False, p < 0.05)


@dataclass(frozen=True)
class DiversityMetrics:
    cosine_mean: float  # mean pairwise cosine over unordered pairs
    mean_pairwise_distance: float  # mean pairwise Euclidean distance
    variance_per_dim: float  # mean per-dimension variance (n-1)


def diversity_metrics(matrix: np.ndarray) -> DiversityMetrics:
    """Spread statistics of an embedding matrix over all unordered row pairs."""
    x = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    n = x.shape[0]
    if n < 2:
        raise InsufficientInputError("diversity metrics need >= 2 rows")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise DegenerateSimilarityError("zero-norm embedding row")
    gram = x @ x.T
    iu = np.triu_indices(n, k=1)
    cosines = gram[iu] / (norms[:, None] * norms[None, :])[iu]
    sq = np.sum(x**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * gram, 0.0)
    distances = np.sqrt(d2[iu])
    return DiversityMetrics(
        float(cosines.mean()),
        float(distances.mean()),
        float(x.var(axis=0, ddof=1).mean()),
    )


@dataclass(frozen=True)
class BigramComparison:
    bigram: str
    u: float
    p: float
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int
    significant: bool


def compare_bigram_durations(
    seqs_a: list[LandmarkSequence],
    seqs_b: list[LandmarkSequence],
    alpha: float = 0.05,
) -> list[BigramComparison]:
    """Per-bigram U tests between two groups, most significant first.

    Only bigrams observed in both groups are testable; rows sort by
    ascending p, ties by bigram label.
    """
    pools_a: dict[str, list[float]] = {}
    pools_b: dict[str, list[float]] = {}
    for seq in seqs_a:
        for label, d in adjacent_durations(seq):
            pools_a.setdefault(label, []).append(d)
    for seq in seqs_b:
        for label, d in adjacent_durations(seq):
            pools_b.setdefault(label, []).append(d)
    rows = []
    for label in sorted(set(pools_a) & set(pools_b)):
        da, db = pools_a[label], pools_b[label]
        res = mann_whitney_u(da, db)
        rows.append(
            BigramComparison(
                label,
                res.u,
                res.p,
                float(np.mean(da)),
                float(np.mean(db)),
                len(da),
                len(db),
                res.p < alpha,
            )
        )
    rows.sort(key=lambda r: (r.p, r.bigram))
    return rows
