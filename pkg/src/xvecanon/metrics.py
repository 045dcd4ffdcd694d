"""Distribution comparison and attacker-linkage metrics.

Conventions worth knowing:

* ``eer`` traces the ROC at every distinct score (accept when score >= t)
  and interpolates linearly between the two adjacent operating points
  where the false-acceptance and false-rejection rates cross.  Because
  interpolation happens in (FAR, FRR) space, the result is invariant
  under strictly increasing score transforms.
* ``cllr`` treats scores as natural-log likelihood ratios; ``cllr_min``
  recalibrates the pooled scores with pool-adjacent-violators (ties
  merged first) and clips calibrated posteriors to [1e-12, 1 - 1e-12]
  before the log-odds transform.
* cosine similarity stands in for a neural verification back end, so
  absolute EER / Cllr numbers are not comparable to systems scored with
  one; only orderings between strategies are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet, unit_rows
from .errors import InvalidInputError, XvecAnonError
from .seeding import derive_seed, make_rng

_LN2 = float(np.log(2.0))
_PAV_CLIP = 1e-12


@dataclass(frozen=True, eq=False)
class SimilaritySample:
    """Pairwise cosine similarities of one vector collection."""

    values: np.ndarray
    source_label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size == 0:
            raise InvalidInputError("similarity sample must be non-empty")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("similarity sample contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Genuine (same-speaker) and impostor (different-speaker) scores."""

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        for name in ("genuine", "impostor"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.size == 0:
                raise InvalidInputError(f"{name} score list must be non-empty")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class SweepCell:
    gender: str
    retained_variance_target: float
    n_components: int
    ks_statistic: float
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    cells: tuple
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))


def _pair_matrix(data) -> np.ndarray:
    if isinstance(data, EmbeddingSet):
        return data.matrix
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise InvalidInputError("expected an EmbeddingSet or an (n, D) matrix")
    return matrix


def cosine_similarity_matrix(a, b) -> np.ndarray:
    """All pairwise cosine similarities between rows of a and rows of b."""
    return unit_rows(_pair_matrix(a)) @ unit_rows(_pair_matrix(b)).T


def cross_similarities(data, source_label: str = "") -> SimilaritySample:
    """All n(n-1)/2 unordered-pair cosine similarities, ordered
    lexicographically by index pair."""
    matrix = _pair_matrix(data)
    n = matrix.shape[0]
    if n < 2:
        raise InvalidInputError(f"need at least 2 vectors for pairwise similarities, got {n}")
    gram = unit_rows(matrix) @ unit_rows(matrix).T
    upper = np.triu_indices(n, k=1)
    return SimilaritySample(values=gram[upper], source_label=source_label)


def ecdf_eval(sample, x: float) -> float:
    """Empirical CDF: fraction of sample values <= x."""
    values = np.asarray(sample, dtype=np.float64)
    if values.size == 0:
        raise InvalidInputError("empty sample has no eCDF")
    return float(np.count_nonzero(values <= x) / values.size)


def ecdf_points(sample) -> tuple:
    """Sorted support and eCDF heights, suitable for plotting or dumping."""
    values = np.sort(np.asarray(sample, dtype=np.float64))
    if values.size == 0:
        raise InvalidInputError("empty sample has no eCDF")
    xs = np.unique(values)
    heights = np.searchsorted(values, xs, side="right") / values.size
    return xs, heights


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, exact over the merged support."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("KS statistic needs two non-empty samples")
    support = np.concatenate([a, b])
    f_a = np.searchsorted(a, support, side="right") / a.size
    f_b = np.searchsorted(b, support, side="right") / b.size
    return float(np.max(np.abs(f_a - f_b)))


def _roc_points(genuine: np.ndarray, impostor: np.ndarray):
    """FAR/FRR at every distinct score threshold (accept when score >= t),
    bracketed by the trivial all-accept / all-reject operating points."""
    genuine = np.sort(genuine)
    impostor = np.sort(impostor)
    thresholds = np.unique(np.concatenate([genuine, impostor]))
    far = 1.0 - np.searchsorted(impostor, thresholds, side="left") / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    far = np.concatenate([[1.0], far, [0.0]])
    frr = np.concatenate([[0.0], frr, [1.0]])
    return far, frr


def eer(scores: ScoreSet) -> float:
    """Equal error rate via linear interpolation at the ROC crossing.

    Higher score means more likely genuine.
    """
    far, frr = _roc_points(scores.genuine, scores.impostor)
    gap = far - frr
    cross = int(np.argmax(gap <= 0.0))
    if gap[cross] == 0.0 or cross == 0:
        return float((far[cross] + frr[cross]) / 2.0)
    g1, g2 = gap[cross - 1], gap[cross]
    alpha = g1 / (g1 - g2)
    return float(far[cross - 1] + alpha * (far[cross] - far[cross - 1]))


def cllr(scores: ScoreSet) -> float:
    """Log-likelihood-ratio cost; scores are natural-log LRs."""
    genuine_bits = np.logaddexp(0.0, -scores.genuine) / _LN2
    impostor_bits = np.logaddexp(0.0, scores.impostor) / _LN2
    return float(0.5 * (genuine_bits.mean() + impostor_bits.mean()))


def pav_fit(values, weights=None) -> np.ndarray:
    """Weighted least-squares isotonic (nondecreasing) fit via
    pool-adjacent-violators."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.ones_like(values) if weights is None else np.asarray(weights, dtype=np.float64)
    if values.size == 0:
        raise InvalidInputError("PAV needs at least one value")
    means = []
    sizes = []
    wsum = []
    for v, w in zip(values, weights):
        means.append(float(v))
        wsum.append(float(w))
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wsum.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), wsum.pop(), sizes.pop()
            total = w1 + w2
            means.append((m1 * w1 + m2 * w2) / total)
            wsum.append(total)
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


def _pav_llrs(scores: ScoreSet):
    """Optimal monotone recalibration of pooled scores to LLRs."""
    pooled = np.concatenate([scores.genuine, scores.impostor])
    labels = np.concatenate([
        np.ones(scores.genuine.size), np.zeros(scores.impostor.size)])
    order = np.argsort(pooled, kind="stable")
    sorted_scores = pooled[order]
    sorted_labels = labels[order]
    # merge ties so PAV sees one block per distinct score
    distinct, start = np.unique(sorted_scores, return_index=True)
    bounds = np.append(start, sorted_scores.size)
    block_w = np.diff(bounds).astype(np.float64)
    block_y = np.add.reduceat(sorted_labels, start) / block_w
    posterior = np.clip(pav_fit(block_y, block_w), _PAV_CLIP, 1.0 - _PAV_CLIP)
    prior_logodds = np.log(scores.genuine.size / scores.impostor.size)
    block_llr = np.log(posterior / (1.0 - posterior)) - prior_logodds
    llr_of_score = block_llr[np.searchsorted(distinct, pooled)]
    return llr_of_score[:scores.genuine.size], llr_of_score[scores.genuine.size:]


def cllr_min(scores: ScoreSet) -> float:
    """Cllr after optimal monotone (PAV) recalibration of the scores."""
    genuine_llr, impostor_llr = _pav_llrs(scores)
    return cllr(ScoreSet(genuine=genuine_llr, impostor=impostor_llr))


# ---------------------------------------------------------------------------
# linkage scenarios

SCENARIOS = ("oo", "oa", "aa")


def linkage_scenario(enroll: EmbeddingSet, trial: EmbeddingSet, scenario: str,
                     strategy=None, seed: int = 0) -> ScoreSet:
    """Cosine scores for an attacker linking enroll against trial data.

    ``scenario`` letters select the side's view: ``o`` original, ``a``
    anonymized by ``strategy`` (a callable (set, seed) -> set; sides get
    independent derived seeds).  A None strategy is the identity, so an
    ``oa`` scenario with it degenerates to ``oo``.  Every enroll x trial
    utterance pair is scored; same speaker ids are genuine, the rest
    impostor.
    """
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    if strategy is None:
        strategy = lambda eset, side_seed: eset
    if enroll.dimension != trial.dimension:
        raise InvalidInputError("enroll and trial dimensions differ")
    e_set = enroll if scenario[0] == "o" else strategy(enroll, derive_seed(seed, "enroll"))
    t_set = trial if scenario[1] == "o" else strategy(trial, derive_seed(seed, "trial"))
    scores = cosine_similarity_matrix(e_set.matrix, t_set.matrix)
    same = np.asarray(enroll.speaker_ids)[:, None] == np.asarray(trial.speaker_ids)[None, :]
    if not same.any():
        raise InvalidInputError("no overlapping speakers: zero genuine pairs")
    if same.all():
        raise InvalidInputError("no impostor pairs between enroll and trial")
    return ScoreSet(genuine=scores[same], impostor=scores[~same])


def split_speakers(pool: EmbeddingSet, fraction: float = 0.5, seed: int = 0):
    """Speaker-disjoint split into (train, test) sets, seeded."""
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError(f"split fraction must be in (0, 1), got {fraction}")
    speakers = list(dict.fromkeys(pool.speaker_ids))
    if len(speakers) < 2:
        raise InvalidInputError("need at least 2 speakers for a speaker-disjoint split")
    order = make_rng(seed).permutation(len(speakers))
    n_train = int(round(fraction * len(speakers)))
    n_train = min(max(n_train, 1), len(speakers) - 1)
    train_speakers = {speakers[i] for i in order[:n_train]}
    train_idx = [i for i, s in enumerate(pool.speaker_ids) if s in train_speakers]
    test_idx = [i for i, s in enumerate(pool.speaker_ids) if s not in train_speakers]
    return pool.subset(train_idx), pool.subset(test_idx)


def parameter_sweep(pool: EmbeddingSet, variance_targets, component_counts,
                    split_fraction: float = 0.5, seed: int = 0) -> SweepResult:
    """Grid of KS statistics over retained variance and component counts.

    Per gender stratum: speaker-disjoint split, train on the train half,
    generate as many fakes as the test half holds, compare cross-similarity
    distributions.  Failed cells are recorded with their error instead of
    aborting the sweep.  Cell seeds derive from (seed, variance, K, gender)
    so results do not depend on evaluation order.
    """
    from .anonymize import generate_fakes, train_anonymizer  # local to avoid cycle

    cells = []
    for gender, stratum in pool.by_gender().items():
        train, test = split_speakers(stratum, split_fraction, derive_seed(seed, "split", gender))
        test_sims = cross_similarities(test, source_label=f"organic-{gender}")
        for variance in variance_targets:
            for count in component_counts:
                cell_seed = derive_seed(seed, repr(float(variance)), int(count), gender)
                try:
                    model = train_anonymizer(train, variance, count,
                                             seed=cell_seed, gender=gender)
                    fakes = generate_fakes(model, len(test), derive_seed(cell_seed, "fakes"))
                    ks = ks_statistic(cross_similarities(fakes).values, test_sims.values)
                    cells.append(SweepCell(gender, float(variance), int(count), ks))
                except XvecAnonError as exc:
                    cells.append(SweepCell(gender, float(variance), int(count),
                                           float("nan"), error=str(exc)))
    return SweepResult(cells=tuple(cells), seed=seed)
