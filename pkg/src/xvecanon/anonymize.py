"""Fake-embedding generation and model persistence.

The generative path samples a reduced vector from a per-stratum GMM and
maps it back through the PCA inverse transform.  Forced dissimilarity
optionally resamples until the fake's cosine similarity to the original
falls below a threshold.  For comparison, the reference pool-averaging
generator (rank the pool by cosine distance from the original, keep the
``n_far`` farthest, average a random ``n_avg`` of them) is provided too.

A trained model stores only mixture and basis parameters, never training
vectors, so shipping it does not leak the pool.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingSet, cosine_similarity, unit_rows
from .errors import InvalidInputError, ModelFormatError, RejectionExhaustedError
from .gmm import GmmModel, gmm_fit, sample_with_rng
from .pca import PcaModel, pca_fit, pca_inverse_transform, pca_transform
from .seeding import RNG_ALGORITHM, derive_seed, make_rng
from .serialize import atomic_write_text, dumps_json

MODEL_FORMAT_VERSION = "1"
DEFAULT_RETAINED_VARIANCE = 0.95
DEFAULT_N_COMPONENTS = 20
DEFAULT_FD_THRESHOLD = 0.8
DEFAULT_MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class FdConfig:
    """Forced-dissimilarity settings: accept only fakes with cosine
    similarity to the original strictly below the threshold."""

    similarity_threshold: float = DEFAULT_FD_THRESHOLD
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if not -1.0 < self.similarity_threshold <= 1.0:
            raise InvalidInputError(
                f"similarity threshold must be in (-1, 1], got {self.similarity_threshold}"
            )
        if self.max_attempts < 1:
            raise InvalidInputError("max_attempts must be >= 1")


@dataclass(frozen=True, eq=False)
class AnonymizerModel:
    gender: str
    pca: PcaModel
    gmm: GmmModel
    training_metadata: dict = field(default_factory=dict)
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.gmm.dim != self.pca.reduced_dim:
            raise InvalidInputError(
                f"GMM dimension {self.gmm.dim} does not match PCA reduced dimension "
                f"{self.pca.reduced_dim}"
            )


def train_anonymizer(pool: EmbeddingSet, retained_variance_target: float = DEFAULT_RETAINED_VARIANCE,
                     n_components: int = DEFAULT_N_COMPONENTS, seed: int = 0,
                     gender: str | None = None, restarts: int = 1) -> AnonymizerModel:
    """Fit PCA on the pool, then a GMM on the reduced coordinates.

    ``pool`` is normally a single gender stratum; pass ``gender`` explicitly
    when training an ``unspecified`` model on mixed data.  ``restarts > 1``
    re-runs EM with derived seeds and keeps the best final log-likelihood.
    """
    if len(pool) < max(n_components, 2):
        raise InvalidInputError(
            f"pool of {len(pool)} vectors is too small for {n_components} components"
        )
    if gender is None:
        strata = set(pool.genders)
        if len(strata) != 1:
            raise InvalidInputError(
                "pool mixes genders; split by gender first or pass gender= explicitly"
            )
        gender = strata.pop()
    pca = pca_fit(pool, retained_variance_target)
    reduced = pca_transform(pca, pool.matrix)
    gmm = gmm_fit(reduced, n_components, max_iterations=1000, tolerance=1e-16, seed=seed)
    for restart in range(1, restarts):
        candidate = gmm_fit(reduced, n_components, max_iterations=1000,
                            tolerance=1e-16, seed=derive_seed(seed, "restart", restart))
        if candidate.final_log_likelihood > gmm.final_log_likelihood:
            gmm = candidate
    metadata = {
        "n_training_vectors": len(pool),
        "retained_variance_target": float(retained_variance_target),
        "n_components": int(n_components),
        "seed": int(seed),
        "format_version": MODEL_FORMAT_VERSION,
    }
    return AnonymizerModel(gender=gender, pca=pca, gmm=gmm, training_metadata=metadata)


def train_per_gender(pool: EmbeddingSet, retained_variance_target: float = DEFAULT_RETAINED_VARIANCE,
                     n_components: int = DEFAULT_N_COMPONENTS, seed: int = 0,
                     restarts: int = 1) -> dict:
    """One model per gender stratum present in the pool.

    The ``unspecified`` stratum trains on the whole pool, since its members
    carry no gender information to condition on.
    """
    models = {}
    for gender, stratum in pool.by_gender().items():
        training = pool if gender == "unspecified" else stratum
        models[gender] = train_anonymizer(
            training, retained_variance_target, n_components,
            seed=derive_seed(seed, "train", gender), gender=gender, restarts=restarts,
        )
    return models


def generate_fakes(model: AnonymizerModel, n: int, seed: int = 0) -> np.ndarray:
    """n fake embeddings: GMM samples mapped back through the PCA inverse."""
    if n < 1:
        raise InvalidInputError("fake count must be >= 1")
    reduced = sample_with_rng(model.gmm, n, make_rng(seed))
    return pca_inverse_transform(model.pca, reduced)


def generate_fake(model: AnonymizerModel, seed: int = 0) -> np.ndarray:
    """One fake embedding in the original space."""
    return generate_fakes(model, 1, seed)[0]


def generate_fake_fd(model: AnonymizerModel, original, config: FdConfig | None = None,
                     seed: int = 0, return_attempts: bool = False):
    """Fake embedding with forced dissimilarity against ``original``.

    Draws are repeated on one seeded stream until the cosine similarity to
    the original is below ``config.similarity_threshold``; the first draw
    equals ``generate_fake(model, seed)``.  Raises RejectionExhaustedError
    after ``config.max_attempts`` rejected draws.
    """
    config = config or FdConfig()
    original = np.asarray(original, dtype=np.float64)
    if original.shape != (model.pca.input_dim,):
        raise InvalidInputError(
            f"original must be a vector of length {model.pca.input_dim}"
        )
    rng = make_rng(seed)
    similarity = None
    for attempt in range(1, config.max_attempts + 1):
        reduced = sample_with_rng(model.gmm, 1, rng)
        fake = pca_inverse_transform(model.pca, reduced)[0]
        similarity = cosine_similarity(fake, original)
        if similarity < config.similarity_threshold:
            return (fake, attempt) if return_attempts else fake
    raise RejectionExhaustedError(config.max_attempts, similarity)


def baseline_anonymize(pool: EmbeddingSet, original, n_far: int = 200,
                       n_avg: int = 100, seed: int = 0) -> np.ndarray:
    """Pool-averaging fake: mean of ``n_avg`` randomly chosen vectors among
    the ``n_far`` farthest from ``original`` by cosine distance.

    The pool must hold at least ``n_far`` vectors; no silent clamping.
    """
    if not n_far >= n_avg >= 1:
        raise InvalidInputError(f"need n_far >= n_avg >= 1, got {n_far}, {n_avg}")
    if len(pool) < n_far:
        raise InvalidInputError(
            f"pool has {len(pool)} vectors but n_far={n_far}; refusing to clamp"
        )
    original = np.asarray(original, dtype=np.float64)
    matrix = pool.matrix
    if original.shape != (matrix.shape[1],):
        raise InvalidInputError(
            f"original must be a vector of length {matrix.shape[1]}"
        )
    norm = float(np.linalg.norm(original))
    if norm == 0.0:
        raise InvalidInputError("original vector has zero norm")
    similarities = unit_rows(matrix) @ (original / norm)
    # ascending similarity == descending cosine distance; stable sort keeps
    # tie order by pool index
    farthest = np.argsort(similarities, kind="stable")[:n_far]
    rng = make_rng(seed)
    chosen = farthest[rng.choice_without_replacement(n_far, n_avg)]
    return matrix[chosen].mean(axis=0)


# ---------------------------------------------------------------------------
# set-level anonymization (one fake per speaker id, or per utterance)

def anonymize_set(eset: EmbeddingSet, models: dict, seed: int = 0,
                  per_speaker: bool = True, fd: FdConfig | None = None) -> EmbeddingSet:
    """Replace every vector with a generated fake.

    ``models`` maps gender -> AnonymizerModel; an embedding uses its own
    stratum's model, falling back to an ``unspecified`` model if present.
    In per-speaker mode all utterances of one speaker share a fake (seed
    derived from the speaker id); per-utterance mode draws one fake per
    utterance.  With ``fd`` set, each fake is forced dissimilar to the
    speaker's first utterance vector (or to the utterance itself in
    per-utterance mode).
    """
    def model_for(gender):
        model = models.get(gender) or models.get("unspecified")
        if model is None:
            raise InvalidInputError(f"no anonymizer model for gender {gender!r}")
        if model.pca.input_dim != eset.dimension:
            raise InvalidInputError(
                f"model expects dimension {model.pca.input_dim}, data has {eset.dimension}"
            )
        return model

    fakes = np.empty((len(eset), eset.dimension))
    if per_speaker:
        first_row = {}
        for i, emb in enumerate(eset):
            first_row.setdefault(emb.speaker_id, i)
        cache = {}
        for i, emb in enumerate(eset):
            if emb.speaker_id not in cache:
                model = model_for(emb.gender)
                fake_seed = derive_seed(seed, "speaker", emb.speaker_id)
                anchor = eset.embeddings[first_row[emb.speaker_id]].vector
                if fd is not None:
                    cache[emb.speaker_id] = generate_fake_fd(model, anchor, fd, fake_seed)
                else:
                    cache[emb.speaker_id] = generate_fake(model, fake_seed)
            fakes[i] = cache[emb.speaker_id]
    else:
        for i, emb in enumerate(eset):
            model = model_for(emb.gender)
            fake_seed = derive_seed(seed, "utterance", emb.utterance_id)
            if fd is not None:
                fakes[i] = generate_fake_fd(model, emb.vector, fd, fake_seed)
            else:
                fakes[i] = generate_fake(model, fake_seed)
    return eset.with_vectors(fakes)


def baseline_anonymize_set(eset: EmbeddingSet, pool: EmbeddingSet, seed: int = 0,
                           per_speaker: bool = True, n_far: int = 200,
                           n_avg: int = 100) -> EmbeddingSet:
    """Pool-averaging counterpart of :func:`anonymize_set`.

    The anchor vector per speaker is the speaker's first utterance in set
    order; the pool is used unsplit.
    """
    if pool.dimension != eset.dimension:
        raise InvalidInputError("pool and input dimensions differ")
    fakes = np.empty((len(eset), eset.dimension))
    if per_speaker:
        cache = {}
        for i, emb in enumerate(eset):
            if emb.speaker_id not in cache:
                fake_seed = derive_seed(seed, "speaker", emb.speaker_id)
                cache[emb.speaker_id] = baseline_anonymize(
                    pool, emb.vector, n_far=n_far, n_avg=n_avg, seed=fake_seed
                )
            fakes[i] = cache[emb.speaker_id]
    else:
        for i, emb in enumerate(eset):
            fake_seed = derive_seed(seed, "utterance", emb.utterance_id)
            fakes[i] = baseline_anonymize(
                pool, emb.vector, n_far=n_far, n_avg=n_avg, seed=fake_seed
            )
    return eset.with_vectors(fakes)


def make_generative_strategy(models: dict, per_speaker: bool = True,
                             fd: FdConfig | None = None):
    """Strategy callable (set, seed) -> set for linkage scenarios."""
    def strategy(eset, seed):
        return anonymize_set(eset, models, seed=seed, per_speaker=per_speaker, fd=fd)
    return strategy


def make_baseline_strategy(pool: EmbeddingSet, per_speaker: bool = True,
                           n_far: int = 200, n_avg: int = 100):
    def strategy(eset, seed):
        return baseline_anonymize_set(eset, pool, seed=seed, per_speaker=per_speaker,
                                      n_far=n_far, n_avg=n_avg)
    return strategy


# ---------------------------------------------------------------------------
# persistence

_PCA_FIELDS = ("input_dim", "reduced_dim", "mean", "components",
               "explained_variance_ratio", "retained_variance_target")
_GMM_FIELDS = ("n_components", "dim", "weights", "means", "variances",
               "final_log_likelihood", "n_iterations_run")
_META_FIELDS = ("n_training_vectors", "retained_variance_target", "n_components",
                "seed", "format_version")


def save_model(model: AnonymizerModel, path) -> None:
    """Write the model as JSON; floats carry 17 significant digits.

    The file holds only O(K*m + m*D) parameters; training vectors are never
    serialized.
    """
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "gender": model.gender,
        "pca": {
            "input_dim": model.pca.input_dim,
            "reduced_dim": model.pca.reduced_dim,
            "mean": model.pca.mean,
            "components": model.pca.components,
            "explained_variance_ratio": model.pca.explained_variance_ratio,
            "retained_variance_target": model.pca.retained_variance_target,
        },
        "gmm": {
            "n_components": model.gmm.n_components,
            "dim": model.gmm.dim,
            "weights": model.gmm.weights,
            "means": model.gmm.means,
            "variances": model.gmm.variances,
            "final_log_likelihood": model.gmm.final_log_likelihood,
            "n_iterations_run": model.gmm.n_iterations_run,
        },
        "training_metadata": dict(model.training_metadata),
        "rng_algorithm": model.rng_algorithm,
    }
    atomic_write_text(path, dumps_json(payload, indent=1) + "\n")


def _require(mapping: dict, key: str, prefix: str = "") -> object:
    if not isinstance(mapping, dict) or key not in mapping:
        raise ModelFormatError("missing field", field=f"{prefix}{key}")
    return mapping[key]


def load_model(path) -> AnonymizerModel:
    """Read a model written by :func:`save_model`.

    Raises ModelFormatError naming the first missing field, or on an
    unsupported format version.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON ({exc})") from None
    version = _require(payload, "format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version!r}, expected {MODEL_FORMAT_VERSION!r}"
        )
    gender = _require(payload, "gender")
    pca_raw = _require(payload, "pca")
    gmm_raw = _require(payload, "gmm")
    meta = _require(payload, "training_metadata")
    rng_algorithm = _require(payload, "rng_algorithm")
    for key in _PCA_FIELDS:
        _require(pca_raw, key, "pca.")
    for key in _GMM_FIELDS:
        _require(gmm_raw, key, "gmm.")
    for key in _META_FIELDS:
        _require(meta, key, "training_metadata.")
    if rng_algorithm != RNG_ALGORITHM:
        raise ModelFormatError(
            f"model was sampled with RNG {rng_algorithm!r}; this build provides {RNG_ALGORITHM!r}"
        )
    try:
        pca = PcaModel(
            input_dim=int(pca_raw["input_dim"]),
            reduced_dim=int(pca_raw["reduced_dim"]),
            mean=np.asarray(pca_raw["mean"], dtype=np.float64),
            components=np.asarray(pca_raw["components"], dtype=np.float64),
            explained_variance_ratio=np.asarray(
                pca_raw["explained_variance_ratio"], dtype=np.float64),
            retained_variance_target=float(pca_raw["retained_variance_target"]),
        )
        gmm = GmmModel(
            n_components=int(gmm_raw["n_components"]),
            dim=int(gmm_raw["dim"]),
            weights=np.asarray(gmm_raw["weights"], dtype=np.float64),
            means=np.asarray(gmm_raw["means"], dtype=np.float64),
            variances=np.asarray(gmm_raw["variances"], dtype=np.float64),
            final_log_likelihood=float(gmm_raw["final_log_likelihood"]),
            n_iterations_run=int(gmm_raw["n_iterations_run"]),
        )
        model = AnonymizerModel(
            gender=str(gender), pca=pca, gmm=gmm,
            training_metadata=dict(meta), rng_algorithm=str(rng_algorithm),
        )
    except (InvalidInputError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"inconsistent model contents ({exc})") from None
    if pca.components.shape != (pca.reduced_dim, pca.input_dim):
        raise ModelFormatError("inconsistent model contents", field="pca.components")
    if gmm.means.shape != (gmm.n_components, gmm.dim):
        raise ModelFormatError("inconsistent model contents", field="gmm.means")
    return model
