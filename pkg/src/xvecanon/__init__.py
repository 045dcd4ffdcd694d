"""Speaker-embedding anonymization toolkit.

Train a per-gender PCA + diagonal-GMM population model, sample fake
embeddings from it (optionally forced dissimilar to the original voice),
and evaluate anonymization quality through cross-similarity distribution
matching (KS statistic) and attacker-linkage metrics (EER, Cllr_min).
"""

__version__ = "0.1.0"

from .anonymize import (
    AnonymizerModel,
    FdConfig,
    anonymize_set,
    baseline_anonymize,
    baseline_anonymize_set,
    generate_fake,
    generate_fake_fd,
    generate_fakes,
    load_model,
    make_baseline_strategy,
    make_generative_strategy,
    save_model,
    train_anonymizer,
    train_per_gender,
)
from .embeddings import (
    GENDERS,
    Embedding,
    EmbeddingSet,
    cosine_similarity,
    read_embeddings,
    write_embeddings,
)
from .errors import (
    DegenerateDataError,
    InvalidInputError,
    ModelFormatError,
    ParseError,
    RejectionExhaustedError,
    XvecAnonError,
)
from .gmm import (
    GmmModel,
    gmm_fit,
    gmm_log_likelihood,
    gmm_responsibilities,
    gmm_sample,
)
from .metrics import (
    ScoreSet,
    SimilaritySample,
    SweepCell,
    SweepResult,
    cllr,
    cllr_min,
    cosine_similarity_matrix,
    cross_similarities,
    ecdf_eval,
    ecdf_points,
    eer,
    ks_statistic,
    linkage_scenario,
    parameter_sweep,
    split_speakers,
)
from .pca import PcaModel, pca_fit, pca_inverse_transform, pca_transform
from .seeding import RNG_ALGORITHM, SeededRng, derive_seed, make_rng
from .synthpop import PopulationSpec, generate_population

__all__ = [
    "AnonymizerModel",
    "DegenerateDataError",
    "Embedding",
    "EmbeddingSet",
    "FdConfig",
    "GENDERS",
    "GmmModel",
    "InvalidInputError",
    "ModelFormatError",
    "ParseError",
    "PcaModel",
    "PopulationSpec",
    "RNG_ALGORITHM",
    "RejectionExhaustedError",
    "ScoreSet",
    "SeededRng",
    "SimilaritySample",
    "SweepCell",
    "SweepResult",
    "XvecAnonError",
    "anonymize_set",
    "baseline_anonymize",
    "baseline_anonymize_set",
    "cllr",
    "cllr_min",
    "cosine_similarity",
    "cosine_similarity_matrix",
    "cross_similarities",
    "derive_seed",
    "ecdf_eval",
    "ecdf_points",
    "eer",
    "generate_fake",
    "generate_fake_fd",
    "generate_fakes",
    "generate_population",
    "gmm_fit",
    "gmm_log_likelihood",
    "gmm_responsibilities",
    "gmm_sample",
    "ks_statistic",
    "linkage_scenario",
    "load_model",
    "make_baseline_strategy",
    "make_generative_strategy",
    "make_rng",
    "parameter_sweep",
    "pca_fit",
    "pca_inverse_transform",
    "pca_transform",
    "read_embeddings",
    "save_model",
    "split_speakers",
    "train_anonymizer",
    "train_per_gender",
    "write_embeddings",
]
