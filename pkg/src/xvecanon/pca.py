"""Principal-component transform with a retained-variance target.

Fitting decomposes the centered data matrix by SVD; eigenvalues of the
sample covariance use the unbiased (n-1) denominator, and explained
variance ratios are taken over all min(D, n-1) candidate components.
Component signs are canonicalized (largest-magnitude entry positive,
lowest index on ties) so repeated fits are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet
from .errors import DegenerateDataError, InvalidInputError

# Eigenvalues below this fraction of the largest are treated as zero
# variance and never retained.
_RANK_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PcaModel:
    input_dim: int
    reduced_dim: int
    mean: np.ndarray                      # (D,)
    components: np.ndarray                # (m, D), orthonormal rows
    explained_variance_ratio: np.ndarray  # (m,), nonincreasing positives
    retained_variance_target: float

    def __post_init__(self):
        for name in ("mean", "components", "explained_variance_ratio"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, EmbeddingSet):
        return data.matrix
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise InvalidInputError("training data must be a 2-D matrix or an EmbeddingSet")
    return matrix


def pca_fit(data, retained_variance_target: float) -> PcaModel:
    """Fit a PCA keeping the smallest m whose cumulative ratio meets the target.

    Raises DegenerateDataError for fewer than 2 samples or zero-variance data.
    """
    if not 0.0 < retained_variance_target <= 1.0:
        raise InvalidInputError(
            f"retained variance target must be in (0, 1], got {retained_variance_target}"
        )
    matrix = _as_matrix(data)
    n, dim = matrix.shape
    if n < 2:
        raise DegenerateDataError(f"PCA needs at least 2 samples, got {n}")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    n_candidates = min(dim, n - 1)
    eigvals = (singular[:n_candidates] ** 2) / (n - 1)
    scale = max(1.0, float(np.max(np.abs(matrix)))) ** 2
    if eigvals[0] <= 1e-18 * scale:
        raise DegenerateDataError("all samples are identical; PCA is undefined")
    ratios = eigvals / eigvals.sum()
    n_keepable = int(np.sum(eigvals >= _RANK_TOLERANCE * eigvals[0]))
    cumulative = np.cumsum(ratios)
    reduced = int(np.searchsorted(cumulative, retained_variance_target, side="left")) + 1
    reduced = min(reduced, n_keepable)
    components = vt[:reduced].copy()
    for row in range(reduced):
        pivot = int(np.argmax(np.abs(components[row])))
        if components[row, pivot] < 0:
            components[row] = -components[row]
    return PcaModel(
        input_dim=dim,
        reduced_dim=reduced,
        mean=mean,
        components=components,
        explained_variance_ratio=ratios[:reduced],
        retained_variance_target=float(retained_variance_target),
    )


def pca_transform(model: PcaModel, x) -> np.ndarray:
    """Project into the reduced space: components @ (x - mean).

    Accepts a single D-vector or an (n, D) batch.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise InvalidInputError(
            f"expected vectors of length {model.input_dim}, got {x.shape[-1]}"
        )
    return (x - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, z) -> np.ndarray:
    """Reconstruct into the original space: mean + z @ components."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.reduced_dim:
        raise InvalidInputError(
            f"expected reduced vectors of length {model.reduced_dim}, got {z.shape[-1]}"
        )
    return z @ model.components + model.mean
