"""Diagonal-covariance Gaussian mixtures: EM fitting and seeded sampling.

EM details, chosen for reproducibility:

* means are seeded k-means++ style (squared-distance weighted sampling)
  from the training data using the caller's seed; initial weights are
  uniform and initial variances equal the global per-dimension variance;
* every M-step floors variances at 1e-6 of the global per-dimension
  variance so components cannot collapse onto single points;
* convergence tests the relative change of the mean per-sample
  log-likelihood, |LL_t - LL_{t-1}| / max(1, |LL_t|) < tolerance.  With
  the default tolerance of 1e-16 this effectively runs until the
  likelihood stagnates in double precision or the iteration cap is hit.

All reductions run in a fixed order, so a fit is bit-reproducible for a
given (data, n_components, seed) regardless of BLAS thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .seeding import SeededRng, make_rng

_LOG_2PI = float(np.log(2.0 * np.pi))
_VARIANCE_FLOOR_FRACTION = 1e-6


@dataclass(frozen=True, eq=False)
class GmmModel:
    n_components: int
    dim: int
    weights: np.ndarray         # (K,), nonnegative, sums to 1
    means: np.ndarray           # (K, m)
    variances: np.ndarray       # (K, m), positive diagonals
    final_log_likelihood: float
    n_iterations_run: int
    log_likelihood_trace: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        for name in ("weights", "means", "variances"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if abs(float(self.weights.sum()) - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise InvalidInputError("mixture weights must be nonnegative and sum to 1")


def _validate_data(data, n_components: int) -> np.ndarray:
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise InvalidInputError("GMM training data must be an (n, m) matrix")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("GMM training data contains non-finite values")
    if n_components < 1:
        raise InvalidInputError("n_components must be >= 1")
    if matrix.shape[0] < n_components:
        raise InvalidInputError(
            f"need at least n_components={n_components} samples, got {matrix.shape[0]}"
        )
    return matrix


def _log_densities(x: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Per-sample, per-component diagonal Gaussian log densities, (n, K)."""
    inv = 1.0 / variances                                     # (K, m)
    const = -0.5 * (means.shape[1] * _LOG_2PI
                    + np.log(variances).sum(axis=1)
                    + (means * means * inv).sum(axis=1))      # (K,)
    return const + x @ (means * inv).T - 0.5 * (x * x) @ inv.T


def _log_responsibilities(x, weights, means, variances):
    """Normalized log responsibilities and the mean per-sample log-likelihood."""
    with np.errstate(divide="ignore"):
        joint = _log_densities(x, means, variances) + np.log(weights)
    peak = joint.max(axis=1, keepdims=True)
    log_norm = peak[:, 0] + np.log(np.exp(joint - peak).sum(axis=1))
    return joint - log_norm[:, None], float(log_norm.mean())


def _kmeanspp_centers(x: np.ndarray, k: int, rng: SeededRng) -> np.ndarray:
    """k-means++ seeding: squared-distance-weighted center selection."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    if k == 1:
        return centers
    dist2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = dist2.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = int(rng.categorical(dist2, 1)[0])
        centers[j] = x[idx]
        dist2 = np.minimum(dist2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def gmm_fit(data, n_components: int, max_iterations: int = 1000,
            tolerance: float = 1e-16, seed: int = 0) -> GmmModel:
    """Fit a diagonal-covariance GMM by EM; bit-reproducible per seed."""
    x = _validate_data(data, n_components)
    n, dim = x.shape
    rng = make_rng(seed)

    global_var = x.var(axis=0)
    floor = _VARIANCE_FLOOR_FRACTION * global_var
    floor[floor <= 0.0] = 1e-12   # guard for zero-variance dimensions

    means = _kmeanspp_centers(x, n_components, rng)
    weights = np.full(n_components, 1.0 / n_components)
    variances = np.tile(np.maximum(global_var, floor), (n_components, 1))

    log_resp, log_like = _log_responsibilities(x, weights, means, variances)
    trace = [log_like]
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        resp = np.exp(log_resp)                       # (n, K)
        counts = resp.sum(axis=0)
        counts = np.maximum(counts, 1e-300)
        weights = counts / n
        weights = weights / weights.sum()
        means = (resp.T @ x) / counts[:, None]
        diff = x[:, None, :] - means[None, :, :]
        variances = np.einsum("nk,nkm->km", resp, diff * diff) / counts[:, None]
        variances = np.maximum(variances, floor)
        log_resp, new_log_like = _log_responsibilities(x, weights, means, variances)
        trace.append(new_log_like)
        if abs(new_log_like - log_like) / max(1.0, abs(new_log_like)) < tolerance:
            log_like = new_log_like
            break
        log_like = new_log_like

    return GmmModel(
        n_components=n_components,
        dim=dim,
        weights=weights,
        means=means,
        variances=variances,
        final_log_likelihood=log_like,
        n_iterations_run=iterations,
        log_likelihood_trace=tuple(trace),
    )


def gmm_log_likelihood(model: GmmModel, x) -> float:
    """log sum_k w_k N(x; mean_k, diag var_k), log-sum-exp stabilized."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise InvalidInputError(f"expected a vector of length {model.dim}")
    with np.errstate(divide="ignore"):
        joint = (_log_densities(x[None, :], model.means, model.variances)[0]
                 + np.log(model.weights))
    peak = joint.max()
    return float(peak + np.log(np.exp(joint - peak).sum()))


def gmm_responsibilities(model: GmmModel, data) -> np.ndarray:
    """Posterior component probabilities per sample, (n, K); rows sum to 1.

    Debug hook used by the test suite to audit the E-step.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.dim:
        raise InvalidInputError(f"expected vectors of length {model.dim}")
    log_resp, _ = _log_responsibilities(x, model.weights, model.means, model.variances)
    return np.exp(log_resp)


def sample_with_rng(model: GmmModel, n: int, rng: SeededRng) -> np.ndarray:
    """Draw n samples consuming randomness from an existing stream."""
    picks = rng.categorical(model.weights, n)
    noise = rng.normal((n, model.dim))
    return model.means[picks] + np.sqrt(model.variances[picks]) * noise


def gmm_sample(model: GmmModel, n: int, seed: int = 0) -> np.ndarray:
    """Draw n samples: component ~ Categorical(weights), then the diagonal
    Gaussian.  Same (model, n, seed) yields a bit-identical matrix."""
    if n < 1:
        raise InvalidInputError("sample count must be >= 1")
    return sample_with_rng(model, n, make_rng(seed))
