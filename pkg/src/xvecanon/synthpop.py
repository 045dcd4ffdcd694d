"""Deterministic synthetic speaker-embedding populations.

A population is built per gender from ``n_modes`` speaker-community
centers drawn on the sphere of radius ``between_speaker_scale``.  The
centers cluster around a random axis (unit axis plus a unit random
offset, re-normalized), which gives every pair of vectors a shared
positive similarity component, as real embedding populations show.
Speaker means scatter around their center inside a low-dimensional
per-gender subspace, with a per-mode scatter radius ramping from 0.25 to
0.55 of the between-speaker scale so that community clouds have varied
tightness.  Utterances add isotropic noise of norm ``within_speaker_scale``.

Everything is drawn from one seeded stream in a fixed order, so a spec
reproduces bit-identical populations.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .embeddings import Embedding, EmbeddingSet
from .errors import InvalidInputError
from .seeding import SeededRng, make_rng

_AXIS_SPREAD = 1.0
_SCATTER_SUBSPACE_DIM = 8
_SCATTER_RANGE = (0.25, 0.55)


@dataclass(frozen=True)
class PopulationSpec:
    n_speakers: int = 500
    utterances_per_speaker: int = 4
    dim: int = 64
    n_modes: int = 5
    between_speaker_scale: float = 10.0
    within_speaker_scale: float = 1.0
    gender_fractions: tuple = (0.5, 0.5)
    seed: int = 0

    def __post_init__(self):
        if min(self.n_speakers, self.utterances_per_speaker, self.dim, self.n_modes) < 1:
            raise InvalidInputError("all population counts must be >= 1")
        if self.between_speaker_scale <= 0 or self.within_speaker_scale < 0:
            raise InvalidInputError("scales must be positive (within may be zero)")
        male, female = self.gender_fractions
        if male < 0 or female < 0 or abs(male + female - 1.0) > 1e-9:
            raise InvalidInputError("gender fractions must be nonnegative and sum to 1")
        if self.within_speaker_scale >= self.between_speaker_scale:
            warnings.warn(
                "within_speaker_scale >= between_speaker_scale: speakers will "
                "not be separable", stacklevel=2)


def _orthonormal_rows(rng: SeededRng, n_rows: int, dim: int) -> np.ndarray:
    """Random orthonormal rows via modified Gram-Schmidt (no LAPACK,
    bit-stable across library versions)."""
    basis = np.empty((n_rows, dim))
    count = 0
    while count < n_rows:
        candidate = rng.normal(dim)
        for row in basis[:count]:
            candidate = candidate - np.dot(candidate, row) * row
        norm = float(np.linalg.norm(candidate))
        if norm > 1e-8:
            basis[count] = candidate / norm
            count += 1
    return basis


def _gender_geometry(rng: SeededRng, spec: PopulationSpec):
    """Mode centers, scatter basis and per-mode scatter sigmas for one gender."""
    axis = rng.normal(spec.dim)
    axis /= np.linalg.norm(axis)
    offsets = rng.normal((spec.n_modes, spec.dim))
    offsets /= np.linalg.norm(offsets, axis=1, keepdims=True)
    raw = axis[None, :] + _AXIS_SPREAD * offsets
    modes = raw / np.linalg.norm(raw, axis=1, keepdims=True) * spec.between_speaker_scale
    subspace_dim = min(_SCATTER_SUBSPACE_DIM, spec.dim)
    basis = _orthonormal_rows(rng, subspace_dim, spec.dim)
    lo, hi = _SCATTER_RANGE
    radii = np.linspace(lo, hi, spec.n_modes) * spec.between_speaker_scale
    sigmas = radii / np.sqrt(subspace_dim)
    return modes, basis, sigmas


def generate_population(spec: PopulationSpec) -> EmbeddingSet:
    """Generate the labeled population described by ``spec``."""
    rng = make_rng(spec.seed)
    geometry = {g: _gender_geometry(rng, spec) for g in ("male", "female")}

    n_male = int(round(spec.gender_fractions[0] * spec.n_speakers))
    genders = ["male"] * n_male + ["female"] * (spec.n_speakers - n_male)

    mode_choice = rng.integers(spec.n_modes, spec.n_speakers)
    subspace_dim = min(_SCATTER_SUBSPACE_DIM, spec.dim)
    scatter = rng.normal((spec.n_speakers, subspace_dim))
    n_utts = spec.n_speakers * spec.utterances_per_speaker
    noise = rng.normal((n_utts, spec.dim)) * (spec.within_speaker_scale / np.sqrt(spec.dim))

    spk_width = max(4, len(str(spec.n_speakers - 1)))
    utt_width = max(2, len(str(spec.utterances_per_speaker - 1)))
    embeddings = []
    row = 0
    for i in range(spec.n_speakers):
        gender = genders[i]
        modes, basis, sigmas = geometry[gender]
        k = mode_choice[i]
        speaker_mean = modes[k] + (scatter[i] * sigmas[k]) @ basis
        speaker_id = f"s{i:0{spk_width}d}"
        for j in range(spec.utterances_per_speaker):
            embeddings.append(Embedding(
                utterance_id=f"{speaker_id}_u{j:0{utt_width}d}",
                speaker_id=speaker_id,
                gender=gender,
                vector=speaker_mean + noise[row],
            ))
            row += 1
    return EmbeddingSet(tuple(embeddings))
