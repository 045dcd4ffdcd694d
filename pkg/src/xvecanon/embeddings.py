"""Labeled speaker-embedding vectors and their file formats.

The canonical on-disk format is CSV with header
``utt_id,spk_id,gender,v0,...,v{D-1}`` (UTF-8, LF line endings, ``.``
decimal separator).  A Kaldi-style text vector format
(``<utt_id>  [ v0 v1 ... ]``) is supported for interop; speaker ids and
genders for it come from an optional sidecar CSV (``utt_id,spk_id,gender``)
and default to the utterance id / ``unspecified`` otherwise.

Lines starting with ``#`` are treated as comments by both readers, so
files carrying a provenance header (``# seed=...``) round-trip cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError
from .serialize import atomic_write_text, fmt_float

GENDERS = ("male", "female", "unspecified")

FORMAT_CSV = "csv"
FORMAT_KALDI_TEXT = "kaldi_text"


def cosine_similarity(a, b) -> float:
    """Cosine similarity <a,b> / (|a||b|), in [-1, 1].

    Raises InvalidInputError on length mismatch or zero-norm input.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise InvalidInputError(
            f"cosine_similarity needs two equal-length vectors, got shapes {a.shape} and {b.shape}"
        )
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InvalidInputError("cosine_similarity is undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Rows scaled to unit Euclidean norm; rejects zero rows."""
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise InvalidInputError("zero-norm row in vector matrix")
    return matrix / norms


@dataclass(frozen=True, eq=False)
class Embedding:
    """One labeled D-dimensional speaker-embedding vector."""

    utterance_id: str
    speaker_id: str
    gender: str
    vector: np.ndarray

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise InvalidInputError(
                f"gender must be one of {GENDERS}, got {self.gender!r}"
            )
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size < 1:
            raise InvalidInputError("embedding vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(vec)):
            raise InvalidInputError(
                f"embedding {self.utterance_id!r} has non-finite entries"
            )
        if float(np.linalg.norm(vec)) == 0.0:
            raise InvalidInputError(
                f"embedding {self.utterance_id!r} has zero norm"
            )
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)

    @property
    def dimension(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Ordered collection of embeddings sharing one dimension.

    Utterance ids are unique within a set.  Instances are immutable and
    safe to share across threads.
    """

    embeddings: tuple
    dimension: int = field(default=0)

    def __post_init__(self):
        embs = tuple(self.embeddings)
        if not embs:
            raise InvalidInputError("EmbeddingSet must contain at least one embedding")
        dim = embs[0].dimension
        seen = set()
        for e in embs:
            if e.dimension != dim:
                raise InvalidInputError(
                    f"dimension mismatch: {e.utterance_id!r} has {e.dimension}, expected {dim}"
                )
            if e.utterance_id in seen:
                raise InvalidInputError(f"duplicate utterance id {e.utterance_id!r}")
            seen.add(e.utterance_id)
        object.__setattr__(self, "embeddings", embs)
        object.__setattr__(self, "dimension", dim)

    def __len__(self) -> int:
        return len(self.embeddings)

    def __iter__(self):
        return iter(self.embeddings)

    @property
    def matrix(self) -> np.ndarray:
        """(n, D) matrix of vectors in set order."""
        return np.stack([e.vector for e in self.embeddings])

    @property
    def utterance_ids(self) -> list:
        return [e.utterance_id for e in self.embeddings]

    @property
    def speaker_ids(self) -> list:
        return [e.speaker_id for e in self.embeddings]

    @property
    def genders(self) -> list:
        return [e.gender for e in self.embeddings]

    def subset(self, indices) -> "EmbeddingSet":
        return EmbeddingSet(tuple(self.embeddings[i] for i in indices))

    def by_gender(self) -> dict:
        """Split into per-gender strata, keyed by gender, preserving order.

        Only genders actually present appear; iteration order follows the
        canonical order male, female, unspecified.
        """
        strata = {}
        for g in GENDERS:
            members = [e for e in self.embeddings if e.gender == g]
            if members:
                strata[g] = EmbeddingSet(tuple(members))
        return strata

    def with_vectors(self, vectors: np.ndarray) -> "EmbeddingSet":
        """Copy of the set with every vector replaced row-for-row."""
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.shape[0] != len(self.embeddings):
            raise InvalidInputError("replacement matrix has wrong number of rows")
        return EmbeddingSet(
            tuple(
                Embedding(e.utterance_id, e.speaker_id, e.gender, vectors[i])
                for i, e in enumerate(self.embeddings)
            )
        )


def _parse_float(token: str, path, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", path, line_no) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", path, line_no)
    return value


def _read_sidecar(path) -> dict:
    """Sidecar CSV mapping utt_id -> (spk_id, gender)."""
    mapping = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split(",")
        if cells[0] == "utt_id":
            continue
        if len(cells) != 3:
            raise ParseError(f"sidecar row needs 3 cells, got {len(cells)}", path, i)
        utt, spk, gender = (c.strip() for c in cells)
        if gender not in GENDERS:
            raise ParseError(f"unknown gender {gender!r}", path, i)
        mapping[utt] = (spk, gender)
    return mapping


def _read_csv(path) -> EmbeddingSet:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = None
    embeddings = []
    expected_cells = None
    for i, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            if len(header) < 4 or header[:3] != ["utt_id", "spk_id", "gender"]:
                raise ParseError(
                    "header must start with utt_id,spk_id,gender,v0,...", path, i
                )
            for j, name in enumerate(header[3:]):
                if name != f"v{j}":
                    raise ParseError(f"expected column v{j}, got {name!r}", path, i)
            expected_cells = len(header)
            continue
        if len(cells) != expected_cells:
            raise ParseError(
                f"row has {len(cells)} cells, expected {expected_cells}", path, i
            )
        utt, spk, gender = cells[0], cells[1], cells[2]
        if gender not in GENDERS:
            raise ParseError(f"unknown gender {gender!r}", path, i)
        vector = [_parse_float(tok, path, i) for tok in cells[3:]]
        try:
            embeddings.append(Embedding(utt, spk, gender, np.array(vector)))
        except InvalidInputError as exc:
            raise ParseError(str(exc), path, i) from None
    if header is None:
        raise ParseError("empty file", path, None)
    if not embeddings:
        raise ParseError("no data rows", path, None)
    try:
        return EmbeddingSet(tuple(embeddings))
    except InvalidInputError as exc:
        raise ParseError(str(exc), path, None) from None


def _read_kaldi_text(path, sidecar=None) -> EmbeddingSet:
    mapping = _read_sidecar(sidecar) if sidecar is not None else {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    embeddings = []
    for i, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 4 or tokens[1] != "[" or tokens[-1] != "]":
            raise ParseError("expected '<utt_id>  [ v0 v1 ... ]'", path, i)
        utt = tokens[0]
        vector = [_parse_float(tok, path, i) for tok in tokens[2:-1]]
        spk, gender = mapping.get(utt, (utt, "unspecified"))
        try:
            embeddings.append(Embedding(utt, spk, gender, np.array(vector)))
        except InvalidInputError as exc:
            raise ParseError(str(exc), path, i) from None
    if not embeddings:
        raise ParseError("empty file", path, None)
    try:
        return EmbeddingSet(tuple(embeddings))
    except InvalidInputError as exc:
        raise ParseError(str(exc), path, None) from None


def read_embeddings(path, fmt: str = FORMAT_CSV, sidecar=None) -> EmbeddingSet:
    """Read an embedding file in ``csv`` or ``kaldi_text`` format.

    Parse failures raise :class:`ParseError` naming the offending line.
    """
    if fmt == FORMAT_CSV:
        return _read_csv(path)
    if fmt == FORMAT_KALDI_TEXT:
        return _read_kaldi_text(path, sidecar=sidecar)
    raise InvalidInputError(f"unknown format {fmt!r}")


def write_embeddings(eset: EmbeddingSet, path, fmt: str = FORMAT_CSV,
                     sidecar=None, header_comment: str | None = None) -> None:
    """Write an embedding set; floats carry 17 significant digits.

    ``header_comment`` (without the leading ``#``) is emitted as the first
    line when given.  For ``kaldi_text``, labels can be preserved by also
    writing a ``sidecar`` mapping file.
    """
    if not isinstance(eset, EmbeddingSet) or len(eset) == 0:
        raise InvalidInputError("cannot write an empty embedding set")
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    if fmt == FORMAT_CSV:
        dim = eset.dimension
        lines.append("utt_id,spk_id,gender," + ",".join(f"v{j}" for j in range(dim)))
        for e in eset:
            values = ",".join(fmt_float(v) for v in e.vector)
            lines.append(f"{e.utterance_id},{e.speaker_id},{e.gender},{values}")
    elif fmt == FORMAT_KALDI_TEXT:
        for e in eset:
            values = " ".join(fmt_float(v) for v in e.vector)
            lines.append(f"{e.utterance_id}  [ {values} ]")
    else:
        raise InvalidInputError(f"unknown format {fmt!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    if sidecar is not None:
        side_lines = ["utt_id,spk_id,gender"]
        side_lines += [f"{e.utterance_id},{e.speaker_id},{e.gender}" for e in eset]
        atomic_write_text(sidecar, "\n".join(side_lines) + "\n")
