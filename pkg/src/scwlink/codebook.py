"""Strongly constant-weight (SCW) codebooks over CSK symbol alphabets.

An SCW codebook fixes, for every codeword, how many times each symbol level
appears.  With a binary alphabet this reduces to the classical constant-weight
(CW) codes.  This module enumerates full codebooks in lexicographic order,
samples partial codebooks, and computes rate and distance-spectrum statistics.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "DEFAULT_ENUMERATION_CAP",
    "Codebook",
    "CodebookError",
    "CodeRateReport",
    "Codeword",
    "EnumerationCapError",
    "SymbolAlphabet",
    "WeightVector",
    "code_rate",
    "codebook_size",
    "distance_spectrum",
    "enumerate_full_scw",
    "sample_partial_codebook",
    "validate_scw",
]

#: Refuse full enumeration above this many codewords unless overridden.
DEFAULT_ENUMERATION_CAP = 1_000_000

# Pairwise distance computation is O(M^2 K); refuse beyond this size.
_SPECTRUM_PAIRWISE_CAP = 4096

#: A codeword is a tuple of alphabet indices (not symbol values).
Codeword = tuple[int, ...]


class CodebookError(ValueError):
    """Invalid codebook construction or incompatible arguments."""


class EnumerationCapError(CodebookError):
    """Full enumeration would exceed the configured codeword cap."""


@dataclass(frozen=True)
class SymbolAlphabet:
    """Ordered CSK transmit levels: strictly increasing, from 0 up to 1."""

    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise CodebookError("alphabet needs at least two levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise CodebookError("alphabet levels must be strictly increasing")
        if levels[0] != 0.0 or levels[-1] != 1.0:
            raise CodebookError("alphabet must start at 0 and end at 1")

    @classmethod
    def uniform(cls, size: int) -> "SymbolAlphabet":
        """Equally spaced levels {0, 1/(L-1), ..., 1}."""
        if size < 2:
            raise CodebookError("alphabet needs at least two levels")
        return cls(tuple(i / (size - 1) for i in range(size)))

    @property
    def size(self) -> int:
        return len(self.levels)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=np.float64)


@dataclass(frozen=True)
class WeightVector:
    """Per-level occurrence counts defining an SCW constraint."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts or any(c < 0 for c in counts):
            raise CodebookError("weight counts must be nonnegative integers")
        if sum(counts) < 1:
            raise CodebookError("weight counts must sum to at least 1")

    @property
    def codeword_length(self) -> int:
        return sum(self.counts)

    @property
    def balanced(self) -> bool:
        return len(set(self.counts)) == 1

    def weight(self, alphabet: SymbolAlphabet) -> float:
        """Total transmit weight: sum of count * level over all levels."""
        self.check_alphabet(alphabet)
        return float(sum(c * lvl for c, lvl in zip(self.counts, alphabet.levels)))

    def release_fraction(self, alphabet: SymbolAlphabet) -> float:
        """Average released fraction per symbol interval, weight / length."""
        return self.weight(alphabet) / self.codeword_length

    def check_alphabet(self, alphabet: SymbolAlphabet) -> None:
        if len(self.counts) != alphabet.size:
            raise CodebookError(
                f"weight vector has {len(self.counts)} entries for an "
                f"alphabet of size {alphabet.size}"
            )


@dataclass(frozen=True, eq=False)
class Codebook:
    """An explicit set of codewords stored as an (M, K) index matrix.

    ``full`` asserts the codebook contains every arrangement allowed by
    ``weights``.  Rows are immutable; the matrix is write-protected.
    """

    alphabet: SymbolAlphabet
    indices: np.ndarray
    weights: WeightVector | None = None
    full: bool = False

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.indices, dtype=np.int16))
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise CodebookError("codebook needs a nonempty (M, K) index matrix")
        if arr.min() < 0 or arr.max() >= self.alphabet.size:
            raise CodebookError("codeword indices out of alphabet range")
        if np.unique(arr, axis=0).shape[0] != arr.shape[0]:
            raise CodebookError("duplicate codewords")
        if self.weights is not None:
            self.weights.check_alphabet(self.alphabet)
            if self.weights.codeword_length != arr.shape[1]:
                raise CodebookError("weight vector length does not match K")
            counts = _level_counts(arr, self.alphabet.size)
            if not (counts == np.asarray(self.weights.counts)).all():
                bad = int(np.argmax((counts != np.asarray(self.weights.counts)).any(axis=1)))
                raise CodebookError(f"codeword {bad} violates the weight vector")
        if self.full:
            if self.weights is None:
                raise CodebookError("a full codebook requires a weight vector")
            if arr.shape[0] != codebook_size(self.weights):
                raise CodebookError("full flag set but size is not the multinomial count")
        arr.setflags(write=False)
        object.__setattr__(self, "indices", arr)

    @classmethod
    def from_codewords(
        cls,
        alphabet: SymbolAlphabet,
        codewords: Iterable[Sequence[int]],
        weights: WeightVector | None = None,
        full: bool = False,
    ) -> "Codebook":
        arr = np.asarray([tuple(cw) for cw in codewords], dtype=np.int16)
        return cls(alphabet, arr, weights=weights, full=full)

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    @property
    def length(self) -> int:
        return self.indices.shape[1]

    @property
    def is_binary(self) -> bool:
        return self.alphabet.size == 2

    @property
    def codewords(self) -> tuple[Codeword, ...]:
        return tuple(tuple(int(x) for x in row) for row in self.indices)

    def symbol_matrix(self) -> np.ndarray:
        """Codewords as transmit levels, shape (M, K)."""
        return self.alphabet.as_array()[self.indices]

    def to_text(self) -> str:
        """Line format: header ``L K M full|partial``, then index rows."""
        out = io.StringIO()
        flag = "full" if self.full else "partial"
        out.write(f"{self.alphabet.size} {self.length} {self.size} {flag}\n")
        for row in self.indices:
            out.write(" ".join(str(int(x)) for x in row) + "\n")
        return out.getvalue()

    def write_text(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str, alphabet: SymbolAlphabet | None = None) -> "Codebook":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise CodebookError("empty codebook text")
        try:
            l_str, k_str, m_str, flag = lines[0].split()
            L, K, M = int(l_str), int(k_str), int(m_str)
        except ValueError as exc:
            raise CodebookError(f"bad codebook header: {lines[0]!r}") from exc
        if flag not in ("full", "partial"):
            raise CodebookError(f"bad fullness flag: {flag!r}")
        if alphabet is None:
            alphabet = SymbolAlphabet.uniform(L)
        elif alphabet.size != L:
            raise CodebookError("alphabet size does not match header")
        if len(lines) - 1 != M:
            raise CodebookError(f"header says {M} codewords, found {len(lines) - 1}")
        arr = np.asarray([[int(x) for x in ln.split()] for ln in lines[1:]], dtype=np.int16)
        if arr.shape != (M, K):
            raise CodebookError("codeword rows do not match header dimensions")
        weights = None
        counts = _level_counts(arr, L)
        if (counts == counts[0]).all():
            weights = WeightVector(tuple(int(c) for c in counts[0]))
        return cls(alphabet, arr, weights=weights, full=(flag == "full"))

    @classmethod
    def read_text(cls, path, alphabet: SymbolAlphabet | None = None) -> "Codebook":
        with open(path) as fh:
            return cls.from_text(fh.read(), alphabet=alphabet)


@dataclass(frozen=True)
class CodeRateReport:
    """Size and rate summary of a full SCW codebook."""

    size: int
    rate: float
    asymptotic_rate: float
    release_fraction: float


def codebook_size(weights: WeightVector) -> int:
    """Number of codewords in the full codebook: K! / prod(counts!).

    Exact integer arithmetic; Python integers do not overflow.
    """
    num = math.factorial(weights.codeword_length)
    for c in weights.counts:
        num //= math.factorial(c)
    return num


def _lex_multiset_permutations(start: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Distinct permutations of ``start`` (must be sorted) in lexicographic order."""
    a = list(start)
    n = len(a)
    yield tuple(a)
    while True:
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1 :] = a[:i:-1]
        yield tuple(a)


def enumerate_full_scw(
    alphabet: SymbolAlphabet,
    weights: WeightVector,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Codebook:
    """All codewords with the given per-level counts, in lexicographic order."""
    weights.check_alphabet(alphabet)
    size = codebook_size(weights)
    if size > cap:
        raise EnumerationCapError(
            f"full codebook has {size} codewords, above the cap of {cap}"
        )
    K = weights.codeword_length
    start = [lvl for lvl, c in enumerate(weights.counts) for _ in range(c)]
    arr = np.empty((size, K), dtype=np.int16)
    for i, cw in enumerate(_lex_multiset_permutations(start)):
        arr[i] = cw
    return Codebook(alphabet, arr, weights=weights, full=True)


def code_rate(weights: WeightVector, alphabet: SymbolAlphabet | None = None) -> CodeRateReport:
    """Rate of the full codebook, log_L(M) / K, with its large-K limit.

    The limit is the base-L entropy of the count fractions.  The release
    fraction uses the given alphabet (equally spaced levels by default).
    """
    if alphabet is None:
        alphabet = SymbolAlphabet.uniform(len(weights.counts))
    weights.check_alphabet(alphabet)
    size = codebook_size(weights)
    K = weights.codeword_length
    L = alphabet.size
    rate = math.log(size) / (K * math.log(L)) if size > 1 else 0.0
    fractions = [c / K for c in weights.counts]
    entropy = -sum(p * math.log(p) for p in fractions if p > 0) / math.log(L)
    return CodeRateReport(
        size=size,
        rate=rate,
        asymptotic_rate=entropy,
        release_fraction=weights.release_fraction(alphabet),
    )


def sample_partial_codebook(base: Codebook, target_size: int, seed: int) -> Codebook:
    """Uniform without-replacement subset of ``base``, kept in base order.

    Deterministic for a fixed seed.  The fullness flag is always cleared.
    """
    if not 1 <= target_size <= base.size:
        raise CodebookError(
            f"target size {target_size} not in [1, {base.size}]"
        )
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(base.size, size=target_size, replace=False))
    return Codebook(base.alphabet, base.indices[keep], weights=base.weights, full=False)


def _level_counts(indices: np.ndarray, num_levels: int) -> np.ndarray:
    """Per-row occurrence count of each level, shape (M, L)."""
    return np.stack([(indices == lvl).sum(axis=1) for lvl in range(num_levels)], axis=1)


def distance_spectrum(codebook: Codebook) -> dict[int, int]:
    """Ordered-pair counts by Hamming distance, for binary codebooks only.

    For a full binary codebook the spectrum follows in closed form from the
    number of ways to swap e ones with e zeros; otherwise all M(M-1) ordered
    pairs are compared directly.
    """
    if not codebook.is_binary:
        raise CodebookError("distance spectrum is defined for binary codebooks")
    M, K = codebook.size, codebook.length
    if M == 1:
        return {}
    if codebook.full and codebook.weights is not None:
        w = codebook.weights.counts[1]
        return {
            2 * e: M * math.comb(w, e) * math.comb(K - w, e)
            for e in range(1, min(w, K - w) + 1)
        }
    if M > _SPECTRUM_PAIRWISE_CAP:
        raise CodebookError(
            f"pairwise spectrum limited to {_SPECTRUM_PAIRWISE_CAP} codewords"
        )
    arr = codebook.indices.astype(np.int8)
    dist = (arr[:, None, :] != arr[None, :, :]).sum(axis=2)
    values, counts = np.unique(dist[~np.eye(M, dtype=bool)], return_counts=True)
    return {int(d): int(c) for d, c in zip(values, counts)}


def validate_scw(codebook: Codebook) -> tuple[bool, str | None]:
    """Check that all codewords share identical per-level counts.

    Returns ``(ok, diagnostics)`` where diagnostics names the first codeword
    whose counts differ from codeword 0 (or from the declared weights).
    """
    counts = _level_counts(codebook.indices, codebook.alphabet.size)
    if codebook.weights is not None:
        ref = np.asarray(codebook.weights.counts)
    else:
        ref = counts[0]
    bad = (counts != ref).any(axis=1)
    if not bad.any():
        return True, None
    first = int(np.argmax(bad))
    cw = tuple(int(x) for x in codebook.indices[first])
    return False, (
        f"codeword {first} {cw} has per-level counts "
        f"{tuple(int(c) for c in counts[first])}, expected {tuple(int(c) for c in ref)}"
    )
