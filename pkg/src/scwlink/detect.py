"""Detectors for the Poisson counting channel.

The CSI-free sequence detector for full SCW codebooks assigns symbol levels
by rank: after a stable ascending sort of the observations, the smallest
block of positions gets the lowest level, the next block the next level, and
so on.  For binary constant-weight codebooks (full or partial) the rule
reduces to maximizing the correlation between the observation vector and the
codeword.  Coherent and state-averaged sequence detectors over an explicit
codebook are provided as references, along with an uncoded symbol-by-symbol
coherent baseline.

Exact likelihood ties are decided on integer statistics: at a fixed channel
state, two hypotheses score identically if and only if, for every group of
levels sharing the same Poisson mean, they agree on the number of positions
and on the observation sum inside the group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .channel import Csi, CsiMixture, CsiModel, DeterministicCsi, RandomPhysicalCsi
from .codebook import Codebook, Codeword, SymbolAlphabet, WeightVector

__all__ = [
    "DEFAULT_TIE_CAP",
    "DetectionError",
    "DetectionResult",
    "batch_log_likelihoods",
    "detect_binary_cw_csi_free",
    "detect_coherent_ml",
    "detect_noncoherent_ml",
    "detect_scw_csi_free",
    "detect_symbolwise_coherent",
    "log_likelihood",
]

#: Default cap on enumerated co-optimal codewords for the sorting detector.
DEFAULT_TIE_CAP = 64


class DetectionError(ValueError):
    """Invalid detector arguments."""


@dataclass(frozen=True)
class DetectionResult:
    """Decision plus its co-optimal set.

    ``best`` is always the deterministic decision.  ``ties`` holds the full
    co-optimal set (including ``best``) when it was enumerated, and is empty
    when enumeration was disabled or capped.  ``tie_broken`` is set whenever
    the decision was not unique.
    """

    best: Codeword
    ties: tuple[Codeword, ...]
    score: float
    tie_broken: bool


def _as_observations(obs, length: int | None = None) -> np.ndarray:
    r = np.asarray(obs, dtype=np.int64)
    if r.ndim != 1 or r.size < 1:
        raise DetectionError("observations must be a nonempty 1-D integer sequence")
    if (r < 0).any():
        raise DetectionError("observations must be nonnegative")
    if length is not None and r.size != length:
        raise DetectionError(f"expected {length} observations, got {r.size}")
    return r


def detect_scw_csi_free(
    obs,
    alphabet: SymbolAlphabet,
    weights: WeightVector,
    enumerate_ties: bool = False,
    tie_cap: int = DEFAULT_TIE_CAP,
) -> DetectionResult:
    """Rank-based ML decision for a full SCW codebook; needs no channel state.

    Stable sorting breaks observation ties by original position.  When equal
    observations straddle a level boundary the decision is not unique;
    ``tie_broken`` is set and, if ``enumerate_ties`` is on and the co-optimal
    set has at most ``tie_cap`` members, ``ties`` lists all of them in
    lexicographic order.
    """
    weights.check_alphabet(alphabet)
    K = weights.codeword_length
    r = _as_observations(obs, K)
    order = np.argsort(r, kind="stable")
    block_level = np.repeat(
        np.arange(alphabet.size, dtype=np.int16), np.asarray(weights.counts)
    )
    decision = np.empty(K, dtype=np.int16)
    decision[order] = block_level
    best = tuple(int(x) for x in decision)

    sorted_vals = r[order]
    boundaries = np.cumsum(weights.counts)[:-1]
    inner = boundaries[(boundaries > 0) & (boundaries < K)]
    tie_broken = bool(np.any(sorted_vals[inner - 1] == sorted_vals[inner])) if inner.size else False

    score = float(np.dot(alphabet.as_array()[decision], r))
    ties: tuple[Codeword, ...] = ()
    if enumerate_ties:
        if not tie_broken:
            ties = (best,)
        else:
            ties = _enumerate_sorting_ties(r, order, weights, tie_cap)
    return DetectionResult(best=best, ties=ties, score=score, tie_broken=tie_broken)


def _enumerate_sorting_ties(
    r: np.ndarray, order: np.ndarray, weights: WeightVector, cap: int
) -> tuple[Codeword, ...]:
    """All rank-consistent assignments; empty when their number exceeds cap."""
    K = r.size
    sorted_vals = r[order]
    edges = np.cumsum(weights.counts)  # block ends in sorted position space
    run_starts = [0] + [i for i in range(1, K) if sorted_vals[i] != sorted_vals[i - 1]]
    run_ends = run_starts[1:] + [K]

    total = 1
    run_label_sets = []
    for a, b in zip(run_starts, run_ends):
        counts = []
        prev = 0
        for lvl, edge in enumerate(edges):
            overlap = max(0, min(b, edge) - max(a, prev))
            if overlap:
                counts.append((lvl, overlap))
            prev = edge
        labels = [lvl for lvl, c in counts for _ in range(c)]
        arrangements = math.factorial(b - a)
        for _, c in counts:
            arrangements //= math.factorial(c)
        total *= arrangements
        if total > cap:
            return ()
        run_label_sets.append((np.asarray(order[a:b]), labels))

    out = []
    per_run_options = [
        list(_distinct_permutations(labels)) for _, labels in run_label_sets
    ]
    for combo in product(*per_run_options):
        cw = np.empty(K, dtype=np.int16)
        for (positions, _), labels in zip(run_label_sets, combo):
            cw[positions] = labels
        out.append(tuple(int(x) for x in cw))
    return tuple(sorted(out))


def _distinct_permutations(labels: Sequence[int]):
    a = sorted(labels)
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


def detect_binary_cw_csi_free(obs, codebook: Codebook) -> DetectionResult:
    """Correlation decision over a binary codebook; needs no channel state.

    The decision maximizes ``sum_k s[k] r[k]``; the first maximizer in
    codebook order is returned and all maximizers are listed as ties.
    """
    if not codebook.is_binary:
        raise DetectionError("correlation detection requires a binary codebook")
    r = _as_observations(obs, codebook.length)
    corr = codebook.indices.astype(np.int64) @ r
    top = corr.max()
    hits = np.flatnonzero(corr == top)
    best = tuple(int(x) for x in codebook.indices[hits[0]])
    ties = tuple(tuple(int(x) for x in codebook.indices[i]) for i in hits)
    return DetectionResult(
        best=best, ties=ties, score=float(top), tie_broken=hits.size > 1
    )


def log_likelihood(obs, codeword: Sequence[int], alphabet: SymbolAlphabet, csi: Csi) -> float:
    """Poisson log-likelihood of a hypothesis codeword.

    Returns ``-inf`` when a position with zero mean observed a nonzero count.
    """
    r = _as_observations(obs)
    idx = np.asarray(codeword, dtype=np.int64)
    if idx.shape != r.shape:
        raise DetectionError("codeword and observations must have equal length")
    means = alphabet.as_array()[idx] * csi.c_s + csi.c_n
    return float(_poisson_loglik_rows(r[None, :], means[None, :])[0])


def _poisson_loglik_rows(r: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Row sums of r*log(mean) - mean - log(r!), with zero-mean handling."""
    with np.errstate(divide="ignore", invalid="ignore"):
        log_means = np.log(means)
        terms = np.where(r > 0, r * log_means, 0.0) - means
    out = terms.sum(axis=-1) - gammaln(r + 1.0).sum(axis=-1)
    return np.where(np.isnan(out), -np.inf, out)


def batch_log_likelihoods(obs_rows: np.ndarray, codebook: Codebook, cs, cn) -> np.ndarray:
    """Log-likelihood of every codebook hypothesis for a batch of observations.

    ``obs_rows`` has shape (N, K); ``cs`` and ``cn`` are scalars or length-N
    arrays (one channel state per row).  Returns shape (N, M).
    """
    r = np.asarray(obs_rows, dtype=np.float64)
    if r.ndim == 1:
        r = r[None, :]
    n = r.shape[0]
    cs = np.broadcast_to(np.asarray(cs, dtype=np.float64), (n,))
    cn = np.broadcast_to(np.asarray(cn, dtype=np.float64), (n,))
    levels = codebook.alphabet.as_array()
    onehot = (
        codebook.indices[:, :, None] == np.arange(codebook.alphabet.size)[None, None, :]
    ).astype(np.float64)  # (M, K, L)
    level_sums = np.einsum("nk,mkl->nml", r, onehot)  # observation sum per level
    level_counts = onehot.sum(axis=1)  # (M, L)
    means = levels[None, :] * cs[:, None] + cn[:, None]  # (N, L)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_means = np.log(means)
        log_term = np.where(level_sums > 0, level_sums * log_means[:, None, :], 0.0).sum(axis=2)
    mean_term = level_counts[None, :, :] * means[:, None, :]
    scores = log_term - mean_term.sum(axis=2) - gammaln(r + 1.0).sum(axis=1)[:, None]
    return np.where(np.isnan(scores), -np.inf, scores)


def _mean_groups(levels: np.ndarray, csi: Csi) -> list[np.ndarray]:
    """Partition level indices into groups sharing the same Poisson mean."""
    means = levels * csi.c_s + csi.c_n
    groups: dict[float, list[int]] = {}
    for lvl, mu in enumerate(means):
        groups.setdefault(float(mu), []).append(lvl)
    return [np.asarray(v) for _, v in sorted(groups.items())]


def _group_stat_keys(codebook: Codebook, r: np.ndarray, groups: list[np.ndarray]) -> np.ndarray:
    """Integer (count, sum) statistics per mean group; equal rows = equal score."""
    cols = []
    for lvls in groups:
        member = np.isin(codebook.indices, lvls)
        cols.append(member.sum(axis=1))
        cols.append(member @ r)
    return np.stack(cols, axis=1)


def detect_coherent_ml(obs, codebook: Codebook, csi: Csi) -> DetectionResult:
    """Exhaustive ML over a codebook at a known channel state.

    Ties are exact: hypotheses with identical per-mean-group integer
    statistics share the decision metric, so no floating tolerance is used.
    """
    if codebook.size < 1:
        raise DetectionError("empty codebook")
    r = _as_observations(obs, codebook.length)
    scores = batch_log_likelihoods(r[None, :], codebook, csi.c_s, csi.c_n)[0]
    best_idx = int(np.argmax(scores))
    groups = _mean_groups(codebook.alphabet.as_array(), csi)
    keys = _group_stat_keys(codebook, r, groups)
    hits = np.flatnonzero((keys == keys[best_idx]).all(axis=1))
    best = tuple(int(x) for x in codebook.indices[best_idx])
    ties = tuple(tuple(int(x) for x in codebook.indices[i]) for i in hits)
    return DetectionResult(
        best=best, ties=ties, score=float(scores[best_idx]), tie_broken=hits.size > 1
    )


def detect_noncoherent_ml(
    obs,
    codebook: Codebook,
    model: CsiModel,
    n_mc: int = 256,
    rng: np.random.Generator | None = None,
) -> DetectionResult:
    """ML over a codebook with the channel state averaged out.

    A fixed state delegates to the coherent detector.  A finite mixture is
    integrated exactly with log-sum-exp over its components.  A random
    physical model is averaged over ``n_mc`` Monte Carlo states, drawn once
    and shared by all hypotheses.
    """
    if codebook.size < 1:
        raise DetectionError("empty codebook")
    r = _as_observations(obs, codebook.length)
    if isinstance(model, DeterministicCsi):
        return detect_coherent_ml(r, codebook, model.csi)

    if isinstance(model, CsiMixture):
        states = list(model.components)
        log_w = np.log(np.asarray(model.probabilities))
    elif isinstance(model, RandomPhysicalCsi):
        if n_mc < 1:
            raise DetectionError("n_mc must be at least 1 for a random state model")
        if rng is None:
            raise DetectionError("a random state model requires an rng")
        cs, cn = model.sample_batch(rng, n_mc)
        states = [Csi(float(a), float(b)) for a, b in zip(cs, cn)]
        log_w = np.full(n_mc, -math.log(n_mc))
    else:
        raise DetectionError(f"unsupported channel state model: {type(model).__name__}")

    per_state = np.stack(
        [batch_log_likelihoods(r[None, :], codebook, st.c_s, st.c_n)[0] for st in states]
    )  # (S, M)
    scores = logsumexp(per_state + log_w[:, None], axis=0)
    best_idx = int(np.argmax(scores))

    key_blocks = [
        _group_stat_keys(codebook, r, _mean_groups(codebook.alphabet.as_array(), st))
        for st in states
    ]
    keys = np.concatenate(key_blocks, axis=1)
    hits = np.flatnonzero((keys == keys[best_idx]).all(axis=1))
    best = tuple(int(x) for x in codebook.indices[best_idx])
    ties = tuple(tuple(int(x) for x in codebook.indices[i]) for i in hits)
    return DetectionResult(
        best=best, ties=ties, score=float(scores[best_idx]), tie_broken=hits.size > 1
    )


def detect_symbolwise_coherent(obs, alphabet: SymbolAlphabet, csi: Csi) -> tuple[int, ...]:
    """Per-symbol ML at a known channel state; ties go to the lowest level."""
    r = _as_observations(obs)
    means = alphabet.as_array() * csi.c_s + csi.c_n  # (L,)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_means = np.log(means)
        scores = np.where(
            r[:, None] > 0, r[:, None] * log_means[None, :], 0.0
        ) - means[None, :]
    scores = np.where(np.isnan(scores), -np.inf, scores)
    return tuple(int(x) for x in np.argmax(scores, axis=1))
