"""Seeded Monte Carlo link experiments.

Produces codeword-error-rate curves versus SNR and bit-error-rate curves
versus block length, with optional analytical bounds attached per point.
SNR sweeps scale the released-molecule budget at a fixed noise count, so the
nominal signal count at gamma dB is ``c_n * 10**(gamma/10)``.

Reproducibility contract: trials are split into fixed-size batches and every
batch draws from its own counter-based stream keyed by (master seed, point
index, batch index).  Results are therefore bit-identical for a given
configuration regardless of how many workers execute the batches.

Tie accounting: the decision itself always uses the deterministic stable-sort
(or first-maximizer) rule.  Per trial the engine also records whether the
transmitted codeword was co-optimal and how large the co-optimal set was,
which yields both scoring conventions: ``half_error`` charges a tie that
includes the truth with (|T|-1)/|T|, ``always_error`` charges every tie as a
full error.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import bounds as bounds_mod
from .channel import (
    DEFAULT_PARAMS,
    ChannelError,
    Csi,
    CsiMixture,
    CsiModel,
    DeterministicCsi,
    PhysicalParams,
    RandomPhysicalCsi,
    cir_expected_count,
    default_random_csi_model,
)
from .codebook import (
    DEFAULT_ENUMERATION_CAP,
    Codebook,
    CodebookError,
    SymbolAlphabet,
    WeightVector,
    distance_spectrum,
    enumerate_full_scw,
    sample_partial_codebook,
)
from .detect import detect_coherent_ml, detect_noncoherent_ml

__all__ = [
    "BitMapping",
    "ChannelSpec",
    "ConfigError",
    "ExperimentConfig",
    "MetricPoint",
    "MetricSeries",
    "config_from_mapping",
    "config_to_mapping",
    "estimate_interval",
    "run_ber_experiment",
    "run_cer_experiment",
    "write_series_csv",
]

_TIE_CONVENTIONS = ("half_error", "always_error")
_DETECTORS = ("csi_free", "coherent", "noncoherent")
_BOUND_NAMES = ("chernoff", "skellam_union", "orderstat")

# Stream tags keep trial, baseline, and bound randomness disjoint.
_TAG_TRIALS = 0
_TAG_BOUNDS = 2


class ConfigError(ValueError):
    """Invalid experiment configuration; message includes the field path."""


@dataclass(frozen=True)
class ChannelSpec:
    """How channel states are produced across blocks during a sweep.

    ``deterministic`` pins the state to the nominal SNR of each point;
    ``mixture`` draws per block from SNR offsets (dB) around the nominal;
    ``parametric`` redraws physical parameters per block through the impulse
    response, rescaled so the base geometry hits the nominal signal count.
    Empty ``ranges`` selects the documented default randomization.
    """

    kind: str = "deterministic"
    c_n: float = 4.9
    params: PhysicalParams = DEFAULT_PARAMS
    mixture_offsets_db: tuple[float, ...] = ()
    mixture_weights: tuple[float, ...] = ()
    ranges: tuple[tuple[str, float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("deterministic", "mixture", "parametric"):
            raise ConfigError(f"channel.kind: unknown kind {self.kind!r}")
        if self.c_n < 0:
            raise ConfigError("channel.c_n: must be nonnegative")
        if self.kind == "mixture":
            if not self.mixture_offsets_db:
                raise ConfigError("channel.mixture_offsets_db: required for a mixture")
            if len(self.mixture_offsets_db) != len(self.mixture_weights):
                raise ConfigError("channel.mixture_weights: length mismatch with offsets")
            if abs(sum(self.mixture_weights) - 1.0) > 1e-12:
                raise ConfigError("channel.mixture_weights: must sum to 1")

    def sampler(self, nominal_cs: float) -> tuple[CsiModel, float]:
        """Model plus the signal scale to pass to ``sample_batch``."""
        if self.kind == "deterministic":
            return DeterministicCsi(Csi(nominal_cs, self.c_n)), 1.0
        if self.kind == "mixture":
            comps = tuple(
                Csi(nominal_cs * 10.0 ** (off / 10.0), self.c_n)
                for off in self.mixture_offsets_db
            )
            return CsiMixture(comps, tuple(self.mixture_weights)), 1.0
        base_cs = cir_expected_count(self.params, self.params.t_samp)
        if self.ranges:
            model = RandomPhysicalCsi(base=self.params, c_n=self.c_n, ranges=self.ranges)
        else:
            model = default_random_csi_model(self.params, self.c_n)
        return model, nominal_cs / base_cs


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment run."""

    mode: str = "cer"
    # code specification
    alphabet_size: int = 2
    weights: tuple[int, ...] | None = None
    partial_size: int | None = None
    partial_seed: int = 0
    # channel
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    # sweep grids
    snr_grid_db: tuple[float, ...] = ()
    snr_db: float = 5.0
    k_grid: tuple[int, ...] = ()
    code_rate: float | None = None
    density: float = 0.5
    # execution
    trials: int = 100_000
    batch_size: int = 8192
    seed: int = 0
    workers: int = 1
    tie_convention: str = "half_error"
    detector: str = "csi_free"
    bounds: tuple[str, ...] = ()
    chernoff_t: float = 0.5
    bound_csi_samples: int = 64
    noncoherent_mc: int = 128
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self) -> None:
        if self.mode not in ("cer", "ber"):
            raise ConfigError(f"mode: unknown mode {self.mode!r}")
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size: must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers: must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed: must be nonnegative")
        if self.tie_convention not in _TIE_CONVENTIONS:
            raise ConfigError(f"tie_convention: unknown convention {self.tie_convention!r}")
        if self.detector not in _DETECTORS:
            raise ConfigError(f"detector: unknown detector {self.detector!r}")
        for name in self.bounds:
            if name not in _BOUND_NAMES:
                raise ConfigError(f"bounds: unknown bound {name!r}")
        if self.mode == "cer":
            if self.weights is None:
                raise ConfigError("weights: required for a cer run")
            if not self.snr_grid_db:
                raise ConfigError("snr_grid_db: required for a cer run")
            if any(not math.isfinite(v) for v in self.snr_grid_db):
                raise ConfigError("snr_grid_db: values must be finite")
            if len(self.weights) != self.alphabet_size:
                raise ConfigError("weights: length must equal alphabet_size")
        else:
            if self.alphabet_size != 2:
                raise ConfigError("alphabet_size: ber runs require a binary alphabet")
            if not self.k_grid:
                raise ConfigError("k_grid: required for a ber run")
            if self.code_rate is None or not 0 < self.code_rate <= 1:
                raise ConfigError("code_rate: must be in (0, 1] for a ber run")
            if not 0 < self.density < 1:
                raise ConfigError("density: must be in (0, 1)")
            if not math.isfinite(self.snr_db):
                raise ConfigError("snr_db: must be finite")


@dataclass(frozen=True)
class MetricPoint:
    x: float
    estimate: float
    stderr: float
    trials: int
    wilson_low: float
    wilson_high: float
    bounds: tuple[tuple[str, float], ...] = ()
    extras: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class MetricSeries:
    kind: str
    xlabel: str
    points: tuple[MetricPoint, ...]


@dataclass(frozen=True)
class BitMapping:
    """Natural-binary labels over codeword rank.

    Message index i in [0, 2**bits) maps to the i-th codeword of the book in
    its stored (lexicographic) order; codewords past 2**bits carry no label.
    """

    codebook_size: int

    @property
    def bits(self) -> int:
        return int(math.floor(math.log2(self.codebook_size)))

    @property
    def messages(self) -> int:
        return 1 << self.bits

    def bits_of(self, rank) -> np.ndarray:
        rank_arr = np.asarray(rank, dtype=np.int64)
        if np.any((rank_arr < 0) | (rank_arr >= self.messages)):
            raise ConfigError(f"rank out of the {self.messages}-message range")
        shifts = np.arange(self.bits - 1, -1, -1)
        return (rank_arr[..., None] >> shifts) & 1


def estimate_interval(errors: float, trials: int) -> tuple[float, float]:
    """Wilson 95 percent interval for an error count out of ``trials``."""
    if trials < 1:
        raise ConfigError("trials: must be at least 1")
    if not 0 <= errors <= trials:
        raise ConfigError("errors: must lie in [0, trials]")
    z = 1.959963984540054  # two-sided 95 percent normal quantile
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, center - half)
    high = 1.0 if errors == trials else min(1.0, center + half)
    return low, high


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def _batch_plan(trials: int, batch_size: int) -> list[int]:
    full, rem = divmod(trials, batch_size)
    return [batch_size] * full + ([rem] if rem else [])


def _run_tasks(fn, tasks: list[tuple], workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _build_codebook(config: ExperimentConfig) -> Codebook:
    alphabet = SymbolAlphabet.uniform(config.alphabet_size)
    weights = WeightVector(tuple(config.weights))
    book = enumerate_full_scw(alphabet, weights, cap=config.enumeration_cap)
    if config.partial_size is not None:
        book = sample_partial_codebook(book, config.partial_size, config.partial_seed)
    return book


# ---------------------------------------------------------------------------
# CER engine
# ---------------------------------------------------------------------------


def _sorting_tie_sizes(sorted_rows: np.ndarray, edges: Sequence[int]) -> np.ndarray:
    """Co-optimal set sizes for rows of ascending observation values."""
    sizes = np.ones(sorted_rows.shape[0], dtype=np.float64)
    K = sorted_rows.shape[1]
    for i, row in enumerate(sorted_rows):
        total = 1
        a = 0
        for j in range(1, K + 1):
            if j == K or row[j] != row[j - 1]:
                if j - a > 1:
                    prev = 0
                    rem = j - a
                    for edge in edges:
                        ovl = max(0, min(j, edge) - max(a, prev))
                        prev = edge
                        if 0 < ovl < rem + 1:
                            total *= math.comb(rem, ovl)
                            rem -= ovl
                a = j
        sizes[i] = float(total)
    return sizes


def _tie_masses(member: np.ndarray, tie_size: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    half = 1.0 - member / tie_size
    always = np.where(member & (tie_size == 1), 0.0, 1.0)
    return half, always


def _cer_batch(
    seed: int,
    point_index: int,
    batch_index: int,
    n: int,
    indices: np.ndarray,
    levels: np.ndarray,
    counts: tuple[int, ...] | None,
    is_full_scw: bool,
    model: CsiModel,
    scale: float,
    detector: str,
    noncoherent_mc: int,
) -> tuple[float, float, float, float]:
    """One batch of CER trials; returns half/always error-mass sums and squares."""
    rng = _stream(seed, _TAG_TRIALS, point_index, batch_index)
    cs, cn = model.sample_batch(rng, n, scale)
    M = indices.shape[0]
    msg = rng.integers(0, M, size=n)
    sent = indices[msg]
    means = levels[sent] * cs[:, None] + cn[:, None]
    r = rng.poisson(means)

    if detector == "csi_free":
        if is_full_scw:
            member, tie_size = _csi_free_full_stats(r, sent, counts)
        else:
            member, tie_size = _csi_free_corr_stats(r, indices, msg)
    else:
        member, tie_size = _reference_detector_stats(
            r, indices, levels, msg, cs, cn, detector, model, noncoherent_mc, rng
        )

    half, always = _tie_masses(member, tie_size)
    return (
        float(half.sum()),
        float((half**2).sum()),
        float(always.sum()),
        float((always**2).sum()),
    )


def _csi_free_full_stats(r, sent, counts):
    """Membership and co-optimal count under the rank detector (full SCW)."""
    order = np.argsort(r, axis=1, kind="stable")
    sorted_vals = np.take_along_axis(r, order, axis=1)
    by_sent_level = np.take_along_axis(r, np.lexsort((r, sent), axis=1), axis=1)
    member = (by_sent_level == sorted_vals).all(axis=1)

    edges = np.cumsum(counts)
    inner = edges[:-1]
    inner = inner[(inner > 0) & (inner < r.shape[1])]
    tie_rows = (sorted_vals[:, inner - 1] == sorted_vals[:, inner]).any(axis=1)
    tie_size = np.ones(r.shape[0], dtype=np.float64)
    if tie_rows.any():
        tie_size[tie_rows] = _sorting_tie_sizes(sorted_vals[tie_rows], list(edges))
    return member, tie_size


def _csi_free_corr_stats(r, indices, msg):
    """Membership and co-optimal count under the correlation detector (binary)."""
    corr = r.astype(np.int64) @ indices.astype(np.int64).T
    top = corr.max(axis=1)
    tie_size = (corr == top[:, None]).sum(axis=1).astype(np.float64)
    member = corr[np.arange(r.shape[0]), msg] == top
    return member, tie_size


def _reference_detector_stats(
    r, indices, levels, msg, cs, cn, detector, model, noncoherent_mc, rng
):
    """Per-trial loop over the reference sequence detectors."""
    alphabet = SymbolAlphabet(tuple(float(v) for v in levels))
    book = Codebook(alphabet, indices)
    codewords = book.codewords
    member = np.zeros(r.shape[0], dtype=bool)
    tie_size = np.ones(r.shape[0], dtype=np.float64)
    for i in range(r.shape[0]):
        if detector == "coherent":
            res = detect_coherent_ml(r[i], book, Csi(float(cs[i]), float(cn[i])))
        else:
            res = detect_noncoherent_ml(r[i], book, model, n_mc=noncoherent_mc, rng=rng)
        tie_size[i] = len(res.ties)
        member[i] = codewords[msg[i]] in res.ties
    return member, tie_size


def _point_bounds(
    config: ExperimentConfig,
    codebook: Codebook,
    nominal_cs: float,
    point_index: int,
) -> tuple[tuple[str, float], ...]:
    """Requested analytical bounds at one sweep point.

    Deterministic channels evaluate at the point state, mixtures average
    exactly over components, parametric models average over sampled states.
    """
    if not config.bounds:
        return ()
    model, scale = config.channel.sampler(nominal_cs)
    if isinstance(model, DeterministicCsi):
        states = [Csi(model.csi.c_s * scale, model.csi.c_n)]
        probs = [1.0]
    elif isinstance(model, CsiMixture):
        states = [Csi(c.c_s * scale, c.c_n) for c in model.components]
        probs = list(model.probabilities)
    else:
        rng = _stream(config.seed, _TAG_BOUNDS, point_index)
        cs, cn = model.sample_batch(rng, config.bound_csi_samples, scale)
        states = [Csi(float(a), float(b)) for a, b in zip(cs, cn)]
        probs = [1.0 / len(states)] * len(states)

    spectrum = None
    if "skellam_union" in config.bounds:
        spectrum = distance_spectrum(codebook)
    out: dict[str, float] = {}
    for name in config.bounds:
        if name == "chernoff":
            out["chernoff"] = sum(
                p * bounds_mod.chernoff_union_bound(codebook, st, config.chernoff_t).value
                for st, p in zip(states, probs)
            )
        elif name == "skellam_union":
            out["skellam_union"] = sum(
                p * bounds_mod.skellam_union_bound(spectrum, codebook.size, st).value
                for st, p in zip(states, probs)
            )
        else:
            w = codebook.weights.counts[1]
            lowers, uppers = 0.0, 0.0
            for st, p in zip(states, probs):
                lo, up = bounds_mod.orderstat_bounds(codebook.length, w, st)
                lowers += p * lo.value
                uppers += p * up.value
            out["orderstat_lower"] = lowers
            out["orderstat_upper"] = uppers
    return tuple(out.items())


def _validate_bound_applicability(config: ExperimentConfig, codebook: Codebook) -> None:
    if "skellam_union" in config.bounds and not codebook.is_binary:
        raise ConfigError("bounds: skellam_union requires a binary codebook")
    if "orderstat" in config.bounds and not (codebook.is_binary and codebook.full):
        raise ConfigError("bounds: orderstat requires a full binary codebook")
    if config.bounds and config.channel.c_n <= 0:
        raise ConfigError("channel.c_n: bounds require a positive noise count")


def run_cer_experiment(config: ExperimentConfig) -> MetricSeries:
    """Codeword error rate versus SNR for one codebook."""
    if config.mode != "cer":
        raise ConfigError("mode: run_cer_experiment needs mode == 'cer'")
    codebook = _build_codebook(config)
    _validate_bound_applicability(config, codebook)
    if config.detector == "csi_free" and not (codebook.full or codebook.is_binary):
        raise ConfigError(
            "detector: csi_free detection needs a full codebook or a binary one"
        )
    is_full_scw = codebook.full
    counts = codebook.weights.counts if codebook.weights else None
    levels = codebook.alphabet.as_array()

    points = []
    for pi, snr_db in enumerate(config.snr_grid_db):
        nominal_cs = config.channel.c_n * 10.0 ** (snr_db / 10.0)
        model, scale = config.channel.sampler(nominal_cs)
        tasks = [
            (
                config.seed,
                pi,
                bi,
                n,
                codebook.indices,
                levels,
                counts,
                is_full_scw,
                model,
                scale,
                config.detector,
                config.noncoherent_mc,
            )
            for bi, n in enumerate(_batch_plan(config.trials, config.batch_size))
        ]
        results = _run_tasks(_cer_batch, tasks, config.workers)
        half_sum = sum(res[0] for res in results)
        half_sq = sum(res[1] for res in results)
        always_sum = sum(res[2] for res in results)
        always_sq = sum(res[3] for res in results)
        n = config.trials
        if config.tie_convention == "half_error":
            total, total_sq, other_name, other_sum = half_sum, half_sq, "always_error", always_sum
        else:
            total, total_sq, other_name, other_sum = always_sum, always_sq, "half_error", half_sum
        est = total / n
        var = max(0.0, total_sq / n - est * est)
        stderr = math.sqrt(var / n)
        low, high = estimate_interval(total, n)
        points.append(
            MetricPoint(
                x=float(snr_db),
                estimate=est,
                stderr=stderr,
                trials=n,
                wilson_low=low,
                wilson_high=high,
                bounds=_point_bounds(config, codebook, nominal_cs, pi),
                extras=((f"{other_name}_estimate", other_sum / n),),
            )
        )
    return MetricSeries(kind="cer", xlabel="snr_db", points=tuple(points))


# ---------------------------------------------------------------------------
# BER engine
# ---------------------------------------------------------------------------


def _ber_code_for(config: ExperimentConfig, K: int) -> tuple[Codebook, BitMapping]:
    w = config.density * K
    if abs(w - round(w)) > 1e-9:
        raise ConfigError(f"density: {config.density} gives a non-integer weight at K={K}")
    w = int(round(w))
    if not 1 <= w <= K - 1:
        raise ConfigError(f"density: weight {w} out of range for K={K}")
    bits = config.code_rate * K
    if abs(bits - round(bits)) > 1e-9:
        raise ConfigError(
            f"code_rate: {config.code_rate} gives a non-integer bit load at K={K}"
        )
    bits = int(round(bits))
    if bits < 1:
        raise ConfigError(f"code_rate: zero bits per block at K={K}")
    target = 1 << bits
    weights = WeightVector((K - w, w))
    full_size = math.comb(K, w)
    if target > full_size:
        raise ConfigError(
            f"code_rate: needs {target} codewords but only {full_size} exist at K={K}"
        )
    full = enumerate_full_scw(
        SymbolAlphabet.uniform(2), weights, cap=config.enumeration_cap
    )
    book = full if target == full_size else sample_partial_codebook(
        full, target, config.partial_seed
    )
    return book, BitMapping(book.size)


def _ber_batch(
    seed: int,
    point_index: int,
    batch_index: int,
    n: int,
    indices: np.ndarray,
    bits: int,
    model: CsiModel,
    scale: float,
) -> tuple[float, float, float, float]:
    """One batch of coded and uncoded BER trials on shared channel states."""
    rng = _stream(seed, _TAG_TRIALS, point_index, batch_index)
    cs, cn = model.sample_batch(rng, n, scale)
    M, K = indices.shape

    msg = rng.integers(0, 1 << bits, size=n)
    sent = indices[msg]
    r = rng.poisson(sent * cs[:, None] + cn[:, None])
    corr = r.astype(np.int64) @ indices.astype(np.int64).T
    decided = np.argmax(corr, axis=1)
    shifts = np.arange(bits - 1, -1, -1)
    sent_bits = (msg[:, None] >> shifts) & 1
    decided_bits = (decided[:, None] >> shifts) & 1
    coded_frac = (sent_bits != decided_bits).sum(axis=1) / bits

    raw_bits = rng.integers(0, 2, size=(n, K))
    ru = rng.poisson(raw_bits * cs[:, None] + cn[:, None])
    with np.errstate(divide="ignore"):
        threshold = cs / np.log1p(cs / cn)
    uncoded_dec = ru > threshold[:, None]
    uncoded_frac = (uncoded_dec != raw_bits).sum(axis=1) / K

    return (
        float(coded_frac.sum()),
        float((coded_frac**2).sum()),
        float(uncoded_frac.sum()),
        float((uncoded_frac**2).sum()),
    )


def run_ber_experiment(config: ExperimentConfig) -> MetricSeries:
    """Coded versus uncoded bit error rate across block lengths.

    Both schemes see the same per-block channel-state draws; the uncoded
    baseline sends one bit per symbol and detects each symbol coherently
    with the true instantaneous state.
    """
    if config.mode != "ber":
        raise ConfigError("mode: run_ber_experiment needs mode == 'ber'")
    if config.detector != "csi_free":
        raise ConfigError("detector: ber runs support the csi_free detector")
    nominal_cs = config.channel.c_n * 10.0 ** (config.snr_db / 10.0)
    if config.channel.c_n <= 0:
        raise ConfigError("channel.c_n: ber runs need a positive noise count")

    points = []
    for pi, K in enumerate(config.k_grid):
        book, mapping = _ber_code_for(config, int(K))
        model, scale = config.channel.sampler(nominal_cs)
        tasks = [
            (config.seed, pi, bi, n, book.indices, mapping.bits, model, scale)
            for bi, n in enumerate(_batch_plan(config.trials, config.batch_size))
        ]
        results = _run_tasks(_ber_batch, tasks, config.workers)
        c_sum = sum(res[0] for res in results)
        c_sq = sum(res[1] for res in results)
        u_sum = sum(res[2] for res in results)
        u_sq = sum(res[3] for res in results)
        n = config.trials
        est = c_sum / n
        stderr = math.sqrt(max(0.0, c_sq / n - est * est) / n)
        low, high = estimate_interval(c_sum * mapping.bits, n * mapping.bits)
        u_est = u_sum / n
        u_stderr = math.sqrt(max(0.0, u_sq / n - u_est * u_est) / n)
        u_low, u_high = estimate_interval(u_sum * K, n * K)
        points.append(
            MetricPoint(
                x=float(K),
                estimate=est,
                stderr=stderr,
                trials=n,
                wilson_low=low,
                wilson_high=high,
                extras=(
                    ("uncoded_estimate", u_est),
                    ("uncoded_stderr", u_stderr),
                    ("uncoded_low", u_low),
                    ("uncoded_high", u_high),
                ),
            )
        )
    return MetricSeries(kind="ber", xlabel="codeword_length", points=tuple(points))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_series_csv(series: MetricSeries, path) -> None:
    """Comma-separated output: x, estimate, low, high, trials, then bound and
    extra columns; LF line endings and '.' decimals."""
    bound_names = [name for name, _ in series.points[0].bounds] if series.points else []
    extra_names = [name for name, _ in series.points[0].extras] if series.points else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [series.xlabel, "estimate", "low", "high", "trials", "stderr"]
            + bound_names
            + extra_names
        )
        for pt in series.points:
            bound_map = dict(pt.bounds)
            extra_map = dict(pt.extras)
            writer.writerow(
                [repr(pt.x), repr(pt.estimate), repr(pt.wilson_low), repr(pt.wilson_high),
                 str(pt.trials), repr(pt.stderr)]
                + [repr(bound_map[nm]) for nm in bound_names]
                + [repr(extra_map[nm]) for nm in extra_names]
            )


def _require(data: Mapping, key: str, path: str):
    if key not in data:
        raise ConfigError(f"{path}{key}: missing required field")
    return data[key]


def config_from_mapping(data: Mapping) -> ExperimentConfig:
    """Build a validated config from a JSON-style mapping.

    Raises ``ConfigError`` with a dotted field path on schema violations.
    """
    if not isinstance(data, Mapping):
        raise ConfigError(": config must be a mapping")
    known = {
        "mode", "code", "channel", "snr_grid_db", "ber", "trials", "batch_size",
        "seed", "workers", "tie_convention", "detector", "bounds", "chernoff_t",
        "bound_csi_samples", "noncoherent_mc", "enumeration_cap",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown field")

    kwargs: dict = {}
    mode = data.get("mode", "cer")
    kwargs["mode"] = mode

    code = data.get("code", {})
    if not isinstance(code, Mapping):
        raise ConfigError("code: must be a mapping")
    if "alphabet_size" in code:
        kwargs["alphabet_size"] = int(code["alphabet_size"])
    if code.get("weights") is not None:
        kwargs["weights"] = tuple(int(x) for x in code["weights"])
        kwargs.setdefault("alphabet_size", len(kwargs["weights"]))
    if code.get("partial_size") is not None:
        kwargs["partial_size"] = int(code["partial_size"])
    if "partial_seed" in code:
        kwargs["partial_seed"] = int(code["partial_seed"])

    chan = data.get("channel", {})
    if not isinstance(chan, Mapping):
        raise ConfigError("channel: must be a mapping")
    chan_kwargs: dict = {}
    if "kind" in chan:
        chan_kwargs["kind"] = str(chan["kind"])
    if "c_n" in chan:
        chan_kwargs["c_n"] = float(chan["c_n"])
    if "params" in chan:
        try:
            chan_kwargs["params"] = PhysicalParams.from_mapping(chan["params"])
        except ChannelError as exc:
            raise ConfigError(f"channel.params: {exc}") from exc
    if "mixture_offsets_db" in chan:
        chan_kwargs["mixture_offsets_db"] = tuple(float(x) for x in chan["mixture_offsets_db"])
    if "mixture_weights" in chan:
        chan_kwargs["mixture_weights"] = tuple(float(x) for x in chan["mixture_weights"])
    if "ranges" in chan:
        ranges = chan["ranges"]
        if not isinstance(ranges, Mapping):
            raise ConfigError("channel.ranges: must map field names to [low, high]")
        parsed = []
        for name, pair in ranges.items():
            if not isinstance(pair, Sequence) or len(pair) != 2:
                raise ConfigError(f"channel.ranges.{name}: needs [low, high]")
            parsed.append((str(name), float(pair[0]), float(pair[1])))
        chan_kwargs["ranges"] = tuple(parsed)
    try:
        kwargs["channel"] = ChannelSpec(**chan_kwargs)
    except ChannelError as exc:
        raise ConfigError(f"channel: {exc}") from exc

    if "snr_grid_db" in data:
        kwargs["snr_grid_db"] = tuple(float(x) for x in data["snr_grid_db"])

    ber = data.get("ber", {})
    if not isinstance(ber, Mapping):
        raise ConfigError("ber: must be a mapping")
    if ber.get("snr_db") is not None:
        kwargs["snr_db"] = float(ber["snr_db"])
    if ber.get("k_grid"):
        kwargs["k_grid"] = tuple(int(x) for x in ber["k_grid"])
    if ber.get("code_rate") is not None:
        kwargs["code_rate"] = float(ber["code_rate"])
    if ber.get("density") is not None:
        kwargs["density"] = float(ber["density"])

    for name in ("trials", "batch_size", "seed", "workers", "bound_csi_samples",
                 "noncoherent_mc", "enumeration_cap"):
        if name in data:
            kwargs[name] = int(data[name])
    if "tie_convention" in data:
        kwargs["tie_convention"] = str(data["tie_convention"])
    if "detector" in data:
        kwargs["detector"] = str(data["detector"])
    if "bounds" in data:
        kwargs["bounds"] = tuple(str(x) for x in data["bounds"])
    if "chernoff_t" in data:
        kwargs["chernoff_t"] = float(data["chernoff_t"])

    return ExperimentConfig(**kwargs)


def config_to_mapping(config: ExperimentConfig) -> dict:
    """Inverse of ``config_from_mapping`` for manifests."""
    chan = config.channel
    out = {
        "mode": config.mode,
        "code": {
            "alphabet_size": config.alphabet_size,
            "weights": list(config.weights) if config.weights else None,
            "partial_size": config.partial_size,
            "partial_seed": config.partial_seed,
        },
        "channel": {
            "kind": chan.kind,
            "c_n": chan.c_n,
            "params": {
                "n_tx": chan.params.n_tx,
                "rx_radius": chan.params.rx_radius,
                "distance": chan.params.distance,
                "diffusion": chan.params.diffusion,
                "enzyme_rate_product": chan.params.enzyme_rate_product,
                "flow_parallel": chan.params.flow_parallel,
                "flow_perpendicular": chan.params.flow_perpendicular,
                "t_samp": chan.params.t_samp,
            },
            "mixture_offsets_db": list(chan.mixture_offsets_db),
            "mixture_weights": list(chan.mixture_weights),
            "ranges": {name: [lo, hi] for name, lo, hi in chan.ranges},
        },
        "snr_grid_db": list(config.snr_grid_db),
        "ber": {
            "snr_db": config.snr_db,
            "k_grid": list(config.k_grid),
            "code_rate": config.code_rate,
            "density": config.density,
        },
        "trials": config.trials,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "workers": config.workers,
        "tie_convention": config.tie_convention,
        "detector": config.detector,
        "bounds": list(config.bounds),
        "chernoff_t": config.chernoff_t,
        "bound_csi_samples": config.bound_csi_samples,
        "noncoherent_mc": config.noncoherent_mc,
        "enumeration_cap": config.enumeration_cap,
    }
    return out
