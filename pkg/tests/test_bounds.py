"""Bound computations against independent brute-force oracles."""

import math

import mpmath
import numpy as np
import pytest

from scwlink.bounds import (
    BoundError,
    _pair_exponents,
    chernoff_union_bound,
    optimize_chernoff_t,
    orderstat_bounds,
    poisson_cdf,
    poisson_pmf,
    skellam_pmf,
    skellam_union_bound,
)
from scwlink.channel import Csi
from scwlink.codebook import (
    Codebook,
    SymbolAlphabet,
    WeightVector,
    distance_spectrum,
    enumerate_full_scw,
)
from scwlink.detect import log_likelihood

BINARY = SymbolAlphabet.uniform(2)


def poisson_pmf_mp(x: int, lam: float) -> float:
    """Extended-precision Poisson mass oracle."""
    with mpmath.workdps(50):
        if lam == 0:
            return 1.0 if x == 0 else 0.0
        v = mpmath.exp(x * mpmath.log(lam) - lam - mpmath.loggamma(x + 1))
        return float(v)


def skellam_pmf_conv(x: int, lam1: float, lam2: float, terms: int = 400) -> float:
    """Convolution oracle: P(N2 - N1 = x) summed over the joint support."""
    from scipy.stats import poisson as sp_poisson

    j = np.arange(max(0, -x), terms)
    return float(np.sum(sp_poisson.pmf(j, lam1) * sp_poisson.pmf(j + x, lam2)))


class TestPoissonKernel:
    def test_degenerate_zero_mean(self):
        assert poisson_pmf(0, 0.0) == 1.0
        assert poisson_cdf(0, 0.0) == 1.0
        assert poisson_pmf(3, 0.0) == 0.0

    def test_pmf_value(self):
        assert poisson_pmf(3, 2.5) == pytest.approx(poisson_pmf_mp(3, 2.5), abs=1e-12)
        assert poisson_pmf(3, 2.5) == pytest.approx(0.21376, abs=5e-6)

    def test_negative_and_fractional_support(self):
        assert poisson_pmf(-1, 2.0) == 0.0
        assert poisson_cdf(-1, 2.0) == 0.0

    @pytest.mark.parametrize("lam", [0.3, 2.5, 11.0, 50.0])
    def test_cdf_matches_direct_summation(self, lam):
        xs = np.arange(0, 201)
        cumulative = np.cumsum(poisson_pmf(xs, lam))
        cdf = poisson_cdf(xs, lam)
        assert np.max(np.abs(cdf - cumulative)) < 1e-12

    def test_vectorized_shapes(self):
        out = poisson_pmf(np.arange(5), 2.0)
        assert out.shape == (5,)
        assert poisson_cdf(np.arange(5), 2.0).shape == (5,)


class TestSkellamPmf:
    def test_degenerate_limits(self):
        assert skellam_pmf(1, 0.0, 2.0) == pytest.approx(poisson_pmf(1, 2.0), abs=1e-14)
        assert skellam_pmf(-1, 0.0, 2.0) == 0.0
        assert skellam_pmf(-2, 3.0, 0.0) == pytest.approx(poisson_pmf(2, 3.0), abs=1e-14)
        assert skellam_pmf(1, 3.0, 0.0) == 0.0

    def test_symmetric_unit_means(self):
        oracle = skellam_pmf_conv(0, 1.0, 1.0, terms=60)
        assert skellam_pmf(0, 1.0, 1.0) == pytest.approx(oracle, abs=1e-12)
        assert skellam_pmf(0, 1.0, 1.0) == pytest.approx(0.30851, abs=5e-6)

    def test_normalization(self):
        xs = np.arange(-60, 61)
        total = skellam_pmf(xs, 3.0, 2.0).sum()
        assert total == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("lam1,lam2", [(0.5, 0.5), (3.0, 2.0), (17.0, 4.0), (30.0, 30.0)])
    def test_matches_convolution_oracle(self, lam1, lam2):
        for x in range(-40, 41, 5):
            oracle = skellam_pmf_conv(x, lam1, lam2)
            assert skellam_pmf(x, lam1, lam2) == pytest.approx(oracle, abs=1e-9)

    def test_negative_means_rejected(self):
        with pytest.raises(BoundError):
            skellam_pmf(0, -1.0, 1.0)


def exact_pep_always_error(sent, alt, csi, cap=60):
    """Brute-force pairwise error probability, ties counted as errors.

    Only the positions where the codewords differ matter; all joint outcomes
    with per-position counts below ``cap`` are enumerated (the discarded mass
    is far below 1e-10 for the means used here).
    """
    import itertools

    diff = [k for k in range(len(sent)) if sent[k] != alt[k]]
    means_sent = [sent[k] * csi.c_s + csi.c_n for k in diff]
    weights = [
        math.log((1 + alt[k] * csi.snr) / (1 + sent[k] * csi.snr)) for k in diff
    ]
    per_pos_pmf = [
        [poisson_pmf_mp(c, lam) for c in range(cap)] for lam in means_sent
    ]
    total = 0.0
    for outcome in itertools.product(range(cap), repeat=len(diff)):
        p = 1.0
        x = 0.0
        for axis, c in enumerate(outcome):
            p *= per_pos_pmf[axis][c]
            x += weights[axis] * c
        if x >= 0:
            total += p
    return total


class TestChernoffBound:
    def test_single_codeword_is_zero(self):
        book = Codebook.from_codewords(BINARY, [(1, 0)])
        assert chernoff_union_bound(book, Csi(5, 1), 0.5).value == 0.0

    def test_identical_pair_exponent_is_zero(self):
        # the diagonal of the pair matrix guards the s != s-hat exclusion
        book = enumerate_full_scw(BINARY, WeightVector((2, 2)))
        exps = _pair_exponents(book.symbol_matrix(), 5.0, 1.0, 0.7)
        assert np.allclose(np.diag(exps), 0.0)

    @pytest.mark.parametrize("t", [0.3, 0.5, 1.0])
    def test_dominates_exact_pep_for_two_codewords(self, t):
        csi = Csi(4.0, 1.0)
        book = Codebook.from_codewords(BINARY, [(0, 1), (1, 0)])
        exact = exact_pep_always_error((0, 1), (1, 0), csi)
        bound = chernoff_union_bound(book, csi, t).value
        # the bound averages two symmetric pair terms, so it bounds the PEP
        assert bound >= exact - 1e-12

    def test_nonpositive_t_rejected(self):
        book = enumerate_full_scw(BINARY, WeightVector((1, 1)))
        with pytest.raises(BoundError):
            chernoff_union_bound(book, Csi(1, 1), 0.0)

    def test_requires_noise(self):
        book = enumerate_full_scw(BINARY, WeightVector((1, 1)))
        with pytest.raises(BoundError):
            chernoff_union_bound(book, Csi(1, 0.0), 0.5)


class TestOptimizeChernoff:
    def test_never_worse_than_default_t(self):
        csi = Csi(15.0, 4.9)
        for counts in [(2, 2, 2), (3, 2, 1), (5, 0, 1)]:
            book = enumerate_full_scw(SymbolAlphabet.uniform(3), WeightVector(counts))
            t_star, report = optimize_chernoff_t(book, csi)
            assert report.value <= chernoff_union_bound(book, csi, 0.5).value + 1e-15

    def test_grid_search_agrees(self):
        book = enumerate_full_scw(BINARY, WeightVector((3, 3)))
        csi = Csi(20.0, 4.0)
        t_star, report = optimize_chernoff_t(book, csi)
        grid = np.linspace(0.01, 5.0, 100)
        grid_vals = [chernoff_union_bound(book, csi, float(t)).value for t in grid]
        assert report.value <= min(grid_vals) * (1 + 1e-6)

    def test_single_codeword_convention(self):
        book = Codebook.from_codewords(BINARY, [(1, 0)])
        t_star, report = optimize_chernoff_t(book, Csi(3, 1), t_max=5.0)
        assert t_star == 5.0
        assert report.value == 0.0


def skellam_union_oracle(d, csi, terms=300):
    """Direct tail sum over the convolution pmf for one ordered pair."""
    lam1 = d * (csi.c_s + csi.c_n) / 2
    lam2 = d * csi.c_n / 2
    total = 0.5 * skellam_pmf_conv(0, lam1, lam2, terms)
    for x in range(1, terms):
        total += skellam_pmf_conv(x, lam1, lam2, terms)
    return total


class TestSkellamUnionBound:
    def test_single_pair_matches_oracle(self):
        csi = Csi(10.0, 1.0)
        report = skellam_union_bound({2: 1}, 2, csi)
        assert report.value == pytest.approx(skellam_union_oracle(2, csi) / 2, rel=1e-9)

    def test_zero_signal_pair_term_is_half(self):
        # equal Skellam means make the difference symmetric around zero
        csi = Csi(0.0, 3.0)
        report = skellam_union_bound({4: 2}, 2, csi)
        assert report.value == pytest.approx(0.5 * 2 / 2, abs=1e-12)

    def test_empty_spectrum(self):
        assert skellam_union_bound({}, 5, Csi(1, 1)).value == 0.0

    def test_odd_distance_rejected(self):
        with pytest.raises(BoundError):
            skellam_union_bound({3: 4}, 4, Csi(1, 1))

    def test_full_codebook_value(self):
        book = enumerate_full_scw(BINARY, WeightVector((5, 5)))
        spectrum = distance_spectrum(book)
        csi = Csi(49.0, 4.9)
        value = skellam_union_bound(spectrum, book.size, csi).value
        oracle = sum(
            cnt * skellam_union_oracle(d, csi) for d, cnt in spectrum.items()
        ) / book.size
        assert value == pytest.approx(oracle, rel=1e-6)


def exact_cer_two_symbols(csi, cap=60):
    """Exhaustive codeword error rate for the K=2, weight-1 full code.

    Ties between the two observation positions are charged half an error.
    """
    total = 0.0
    for r1 in range(cap):
        p1 = poisson_pmf_mp(r1, csi.c_s + csi.c_n)
        for r2 in range(cap):
            p2 = poisson_pmf_mp(r2, csi.c_n)
            if r1 < r2:
                total += p1 * p2
            elif r1 == r2:
                total += 0.5 * p1 * p2
    return total


class TestOrderstatBounds:
    def test_k2_sandwich_contains_exact_cer(self):
        csi = Csi(3.0, 1.0)
        lower, upper = orderstat_bounds(2, 1, csi)
        exact = exact_cer_two_symbols(csi)
        assert lower.value <= exact + 1e-12
        assert exact <= upper.value + 1e-12
        # for a single signal and a single noise draw the sums are exact
        assert lower.value == pytest.approx(exact - 0.5 * tie_mass(csi), abs=1e-9)

    def test_high_signal_asymptote(self):
        lower, upper = orderstat_bounds(10, 5, Csi(1e4, 1.0))
        assert upper.value < 1e-6
        assert lower.value <= upper.value

    def test_lower_below_upper_everywhere(self):
        for K in (2, 3, 5, 8, 12):
            for w in range(1, K):
                for snr_db in np.arange(-5, 20.1, 5.0):
                    csi = Csi(4.9 * 10 ** (snr_db / 10), 4.9)
                    lower, upper = orderstat_bounds(K, w, csi)
                    assert lower.value <= upper.value + 1e-15

    def test_monotone_in_signal(self):
        values = []
        for snr_db in np.arange(-5, 20.1, 2.5):
            csi = Csi(4.9 * 10 ** (snr_db / 10), 4.9)
            lower, upper = orderstat_bounds(10, 5, csi)
            values.append((lower.value, upper.value))
        for (lo_a, up_a), (lo_b, up_b) in zip(values, values[1:]):
            assert lo_b <= lo_a + 1e-12
            assert up_b <= up_a + 1e-12

    def test_degenerate_weights(self):
        lower, upper = orderstat_bounds(6, 0, Csi(5, 1))
        assert lower.value == upper.value == 0.0
        lower, upper = orderstat_bounds(6, 6, Csi(5, 1))
        assert lower.value == upper.value == 0.0

    def test_invalid_weight_rejected(self):
        with pytest.raises(BoundError):
            orderstat_bounds(4, 5, Csi(1, 1))
        with pytest.raises(BoundError):
            orderstat_bounds(4, -1, Csi(1, 1))


def tie_mass(csi, cap=60):
    """Probability that the two positions of the K=2 code observe equal counts."""
    return sum(
        poisson_pmf_mp(r, csi.c_s + csi.c_n) * poisson_pmf_mp(r, csi.c_n)
        for r in range(cap)
    )


class TestBoundOrderingAcrossFamilies:
    def test_bounds_are_monotone_in_signal_for_chernoff_and_skellam(self):
        book = enumerate_full_scw(BINARY, WeightVector((5, 5)))
        spectrum = distance_spectrum(book)
        chern, skell = [], []
        for snr_db in np.arange(0, 20.1, 5.0):
            csi = Csi(4.9 * 10 ** (snr_db / 10), 4.9)
            chern.append(chernoff_union_bound(book, csi, 0.5).value)
            skell.append(skellam_union_bound(spectrum, book.size, csi).value)
        assert all(b <= a for a, b in zip(chern, chern[1:]))
        assert all(b <= a for a, b in zip(skell, skell[1:]))
