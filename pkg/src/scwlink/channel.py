"""Diffusive point-release channel with Poisson counting reception.

The expected molecule count at a spherical passive observer, a time ``t``
after an impulsive release into an unbounded medium with uniform flow and
first-order degradation, is

    n_tx * V_rx / (4 pi D t)^(3/2)
        * exp(-k_d t - ((d - v_par t)^2 + (v_perp t)^2) / (4 D t)),

where ``k_d`` is the combined degradation rate (reaction rate times enzyme
concentration).  The channel state is the pair of expected signal and noise
counts; each symbol observation is Poisson with mean ``s * c_s + c_n``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .codebook import SymbolAlphabet

__all__ = [
    "DEFAULT_PARAMS",
    "ChannelError",
    "Csi",
    "CsiMixture",
    "CsiModel",
    "DeterministicCsi",
    "PhysicalParams",
    "RandomPhysicalCsi",
    "cir_expected_count",
    "csi_from_params",
    "default_random_csi_model",
    "sample_csi",
    "transmit",
]


class ChannelError(ValueError):
    """Invalid channel parameters or arguments."""


@dataclass(frozen=True)
class PhysicalParams:
    """Physical link parameters, SI units.

    Defaults: 1e4 released molecules, 50 nm receiver radius, 500 nm distance,
    D = 4.3e-10 m^2/s, combined degradation 200 1/s, 1 mm/s flow in both
    components, 0.1 ms sampling time.
    """

    n_tx: float = 1.0e4
    rx_radius: float = 50e-9
    distance: float = 500e-9
    diffusion: float = 4.3e-10
    enzyme_rate_product: float = 200.0
    flow_parallel: float = 1.0e-3
    flow_perpendicular: float = 1.0e-3
    t_samp: float = 1.0e-4

    def __post_init__(self) -> None:
        for name in ("n_tx", "rx_radius", "distance", "enzyme_rate_product"):
            if getattr(self, name) < 0:
                raise ChannelError(f"{name} must be nonnegative")
        if self.diffusion <= 0:
            raise ChannelError("diffusion must be positive")
        if self.t_samp <= 0:
            raise ChannelError("t_samp must be positive")

    @property
    def rx_volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.rx_radius**3

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: Mapping[str, float]) -> "PhysicalParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ChannelError(f"unknown physical parameter(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


DEFAULT_PARAMS = PhysicalParams()


def _expected_count(n_tx, rx_volume, distance, diffusion, decay, v_par, v_perp, t):
    """Vectorized impulse-response formula; any argument may be an array."""
    spread = 4.0 * diffusion * t
    prefactor = n_tx * rx_volume / (np.pi * spread) ** 1.5
    drift = (distance - v_par * t) ** 2 + (v_perp * t) ** 2
    return prefactor * np.exp(-decay * t - drift / spread)


def cir_expected_count(params: PhysicalParams, t) -> float | np.ndarray:
    """Expected observed molecule count at time ``t`` after a full release."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr <= 0):
        raise ChannelError("observation time must be positive")
    out = _expected_count(
        params.n_tx,
        params.rx_volume,
        params.distance,
        params.diffusion,
        params.enzyme_rate_product,
        params.flow_parallel,
        params.flow_perpendicular,
        t_arr,
    )
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


@dataclass(frozen=True)
class Csi:
    """Channel state: expected signal and noise molecule counts."""

    c_s: float
    c_n: float

    def __post_init__(self) -> None:
        if self.c_s < 0 or self.c_n < 0:
            raise ChannelError("expected counts must be nonnegative")

    @property
    def snr(self) -> float:
        if self.c_n <= 0:
            raise ChannelError("SNR undefined for zero noise count")
        return self.c_s / self.c_n

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)


def csi_from_params(
    params: PhysicalParams,
    c_n: float | None = None,
    snr: float | None = None,
) -> Csi:
    """Channel state at the sampling time, with noise given directly or via SNR."""
    if (c_n is None) == (snr is None):
        raise ChannelError("give exactly one of c_n or snr")
    c_s = cir_expected_count(params, params.t_samp)
    if snr is not None:
        if snr <= 0:
            raise ChannelError("snr must be positive")
        c_n = c_s / snr
    return Csi(c_s=float(c_s), c_n=float(c_n))


@dataclass(frozen=True)
class DeterministicCsi:
    """Channel state fixed across all blocks."""

    csi: Csi

    def sample_batch(self, rng: np.random.Generator, n: int, signal_scale: float = 1.0):
        cs = np.full(n, self.csi.c_s * signal_scale)
        cn = np.full(n, self.csi.c_n)
        return cs, cn


@dataclass(frozen=True)
class CsiMixture:
    """Channel state drawn per block from a finite set of states."""

    components: tuple[Csi, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.components) != len(self.probabilities) or not self.components:
            raise ChannelError("mixture needs matching nonempty components and probabilities")
        if any(p < 0 for p in self.probabilities):
            raise ChannelError("mixture probabilities must be nonnegative")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ChannelError("mixture probabilities must sum to 1")

    def sample_batch(self, rng: np.random.Generator, n: int, signal_scale: float = 1.0):
        pick = rng.choice(len(self.components), size=n, p=self.probabilities)
        cs = np.asarray([c.c_s for c in self.components])[pick] * signal_scale
        cn = np.asarray([c.c_n for c in self.components])[pick]
        return cs, cn


# PhysicalParams fields that may be randomized per block.
_SAMPLABLE_FIELDS = (
    "n_tx",
    "rx_radius",
    "distance",
    "diffusion",
    "enzyme_rate_product",
    "flow_parallel",
    "flow_perpendicular",
)


@dataclass(frozen=True)
class RandomPhysicalCsi:
    """Channel state from physical parameters redrawn each block.

    Selected fields are drawn uniformly over ``(field, low, high)`` ranges and
    mapped through the impulse response at the sampling time; the noise count
    stays fixed.
    """

    base: PhysicalParams
    c_n: float
    ranges: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        if self.c_n < 0:
            raise ChannelError("noise count must be nonnegative")
        if not self.ranges:
            raise ChannelError("at least one randomized field is required")
        for name, low, high in self.ranges:
            if name not in _SAMPLABLE_FIELDS:
                raise ChannelError(f"cannot randomize field {name!r}")
            if not (0 <= low <= high):
                raise ChannelError(f"bad range for {name!r}: ({low}, {high})")

    def sample_batch(self, rng: np.random.Generator, n: int, signal_scale: float = 1.0):
        fields = {
            "n_tx": self.base.n_tx,
            "rx_volume": self.base.rx_volume,
            "distance": self.base.distance,
            "diffusion": self.base.diffusion,
            "decay": self.base.enzyme_rate_product,
            "v_par": self.base.flow_parallel,
            "v_perp": self.base.flow_perpendicular,
        }
        rename = {
            "enzyme_rate_product": "decay",
            "flow_parallel": "v_par",
            "flow_perpendicular": "v_perp",
        }
        for name, low, high in self.ranges:
            draw = rng.uniform(low, high, size=n)
            if name == "rx_radius":
                fields["rx_volume"] = 4.0 / 3.0 * np.pi * draw**3
            else:
                fields[rename.get(name, name)] = draw
        cs = _expected_count(t=self.base.t_samp, **fields) * signal_scale
        return np.asarray(cs, dtype=np.float64).reshape(n), np.full(n, self.c_n)


CsiModel = Union[DeterministicCsi, CsiMixture, RandomPhysicalCsi]


def default_random_csi_model(
    base: PhysicalParams = DEFAULT_PARAMS, c_n: float = 4.9
) -> RandomPhysicalCsi:
    """Documented default block-fading model: distance varies by +-20 percent
    and both flow components by +-50 percent around the base parameters."""
    return RandomPhysicalCsi(
        base=base,
        c_n=c_n,
        ranges=(
            ("distance", 0.8 * base.distance, 1.2 * base.distance),
            ("flow_parallel", 0.5 * base.flow_parallel, 1.5 * base.flow_parallel),
            ("flow_perpendicular", 0.5 * base.flow_perpendicular, 1.5 * base.flow_perpendicular),
        ),
    )


def sample_csi(model: CsiModel, rng: np.random.Generator) -> Csi:
    """Draw one block's channel state from a model."""
    cs, cn = model.sample_batch(rng, 1)
    return Csi(c_s=float(cs[0]), c_n=float(cn[0]))


def transmit(
    codeword: Sequence[int],
    alphabet: SymbolAlphabet,
    csi: Csi,
    rng: np.random.Generator,
) -> np.ndarray:
    """Observation vector for one codeword: independent Poisson counts."""
    idx = np.asarray(codeword, dtype=np.int64)
    if idx.ndim != 1 or idx.size < 1:
        raise ChannelError("codeword must be a nonempty index sequence")
    if idx.min() < 0 or idx.max() >= alphabet.size:
        raise ChannelError("codeword indices out of alphabet range")
    means = alphabet.as_array()[idx] * csi.c_s + csi.c_n
    return rng.poisson(means)
