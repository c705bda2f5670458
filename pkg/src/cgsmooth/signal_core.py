"""Signals, the synthetic test waveform, seeded Gaussian noise and quality metrics.

The noise generator is deliberately not ``numpy.random``: golden files must be
reproducible from the documentation alone, so the stream is defined here.

Noise stream (``add_noise``)
    For sample index ``i`` (0-based) draw two uniforms from a counter-based
    SplitMix64 generator::

        u(c) = (splitmix64(seed + c * 0x9E3779B97F4A7C15) >> 11 + 0.5) * 2**-53

    with counters ``c = 2*(i//2) + 1`` and ``c = 2*(i//2) + 2`` (mod 2**64),
    i.e. one pair per two samples. Each pair ``(u1, u2)`` is turned into two
    standard normals by the Box-Muller transform::

        z0 = sqrt(-2 ln u1) * cos(2 pi u2)   -> even index
        z1 = sqrt(-2 ln u1) * sin(2 pi u2)   -> odd index

    and scaled by ``sqrt(variance)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, PsnrUndefinedError, SpecificationError

__all__ = [
    "Signal",
    "Constant",
    "Step",
    "Ramp",
    "Sine",
    "CleanSignalSpec",
    "DEFAULT_CLEAN_SPEC",
    "NoiseSpec",
    "Metrics",
    "generate_clean",
    "add_noise",
    "standard_normal_stream",
    "compute_metrics",
    "write_signal_csv",
    "read_signal_csv",
    "signal_csv_text",
]


@dataclass(frozen=True, eq=False)
class Signal:
    """A 1D real signal sampled at strictly increasing positions.

    ``positions`` defaults to the unit grid ``0, 1, ..., N-1``. Arrays are
    copied and made read-only, so a ``Signal`` can be shared freely.
    """

    samples: np.ndarray
    positions: np.ndarray = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).ravel()
        if samples.size < 1:
            raise SpecificationError("a signal needs at least one sample")
        if self.positions is None:
            positions = np.arange(samples.size, dtype=np.float64)
        else:
            positions = np.array(self.positions, dtype=np.float64).ravel()
        if positions.size != samples.size:
            raise DimensionError(
                f"{samples.size} samples but {positions.size} positions"
            )
        if not (np.all(np.isfinite(samples)) and np.all(np.isfinite(positions))):
            raise SpecificationError("signal values must be finite")
        if np.any(np.diff(positions) <= 0):
            raise SpecificationError("positions must be strictly increasing")
        samples.flags.writeable = False
        positions.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "positions", positions)

    def __len__(self):
        return self.samples.size

    def with_samples(self, samples) -> "Signal":
        """New signal on the same positions."""
        return Signal(samples, self.positions)


ArrayOrSignal = Union[Signal, np.ndarray, Sequence[float]]


def as_array(x: ArrayOrSignal) -> np.ndarray:
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x, dtype=np.float64)


# --------------------------------------------------------------------------
# clean signal segments


@dataclass(frozen=True)
class Constant:
    level: float
    count: int

    def render(self, start_value):
        return np.full(self.count, float(self.level))


@dataclass(frozen=True)
class Step(Constant):
    """A plateau that begins with a jump away from the preceding level."""


@dataclass(frozen=True)
class Ramp:
    start: float
    stop: float
    count: int

    def render(self, start_value):
        # endpoint excluded so a following plateau at ``stop`` continues smoothly
        return self.start + (self.stop - self.start) * np.arange(self.count) / self.count


@dataclass(frozen=True)
class Sine:
    amplitude: float
    period: float
    count: int
    center: float = 0.5

    def render(self, start_value):
        t = np.arange(self.count, dtype=np.float64)
        return self.center + self.amplitude * np.sin(2.0 * np.pi * t / self.period)


@dataclass(frozen=True)
class CleanSignalSpec:
    segments: tuple
    length: int = 4730

    def validate(self):
        if self.length < 1:
            raise SpecificationError("length must be positive")
        counts = [seg.count for seg in self.segments]
        if any(int(c) != c or c < 1 for c in counts):
            raise SpecificationError("segment counts must be positive integers")
        if sum(counts) != self.length:
            raise SpecificationError(
                f"segment counts sum to {sum(counts)}, expected {self.length}"
            )

    def resized(self, length: int) -> "CleanSignalSpec":
        """Same waveform with segment counts scaled to total ``length``.

        Periods are kept, so a much shorter signal loses its sines' shape.
        """
        if length == self.length:
            return self
        if length < len(self.segments):
            raise SpecificationError(
                f"length must be at least {len(self.segments)} (one sample per segment)"
            )
        counts = [seg.count for seg in self.segments]
        total = sum(counts)
        edges = [round(length * c / total) for c in itertools.accumulate(counts)]
        new_counts = [b - a for a, b in zip([0] + edges, edges)]
        # rounding can starve a short segment; borrow from the longest one
        for i, c in enumerate(new_counts):
            if c < 1:
                j = max(range(len(new_counts)), key=new_counts.__getitem__)
                new_counts[j] -= 1 - c
                new_counts[i] = 1
        segments = tuple(replace(seg, count=c) for seg, c in zip(self.segments, new_counts))
        return CleanSignalSpec(segments, length)


# Plateaus separated by large (0.3 to 1.0) and small (0.18 to 0.27) jumps, three
# linear ramps and two sines (periods 250 and 120), spanning exactly [0, 1].
# Large jumps stay sharp under the filters; small jumps and curved stretches
# degrade when oversmoothed, which gives the PSNR-vs-iterations curves an
# interior maximum.
DEFAULT_CLEAN_SPEC = CleanSignalSpec(
    segments=(
        Constant(0.2, 300),
        Step(0.7, 250),
        Step(0.52, 150),
        Ramp(0.52, 0.3, 240),
        Constant(0.3, 200),
        Sine(0.15, 250.0, 750, center=0.5),
        Step(0.9, 200),
        Step(0.72, 150),
        Ramp(0.72, 0.1, 360),
        Constant(0.1, 200),
        Step(0.28, 150),
        Step(0.55, 150),
        Sine(0.105, 120.0, 480, center=0.55),
        Step(1.0, 200),
        Step(0.82, 120),
        Step(0.0, 200),
        Ramp(0.0, 0.5, 240),
        Step(0.5, 390),
    ),
    length=4730,
)


def generate_clean(spec: CleanSignalSpec = DEFAULT_CLEAN_SPEC) -> Signal:
    """Render a piecewise clean signal on positions ``0..N-1``."""
    spec.validate()
    parts = []
    last = 0.0
    for seg in spec.segments:
        part = seg.render(last)
        parts.append(part)
        last = part[-1]
    samples = np.concatenate(parts)
    if samples.min() < 0.0 or samples.max() > 1.0:
        raise SpecificationError("clean signal values must lie in [0, 1]")
    return Signal(samples)


# --------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    variance: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.variance > 0:
            raise SpecificationError("noise variance must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise SpecificationError("seed must be a 64-bit unsigned integer")


_GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _uniforms(seed: int, counters: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = _splitmix64(np.uint64(seed) + counters * _GOLDEN_GAMMA)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normal_stream(seed: int, n: int) -> np.ndarray:
    """First ``n`` standard normals of the documented SplitMix64/Box-Muller stream."""
    pairs = (n + 1) // 2
    counters = np.arange(pairs, dtype=np.uint64) * np.uint64(2)
    u1 = _uniforms(seed, counters + np.uint64(1))
    u2 = _uniforms(seed, counters + np.uint64(2))
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


def add_noise(x: Signal, noise: NoiseSpec) -> Signal:
    eta = math.sqrt(noise.variance) * standard_normal_stream(int(noise.seed), len(x))
    return x.with_samples(x.samples + eta)


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metrics:
    mse: float
    psnr_db: float
    snr_db: float

    def as_dict(self):
        return {"mse": self.mse, "psnr_db": self.psnr_db, "snr_db": self.snr_db}


def compute_metrics(reference: ArrayOrSignal, estimate: ArrayOrSignal) -> Metrics:
    """MSE, PSNR (peak = dynamic range of ``reference``) and SNR, in dB.

    A perfect estimate gives ``mse == 0`` and ``math.inf`` for both ratios.
    """
    ref = as_array(reference)
    est = as_array(estimate)
    if ref.shape != est.shape:
        raise DimensionError(f"length mismatch: {ref.size} vs {est.size}")
    peak = float(ref.max() - ref.min())
    if peak == 0.0:
        raise PsnrUndefinedError("reference is constant; PSNR peak is zero")
    err = ref - est
    sq = float(np.dot(err, err))
    mse = sq / ref.size
    if sq == 0.0:
        return Metrics(0.0, math.inf, math.inf)
    psnr = 10.0 * math.log10(peak * peak / mse)
    snr = 10.0 * math.log10(float(np.dot(ref, ref)) / sq)
    return Metrics(mse, psnr, snr)


# --------------------------------------------------------------------------
# CSV


def signal_csv_text(x: Signal) -> str:
    buf = io.StringIO()
    buf.write("index,position,value\n")
    for i, (p, v) in enumerate(zip(x.positions, x.samples)):
        buf.write(f"{i},{p:.17g},{v:.17g}\n")
    return buf.getvalue()


def write_signal_csv(x: Signal, path) -> Path:
    path = Path(path)
    path.write_text(signal_csv_text(x), newline="\n")
    return path


def read_signal_csv(path) -> Signal:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["index", "position", "value"]:
            raise SpecificationError(
                f"{path}: expected header index,position,value, got {reader.fieldnames}"
            )
        rows = list(reader)
    positions = [float(r["position"]) for r in rows]
    values = [float(r["value"]) for r in rows]
    return Signal(values, positions)
