"""Banded weight, degree and Laplacian operators for the bilateral and guided filters.

The weight matrix ``W`` of a 1D chain graph is symmetric and banded, so only
the main diagonal and the upper off-diagonals are stored::

    bands[k, i] == W[i, i + k]      for 0 <= k <= b, 0 <= i < n - k

and ``bands[k, n-k:]`` is zero padding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, SingularDegreeError, SizeError, SpecificationError
from .signal_core import Signal, as_array

__all__ = [
    "BandedSymOperator",
    "BfParams",
    "GfParams",
    "bf_build",
    "gf_build",
    "build_operator",
    "apply_weight",
    "apply_laplacian",
    "apply_inverse_degree",
    "dense_oracle",
    "dump_operator",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 512


@dataclass(frozen=True)
class BfParams:
    """Bilateral filter parameters.

    ``half_width`` is the neighbourhood radius in samples; the default 2 gives
    a weight band of 5 diagonals.
    """

    sigma_d: float = 0.5
    sigma_r: float = 0.1
    half_width: int = 2

    def __post_init__(self):
        if not (self.sigma_d > 0 and self.sigma_r > 0):
            raise SpecificationError("sigma_d and sigma_r must be positive")
        if int(self.half_width) != self.half_width or self.half_width < 1:
            raise SpecificationError("half_width must be an integer >= 1")


@dataclass(frozen=True)
class GfParams:
    """Guided filter parameters: regularization ``epsilon`` and box radius ``rho``.

    The implied weight matrix has half-bandwidth ``2 * rho``.
    """

    epsilon: float = 1e-3
    rho: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise SpecificationError("epsilon must be positive")
        if int(self.rho) != self.rho or self.rho < 1:
            raise SpecificationError("rho must be an integer >= 1")


@dataclass(frozen=True, eq=False)
class BandedSymOperator:
    bands: np.ndarray
    degrees: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        bands = np.array(self.bands, dtype=np.float64, ndmin=2)
        degrees = np.array(self.degrees, dtype=np.float64).ravel()
        if bands.shape[1] != degrees.size:
            raise DimensionError("bands and degrees disagree on n")
        n = degrees.size
        for k in range(1, bands.shape[0]):
            bands[k, max(n - k, 0):] = 0.0
        bands.flags.writeable = False
        degrees.flags.writeable = False
        object.__setattr__(self, "bands", bands)
        object.__setattr__(self, "degrees", degrees)

    @property
    def n(self) -> int:
        return self.degrees.size

    @property
    def half_bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    @classmethod
    def from_bands(cls, bands, kind="custom"):
        """Operator whose degrees are the row sums of the stored band."""
        bands = np.array(bands, dtype=np.float64, ndmin=2)
        return cls(bands, _band_matvec(bands, np.ones(bands.shape[1])), kind)

    def row_sums(self) -> np.ndarray:
        return _band_matvec(self.bands, np.ones(self.n))

    # raw ndarray kernels used by the solvers
    def wx(self, x: np.ndarray) -> np.ndarray:
        return _band_matvec(self.bands, x)

    def lx(self, x: np.ndarray) -> np.ndarray:
        return self.degrees * x - _band_matvec(self.bands, x)


def _band_matvec(bands: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = x.size
    y = bands[0] * x
    for k in range(1, bands.shape[0]):
        if k >= n:
            break
        w = bands[k, : n - k]
        y[: n - k] += w * x[k:]
        y[k:] += w * x[: n - k]
    return y


def bf_build(g, params: BfParams) -> BandedSymOperator:
    """Bilateral weights ``exp(-|p_i-p_j|^2/2sd^2) * exp(-(g_i-g_j)^2/2sr^2)``.

    Accepts a ``Signal`` (its positions are used) or a plain array on the unit grid.
    """
    if isinstance(g, Signal):
        vals, pos = g.samples, g.positions
    else:
        vals = np.asarray(g, dtype=np.float64)
        pos = np.arange(vals.size, dtype=np.float64)
    n = vals.size
    b = params.half_width
    bands = np.zeros((b + 1, n))
    bands[0] = 1.0
    two_sd2 = 2.0 * params.sigma_d**2
    two_sr2 = 2.0 * params.sigma_r**2
    for k in range(1, min(b, n - 1) + 1):
        dp = pos[k:] - pos[:-k]
        dg = vals[k:] - vals[:-k]
        bands[k, : n - k] = np.exp(-(dp * dp) / two_sd2) * np.exp(-(dg * dg) / two_sr2)
    return BandedSymOperator(bands, _band_matvec(bands, np.ones(n)), "bf")


def _window_stats(vals: np.ndarray, rho: int):
    """Size, mean and population variance of ``vals`` over each clipped window."""
    n = vals.size
    size = np.zeros(n)
    total = np.zeros(n)
    for a in range(-rho, rho + 1):
        k0, k1 = max(0, -a), min(n, n - a)
        size[k0:k1] += 1.0
        total[k0:k1] += vals[k0 + a : k1 + a]
    mu = total / size
    var = np.zeros(n)
    for a in range(-rho, rho + 1):
        k0, k1 = max(0, -a), min(n, n - a)
        dev = vals[k0 + a : k1 + a] - mu[k0:k1]
        var[k0:k1] += dev * dev
    return size, mu, var / size


def gf_build(g, params: GfParams) -> BandedSymOperator:
    """Guided-filter weight matrix with windows truncated at the signal ends.

    Each window ``w_k = [k-rho, k+rho]`` clipped to the signal contributes
    ``(1 + (g_i-mu_k)(g_j-mu_k)/(var_k+eps)) / |w_k|**2`` to ``W[i, j]`` for
    every pair ``i, j`` inside it (``var_k`` is the population variance).
    Clipped windows leave boundary rows summing to less than one; the
    deficit is added to the diagonal so that every row sums to one, which
    keeps ``D = I`` and leaves the off-diagonal (graph edge) weights as given.
    """
    vals = as_array(g)
    n = vals.size
    rho = params.rho
    size, mu, var = _window_stats(vals, rho)
    c = 1.0 / (size * size)
    e = c / (var + params.epsilon)

    bands = np.zeros((2 * rho + 1, n))
    # pair (i, j) = (k + a, k + a + t) lies in window k when -rho <= a and a + t <= rho
    for a in range(-rho, rho + 1):
        for t in range(0, rho - a + 1):
            k0, k1 = max(0, -a), min(n, n - a - t)
            if k1 <= k0:
                continue
            di = vals[k0 + a : k1 + a] - mu[k0:k1]
            dj = vals[k0 + a + t : k1 + a + t] - mu[k0:k1]
            bands[t, k0 + a : k1 + a] += c[k0:k1] + e[k0:k1] * di * dj
    bands[0] += 1.0 - _band_matvec(bands, np.ones(n))
    return BandedSymOperator(bands, np.ones(n), "gf")


def build_operator(g, params) -> BandedSymOperator:
    """Dispatch on the parameter type."""
    if isinstance(params, BfParams):
        return bf_build(g, params)
    if isinstance(params, GfParams):
        return gf_build(g, params)
    raise SpecificationError(f"unknown filter parameters {params!r}")


def _check_len(op: BandedSymOperator, x):
    if len(x) != op.n:
        raise DimensionError(f"operator has n={op.n}, vector has {len(x)}")


def _wrap(x, values):
    return x.with_samples(values) if isinstance(x, Signal) else values


def apply_weight(op: BandedSymOperator, x):
    """``W x`` over the band. Returns a ``Signal`` when given one."""
    _check_len(op, x)
    return _wrap(x, op.wx(as_array(x)))


def apply_laplacian(op: BandedSymOperator, x):
    """``(D - W) x``."""
    _check_len(op, x)
    return _wrap(x, op.lx(as_array(x)))


def apply_inverse_degree(op: BandedSymOperator, r):
    _check_len(op, r)
    if np.any(op.degrees <= 0):
        raise SingularDegreeError("all degrees must be positive")
    return _wrap(r, as_array(r) / op.degrees)


def dense_oracle(op: BandedSymOperator) -> np.ndarray:
    """Full ``n x n`` weight matrix. Test helper; refuses ``n > DENSE_LIMIT``."""
    n = op.n
    if n > DENSE_LIMIT:
        raise SizeError(f"n={n} exceeds dense limit {DENSE_LIMIT}")
    a = np.diag(op.bands[0].copy())
    for k in range(1, min(op.half_bandwidth, n - 1) + 1):
        off = np.diag(op.bands[k, : n - k], k)
        a += off + off.T
    return a


def dump_operator(op: BandedSymOperator, weights_path, degrees_path=None):
    """Write the stored triangle as ``i,j,w`` and the degrees as ``i,d``."""
    weights_path = Path(weights_path)
    with open(weights_path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["i", "j", "w"])
        for k in range(op.half_bandwidth + 1):
            for i in range(op.n - k):
                wr.writerow([i, i + k, f"{op.bands[k, i]:.17g}"])
    if degrees_path is not None:
        with open(degrees_path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["i", "d"])
            for i, d in enumerate(op.degrees):
                wr.writerow([i, f"{d:.17g}"])
