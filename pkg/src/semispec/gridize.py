"""Project irregular samples onto a grid of spacing pi / omega_c and collect
lag-class cross-product sums.

Pairs are unordered and include each point paired with itself, so
``sum(n_k) == N (N + 1) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, ParameterError
from .simulate import SampleSet


@dataclass(frozen=True)
class GridSpec:
    omega_c: float
    num_cells: int

    def __post_init__(self):
        if not (self.omega_c > 0 and math.isfinite(self.omega_c)):
            raise ParameterError(f"omega_c must be positive, got {self.omega_c}")
        if self.num_cells < 2:
            raise ParameterError(f"grid needs at least 2 cells, got {self.num_cells}")

    @property
    def delta(self) -> float:
        return math.pi / self.omega_c

    @classmethod
    def covering(cls, domain_length: float, omega_c: float) -> "GridSpec":
        """Smallest grid whose cells ``round(s / delta)`` cover ``[0, domain_length]``."""
        delta = math.pi / omega_c
        return cls(omega_c, max(2, cell_index(domain_length, delta) + 1))


@dataclass(frozen=True, eq=False)
class LagSums:
    s: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        n = np.asarray(self.n, dtype=np.int64)
        if s.shape != n.shape or s.ndim != 1 or s.size < 1:
            raise DataError("lag sums and counts must be 1-D arrays of equal length")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "n", n)

    @property
    def max_lag(self) -> int:
        return self.s.size - 1

    @property
    def nonzero_lags(self) -> int:
        """Number of lag classes ``k >= 1`` holding at least one pair."""
        return int(np.count_nonzero(self.n[1:]))

    def moments(self) -> np.ndarray:
        """``S_k / n_k``, zero where the class is empty."""
        out = np.zeros_like(self.s)
        nz = self.n > 0
        out[nz] = self.s[nz] / self.n[nz]
        return out

    def to_dict(self) -> dict:
        return {"s": [float(v) for v in self.s], "n": [int(v) for v in self.n]}

    @classmethod
    def from_dict(cls, d: dict) -> "LagSums":
        return cls(np.asarray(d["s"], float), np.asarray(d["n"], np.int64))


def cell_index(s, delta):
    """Nearest grid index, ties rounded up."""
    idx = np.floor(np.asarray(s, dtype=float) / delta + 0.5).astype(np.int64)
    return int(idx) if idx.ndim == 0 else idx


def default_cutoff(sample: SampleSet) -> float:
    """``pi`` times the average sampling rate."""
    if not sample.domain_length > 0:
        raise ParameterError("domain_length must be positive")
    return math.pi * sample.n / sample.domain_length


def accumulate_lag_sums(sample: SampleSet, grid: GridSpec, max_lag: int | None = None) -> LagSums:
    """Gridize ``sample`` and return ``(S_k, n_k)`` for ``k = 0..K``.

    ``K`` is ``num_cells - 1`` unless capped by ``max_lag``.
    """
    return lag_sums_from_arrays(sample.locations, sample.values, grid, max_lag)


def lag_sums_from_arrays(locations, values, grid: GridSpec, max_lag: int | None = None) -> LagSums:
    """Array form of :func:`accumulate_lag_sums`; accepts any number of points."""
    values = np.asarray(values, dtype=float)
    cells = np.atleast_1d(cell_index(locations, grid.delta))
    if cells.size == 0:
        raise DataError("no observations to gridize")
    if cells.min() < 0 or cells.max() >= grid.num_cells:
        raise DataError("grid does not cover the sample locations")
    k = grid.num_cells - 1 if max_lag is None else min(int(max_lag), grid.num_cells - 1)
    s, n = _kernels.cell_lag_sums(cells, np.atleast_1d(values), grid.num_cells, k)
    return LagSums(s, n)
