"""Monte Carlo tables for the pivotal limiting null distributions.

The multivariate statistics converge to functionals of independent
Brownian bridges: the integrated squared norm for the summed one-change
statistic, the integrated squared increments over index pairs for the
episode version, and the corresponding maxima.  Bridges are simulated on
a uniform grid from normal increments; draws are generated in chunks of
fixed size so the result is a pure function of ``(seed, draws)`` however
many threads evaluate the chunks.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

__all__ = [
    "FUNCTIONALS",
    "LimitLawSample",
    "cache_path",
    "cached_quantile",
    "simulate_limit",
]

_CHUNK = 2048
_CODES = {"sum-amoc": 0, "sum-epidemic": 1, "max-amoc": 2, "max-epidemic": 3}
FUNCTIONALS = tuple(_CODES)


@dataclass(frozen=True)
class LimitLawSample:
    """Draws from one limiting null distribution."""

    draws: np.ndarray
    dim: int
    functional: str
    grid_resolution: int
    seed: int

    def quantile(self, alpha: float = 0.05) -> float:
        """Upper-tail critical value: the empirical ``1 - alpha`` quantile."""
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        return float(np.quantile(self.draws, 1.0 - alpha))


def _chunk_draws(child: np.random.SeedSequence, size: int, dim: int, resolution: int, code: int):
    z = np.random.default_rng(child).standard_normal((size, dim, resolution))
    return kernels.bridge_chunk(z, code)


def simulate_limit(
    dim: int,
    functional: str = "sum-amoc",
    draws: int = 100_000,
    grid_resolution: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> LimitLawSample:
    """Simulate the limiting null law of a ``dim``-component statistic.

    ``functional`` is one of ``sum-amoc``, ``sum-epidemic``, ``max-amoc``
    and ``max-epidemic``.  The episode maximum scans all grid pairs and is
    therefore quadratic in ``grid_resolution``; keep it moderate there.
    """
    if functional not in _CODES:
        raise ValueError(f"unknown limit functional {functional!r}")
    if dim < 1:
        raise ValueError("dim must be positive")
    if draws < 1:
        raise ValueError("draws must be positive")
    if grid_resolution < 100:
        raise ValueError("grid_resolution below 100 distorts the quadrature")
    code = _CODES[functional]
    n_chunks = (draws + _CHUNK - 1) // _CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(_CHUNK, draws - c * _CHUNK) for c in range(n_chunks)]
    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    _chunk_draws,
                    children,
                    sizes,
                    [dim] * n_chunks,
                    [grid_resolution] * n_chunks,
                    [code] * n_chunks,
                )
            )
    else:
        parts = [
            _chunk_draws(child, size, dim, grid_resolution, code)
            for child, size in zip(children, sizes)
        ]
    return LimitLawSample(
        draws=np.concatenate(parts),
        dim=dim,
        functional=functional,
        grid_resolution=grid_resolution,
        seed=seed,
    )


def cache_path(cache_dir: str | os.PathLike | None = None) -> Path:
    """Location of the quantile cache file."""
    if cache_dir is None:
        cache_dir = os.environ.get("FCOV_CACHE_DIR") or Path.home() / ".cache" / "fcov"
    return Path(cache_dir) / "limit_quantiles.csv"


_FIELDS = ["dim", "functional", "alpha", "quantile", "M", "resolution", "seed"]


def cached_quantile(
    dim: int,
    alpha: float,
    functional: str = "sum-amoc",
    draws: int = 100_000,
    grid_resolution: int = 1000,
    seed: int = 0,
    threads: int = 1,
    cache_dir: str | os.PathLike | None = None,
) -> float:
    """Critical value from the cache, simulating and storing it on a miss.

    The cache is a small CSV keyed by every simulation parameter, so
    changing any of them produces a fresh row rather than a stale hit.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    path = cache_path(cache_dir)
    key = (int(dim), functional, float(alpha), int(draws), int(grid_resolution), int(seed))
    if path.exists():
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                try:
                    row_key = (
                        int(row["dim"]),
                        row["functional"],
                        float(row["alpha"]),
                        int(row["M"]),
                        int(row["resolution"]),
                        int(row["seed"]),
                    )
                except (KeyError, TypeError, ValueError):
                    continue
                if row_key == key:
                    return float(row["quantile"])
    sample = simulate_limit(dim, functional, draws, grid_resolution, seed, threads)
    value = sample.quantile(alpha)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_header = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(_FIELDS)
        writer.writerow(
            [dim, functional, repr(float(alpha)), repr(value), draws, grid_resolution, seed]
        )
    return value
