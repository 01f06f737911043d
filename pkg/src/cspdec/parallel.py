"""Replicate execution across worker processes.

Replicates are embarrassingly parallel: each one is fully determined by its
own derived seed, so results are identical whatever the worker count.  Any
engine fault injection active in the parent is forwarded to the workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import engine
from .autoregressive import Model, target_only_generate
from .engine import RunStats, SpecDecodeConfig, generate
from .rng import PositionStreams


def default_jobs() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


def _init_worker(fault: str | None) -> None:
    engine.set_fault(fault)


def _map_chunks(fn, payloads: list, jobs: int):
    if jobs == 1 or len(payloads) < 2:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(engine.get_fault(),)
    ) as pool:
        return list(pool.map(fn, payloads))


def _split(seeds: list[int], jobs: int) -> list[list[int]]:
    chunk = max(1, (len(seeds) + 4 * jobs - 1) // (4 * jobs))
    return [seeds[i : i + chunk] for i in range(0, len(seeds), chunk)]


def _run_chunk(args) -> list[RunStats]:
    target, draft, config, seeds = args
    out = []
    for seed in seeds:
        _, stats = generate(target, draft, config.with_seed(seed))
        out.append(stats)
    return out


def _token_chunk(args) -> np.ndarray:
    target, draft, config, seeds = args
    out = np.empty((len(seeds), config.length, config.dim))
    for r, seed in enumerate(seeds):
        state, _ = generate(target, draft, config.with_seed(seed))
        out[r] = state.tokens_array()
    return out


def _baseline_chunk(args) -> np.ndarray:
    target, _, config, seeds = args
    out = np.empty((len(seeds), config.length, config.dim))
    for r, seed in enumerate(seeds):
        state = target_only_generate(
            target, config.length, PositionStreams(seed), config.temperature
        )
        out[r] = state.tokens_array()
    return out


def run_replicates(
    target: Model,
    draft: Model,
    config: SpecDecodeConfig,
    seeds: list[int],
    jobs: int | None = None,
) -> list[RunStats]:
    """Run one generation per seed, in seed order, optionally in parallel."""
    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or len(seeds) < 2 * jobs:
        return _run_chunk((target, draft, config, seeds))
    parts = _map_chunks(
        _run_chunk, [(target, draft, config, b) for b in _split(seeds, jobs)], jobs
    )
    return [stats for part in parts for stats in part]


def speculative_token_matrix(
    target: Model,
    draft: Model,
    config: SpecDecodeConfig,
    seeds: list[int],
    jobs: int | None = None,
) -> np.ndarray:
    """Token outputs only, stacked ``(runs, length, dim)``; cheap to ship back."""
    jobs = default_jobs() if jobs is None else max(1, jobs)
    parts = _map_chunks(
        _token_chunk, [(target, draft, config, b) for b in _split(seeds, jobs)], jobs
    )
    return np.concatenate(parts, axis=0)


def baseline_token_matrix(
    target: Model,
    config: SpecDecodeConfig,
    seeds: list[int],
    jobs: int | None = None,
) -> np.ndarray:
    """Target-only token outputs, stacked ``(runs, length, dim)``."""
    jobs = default_jobs() if jobs is None else max(1, jobs)
    parts = _map_chunks(
        _baseline_chunk, [(target, None, config, b) for b in _split(seeds, jobs)], jobs
    )
    return np.concatenate(parts, axis=0)
