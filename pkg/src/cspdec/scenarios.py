"""Pinned toy scenarios.

The two shipped model pairs are fixed here (and mirrored as JSON configs in
``cspdec/data``) so that every statistical result in the test suite and the
benchmarks refers to one versioned set of numbers.

Both pinned pairs share their variance schedule on all steps except the last.
With equal tail schedules the telescoped variance-product term is exactly
zero and the coupled acceptance ratio is an exact density ratio, which is the
regime in which speculative decoding provably preserves the target law; the
final-step variances and all mean parameters still differ freely.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .autoregressive import ARBackboneSpec, Model
from .diffusion import DenoiserSpec
from .engine import SpecDecodeConfig

STANDARD_PAIR = "standard_pair"
PREFIX_DIVERGENT_PAIR = "prefix_divergent_pair"
SCENARIOS = (STANDARD_PAIR, PREFIX_DIVERGENT_PAIR)


def scenario_path(name: str) -> Path:
    """Filesystem path of a shipped scenario config (usable as --config)."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; available: {SCENARIOS}")
    return Path(str(resources.files("cspdec").joinpath(f"data/{name}.json")))


def standard_pair() -> tuple[Model, Model, SpecDecodeConfig]:
    """General mismatched pair: the default subject of the statistical suite.

    Draft and target disagree in every mean parameter and in the final-step
    variance; state coupling is strong enough that trajectory alignment
    visibly matters.  Returns (target, draft, default config).
    """
    target = Model(
        denoiser=DenoiserSpec(
            state_coef=[[0.9], [0.55], [0.35]],
            cond_coef=[[0.5], [0.35], [0.6]],
            offset=[[0.0], [0.1], [0.05]],
            variance=[[0.7], [0.4], [0.2]],
        ),
        backbone=ARBackboneSpec(prefix=[0.25], weight=[0.55], bias=[0.1]),
    )
    draft = Model(
        denoiser=DenoiserSpec(
            state_coef=[[0.75], [0.6], [0.45]],
            cond_coef=[[0.4], [0.3], [0.5]],
            offset=[[0.1], [0.0], [0.18]],
            variance=[[0.7], [0.4], [0.3]],
        ),
        backbone=ARBackboneSpec(prefix=[-0.15], weight=[0.45], bias=[0.18]),
    )
    config = SpecDecodeConfig(gamma=3, steps=3, dim=1, length=6, seed=0)
    return target, draft, config


def prefix_divergent_pair() -> tuple[Model, Model, SpecDecodeConfig]:
    """Pair whose backbones differ only in the prefix embedding.

    The denoisers carry a small final-step offset mismatch, so acceptance
    away from position 0 is high but not degenerate, while the opposed
    prefix embeddings make position-0 drafts mostly rejectable.  This is the
    scenario where token pre-filling pays.
    """
    denoiser_kwargs = dict(
        state_coef=[[0.8], [0.5], [0.3]],
        cond_coef=[[0.4], [0.3], [0.55]],
        variance=[[0.6], [0.4], [0.25]],
    )
    target = Model(
        denoiser=DenoiserSpec(offset=[[0.0], [0.05], [0.0]], **denoiser_kwargs),
        backbone=ARBackboneSpec(prefix=[0.9], weight=[0.5], bias=[0.0]),
    )
    draft = Model(
        denoiser=DenoiserSpec(offset=[[0.0], [0.05], [0.12]], **denoiser_kwargs),
        backbone=ARBackboneSpec(prefix=[-0.9], weight=[0.5], bias=[0.0]),
    )
    config = SpecDecodeConfig(gamma=4, steps=3, dim=1, length=20, seed=0)
    return target, draft, config


def decoupled_pair(
    target_mean: float,
    target_var: float,
    draft_mean: float,
    draft_var: float,
    steps: int = 2,
    tail_variance: float = 0.5,
) -> tuple[Model, Model]:
    """Pair whose output marginals are exactly the given 1-D Gaussians.

    The final step ignores the chain state and the condition, so each model's
    token is an exact draw from its stated Gaussian and the grid oracles for
    the residual distribution, its normalizer, and the overlap apply without
    approximation.  All tail steps are shared.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")

    def build(mean: float, var: float) -> Model:
        tail = steps - 1
        return Model(
            denoiser=DenoiserSpec(
                state_coef=[[0.5]] * tail + [[0.0]],
                cond_coef=[[0.0]] * steps,
                offset=[[0.0]] * tail + [[mean]],
                variance=[[tail_variance]] * tail + [[var]],
            ),
            backbone=ARBackboneSpec(prefix=[0.0], weight=[0.0], bias=[0.0]),
        )

    return build(target_mean, target_var), build(draft_mean, draft_var)


def stationary_pair() -> tuple[Model, Model, SpecDecodeConfig]:
    """Position-independent pair with i.i.d. per-draft acceptance.

    Every position sees the same decoupled final-step densities, so the
    per-draft acceptance probability is one constant and the walltime formula
    applies exactly.
    """
    target, draft = decoupled_pair(0.0, 1.0, 0.6, 1.0)
    config = SpecDecodeConfig(gamma=4, steps=2, dim=1, length=48, seed=0)
    return target, draft, config
