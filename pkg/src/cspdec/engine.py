"""The continuous speculative decoding engine.

One speculative step drafts gamma tokens from the cheap model, verifies them
against the expensive model along noise-aligned chains, keeps the accepted
prefix, and patches the first rejection by acceptance-rejection sampling from
the residual distribution.  Because both chains traverse the same noise, the
acceptance ratio collapses to the tail variance-product term plus the two
final-step log-densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .autoregressive import (
    DRAFT_ACCEPTED,
    RESAMPLED,
    TARGET_FALLTHROUGH,
    Model,
    SequenceState,
    condition,
    prefill,
)
from .diffusion import (
    DenoiserSpec,
    DenoisingTrajectory,
    NoiseRecord,
    draw_noise_record,
    last_step_logpdf,
    run_chain,
    tail_log_density_ratio,
)
from .gaussian import gaussian_logpdf
from .rng import PositionStreams


class ResampleExhaustedError(RuntimeError):
    """Acceptance-rejection sampling hit its trial cap.

    Happens when draft and target densities are near-identical, so the
    residual normalizer (the per-trial success probability) approaches zero.
    ``mean_threshold`` is the empirical per-trial acceptance estimate observed
    before giving up.
    """

    def __init__(self, trials: int, mean_threshold: float, position: int | None = None):
        self.trials = trials
        self.mean_threshold = mean_threshold
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(
            f"rejection resampling exhausted {trials} trials{where}; "
            f"empirical per-trial acceptance ~ {mean_threshold:.3e} "
            "(draft and target densities are nearly identical)"
        )


# Fault injection for the verification suite only.  ``set_fault`` deliberately
# breaks a named piece of the algorithm so statistical tests can demonstrate
# they would catch the corresponding bug.  Never set outside tests.
_FAULT: str | None = None
FAULTS = ("drop-variance-ratio",)


def set_fault(name: str | None) -> None:
    global _FAULT
    if name is not None and name not in FAULTS:
        raise ValueError(f"unknown fault {name!r}")
    _FAULT = name


def get_fault() -> str | None:
    return _FAULT


def _tail_ratio_term(traj_q: DenoisingTrajectory, traj_p: DenoisingTrajectory) -> float:
    if _FAULT == "drop-variance-ratio":
        return 0.0
    return tail_log_density_ratio(traj_q, traj_p)


@dataclass(frozen=True)
class SpecDecodeConfig:
    """Run parameters for speculative generation."""

    gamma: int
    steps: int
    dim: int
    length: int
    rho: float = 0.0
    temperature: float = 1.0
    max_resample_trials: int = 10_000
    seed: int = 0
    aligned: bool = True

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if not self.temperature > 0.0:
            raise ValueError("temperature must be positive")
        if self.max_resample_trials < 1:
            raise ValueError("max_resample_trials must be >= 1")

    def check_models(self, target: Model, draft: Model) -> None:
        for name, model in (("target", target), ("draft", draft)):
            if model.steps != self.steps:
                raise ValueError(f"{name} model has {model.steps} steps, config says {self.steps}")
            if model.dim != self.dim:
                raise ValueError(f"{name} model has dim {model.dim}, config says {self.dim}")

    def with_seed(self, seed: int) -> "SpecDecodeConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class DraftProposal:
    """One drafted token with everything needed to verify it."""

    position: int
    token: np.ndarray
    cond_q: np.ndarray
    record: NoiseRecord
    traj_q: DenoisingTrajectory
    log_q_last: float


@dataclass(frozen=True)
class DraftBundle:
    proposals: tuple[DraftProposal, ...]

    def __len__(self) -> int:
        return len(self.proposals)

    def replay_consistent(self, draft: DenoiserSpec, temperature: float) -> bool:
        """Re-run each proposal's chain from its record and compare outputs."""
        for prop in self.proposals:
            redo = run_chain(draft, prop.cond_q, prop.record, temperature)
            if not np.array_equal(redo.token, prop.token):
                return False
        return True


@dataclass(frozen=True)
class VerificationOutcome:
    """Result of verifying one draft bundle."""

    accepted_count: int
    log_ratios: tuple[float, ...]
    uniforms: tuple[float, ...]
    resampled_token: np.ndarray | None
    resample_trials: int | None

    def __post_init__(self):
        full = self.accepted_count == len(self.log_ratios)
        if full != (self.resampled_token is None):
            raise ValueError("resampled token must be present exactly when a draft was rejected")
        if self.resample_trials is not None and self.resample_trials < 1:
            raise ValueError("trial count must be >= 1 when present")


@dataclass
class RunStats:
    """Everything observable about one generation run.

    Per-proposal rows are append-ordered; ``examined`` marks proposals up to
    and including the first rejection of their step, and ``accepted`` marks
    the ones that became tokens.  Merging replicates is plain concatenation.
    """

    seed: int = 0
    config: dict = field(default_factory=dict)
    proposal_positions: list[int] = field(default_factory=list)
    proposal_log_ratios: list[float] = field(default_factory=list)
    proposal_uniforms: list[float] = field(default_factory=list)
    proposal_examined: list[bool] = field(default_factory=list)
    proposal_accepted: list[bool] = field(default_factory=list)
    step_proposed: list[int] = field(default_factory=list)
    step_accepted: list[int] = field(default_factory=list)
    resample_positions: list[int] = field(default_factory=list)
    resample_trials: list[int] = field(default_factory=list)
    origins: list[str] = field(default_factory=list)
    tokens: list[list[float]] = field(default_factory=list)
    draft_chain_calls: int = 0
    target_chain_calls: int = 0

    @property
    def wall_steps(self) -> int:
        return len(self.step_accepted)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "proposal_positions": list(self.proposal_positions),
            "proposal_log_ratios": list(self.proposal_log_ratios),
            "proposal_uniforms": list(self.proposal_uniforms),
            "proposal_examined": list(self.proposal_examined),
            "proposal_accepted": list(self.proposal_accepted),
            "step_proposed": list(self.step_proposed),
            "step_accepted": list(self.step_accepted),
            "resample_positions": list(self.resample_positions),
            "resample_trials": list(self.resample_trials),
            "origins": list(self.origins),
            "tokens": [list(t) for t in self.tokens],
            "draft_chain_calls": self.draft_chain_calls,
            "target_chain_calls": self.target_chain_calls,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunStats":
        return cls(**{k: data[k] for k in cls().to_dict().keys()})


def acceptance_log_ratio(
    traj_q: DenoisingTrajectory,
    target: DenoiserSpec,
    cond_p,
    noise: NoiseRecord,
    x_out,
    temperature: float = 1.0,
) -> tuple[float, DenoisingTrajectory]:
    """Log acceptance ratio for one drafted token.

    Runs the target chain on the supplied noise record (the draft's record,
    under alignment), then combines the telescoped tail term with the two
    final-step log-densities: the target's evaluated at the drafted token by
    substitution, the draft's at the same token under its own final step.
    Also returns the target trajectory.
    """
    traj_p = run_chain(target, cond_p, noise, temperature)
    log_tail = _tail_ratio_term(traj_q, traj_p)
    log_p = last_step_logpdf(target, cond_p, traj_p.last_input, x_out, temperature)
    log_q = gaussian_logpdf(x_out, traj_q.last_step_params)
    return log_tail + log_p - log_q, traj_p


def verify_drafts(log_ratios, uniforms) -> int:
    """Accepted count: index before the first i with ``u_i > exp(log_ratio_i)``.

    Ratios at or above one accept regardless of the uniform; the exponential
    is only evaluated when a comparison is actually needed.
    """
    if len(log_ratios) != len(uniforms):
        raise ValueError("log_ratios and uniforms must have equal length")
    for i, (lr, u) in enumerate(zip(log_ratios, uniforms)):
        if lr >= 0.0:
            continue
        if u > math.exp(lr):
            return i
    return len(log_ratios)


def resample_threshold(log_q: float, log_tail: float, log_p: float) -> float:
    """Acceptance-rejection threshold ``max(0, 1 - q / (S * p))`` in log space.

    ``S`` is the tail variance-product factor; with the residual normalizer
    folded into the envelope bound, the threshold needs only the two
    final-step densities and the tail term.
    """
    delta = log_q - log_tail - log_p
    if delta >= 0.0:
        return 0.0
    return -math.expm1(delta)


def rejection_resample(
    target: DenoiserSpec,
    cond_p,
    draft: DenoiserSpec,
    cond_q,
    temperature: float,
    rng: np.random.Generator,
    max_trials: int = 10_000,
    position: int | None = None,
) -> tuple[np.ndarray, int, int]:
    """Sample from the residual distribution by acceptance-rejection.

    Each trial draws an entirely fresh noise record, takes the candidate from
    the target chain, re-runs the draft chain on the same record (alignment,
    which supplies the tail term and the draft's final-step state), computes
    the threshold, and accepts with that probability.

    Returns the accepted token and the number of trials it took.
    """
    threshold_sum = 0.0
    for trial in range(1, max_trials + 1):
        record = draw_noise_record(target.steps, target.dim, rng)
        traj_p = run_chain(target, cond_p, record, temperature, position=position)
        candidate = traj_p.token
        traj_q = run_chain(draft, cond_q, record, temperature, position=position)
        log_tail = _tail_ratio_term(traj_q, traj_p)
        log_p = gaussian_logpdf(candidate, traj_p.last_step_params)
        log_q = last_step_logpdf(draft, cond_q, traj_q.last_input, candidate, temperature)
        alpha = resample_threshold(log_q, log_tail, log_p)
        threshold_sum += alpha
        if rng.random() <= alpha:
            return candidate, trial
    raise ResampleExhaustedError(
        trials=max_trials,
        mean_threshold=threshold_sum / max_trials,
        position=position,
    )


def speculative_step(
    target: Model,
    draft: Model,
    state: SequenceState,
    gamma: int,
    temperature: float,
    streams: PositionStreams,
    max_resample_trials: int = 10_000,
    aligned: bool = True,
    stats: RunStats | None = None,
) -> tuple[SequenceState, VerificationOutcome]:
    """One draft/verify/resample round, appending tokens to ``state``.

    Drafts ``min(gamma, room)`` tokens autoregressively from the draft model,
    verifies each along the shared noise record (or an independent one when
    ``aligned`` is off), appends the accepted prefix, then either patches the
    first rejection with a residual-distribution sample or, on full
    acceptance, appends one bonus token from the target at the next position.
    """
    if state.remaining < 1:
        raise ValueError("sequence is already at capacity")
    base = len(state)
    n_draft = min(gamma, state.remaining)

    # Draft phase: propose autoregressively, conditioning on earlier drafts.
    context = list(state.tokens)
    proposals = []
    for i in range(n_draft):
        pos = base + i
        cond_q = condition(draft.backbone, context, pos)
        record = draw_noise_record(draft.steps, draft.dim, streams.stream(pos))
        traj_q = run_chain(draft.denoiser, cond_q, record, temperature, position=pos)
        proposals.append(
            DraftProposal(
                position=pos,
                token=traj_q.token,
                cond_q=cond_q,
                record=record,
                traj_q=traj_q,
                log_q_last=gaussian_logpdf(traj_q.token, traj_q.last_step_params),
            )
        )
        context.append(traj_q.token)
    bundle = DraftBundle(tuple(proposals))

    # Verification phase: target conditions on the same prefix-plus-drafts.
    log_ratios: list[float] = []
    uniforms: list[float] = []
    cond_ps: list[np.ndarray] = []
    for prop in bundle.proposals:
        cond_p = condition(target.backbone, context, prop.position)
        noise = (
            prop.record
            if aligned
            else draw_noise_record(target.steps, target.dim, streams.stream(prop.position))
        )
        lr, _ = acceptance_log_ratio(
            prop.traj_q, target.denoiser, cond_p, noise, prop.token, temperature
        )
        log_ratios.append(lr)
        uniforms.append(float(streams.stream(prop.position).random()))
        cond_ps.append(cond_p)

    n = verify_drafts(log_ratios, uniforms)
    for prop in bundle.proposals[:n]:
        state.append(prop.token, DRAFT_ACCEPTED)

    resampled_token = None
    trials = None
    draft_calls = n_draft
    target_calls = n_draft  # one verification chain per proposal
    if n < n_draft:
        pos = base + n
        resampled_token, trials = rejection_resample(
            target.denoiser,
            cond_ps[n],
            draft.denoiser,
            bundle.proposals[n].cond_q,
            temperature,
            streams.stream(pos),
            max_trials=max_resample_trials,
            position=pos,
        )
        state.append(resampled_token, RESAMPLED)
        # Each trial runs one target and one draft chain.
        target_calls += trials
        draft_calls += trials
    elif state.remaining > 0:
        # Bonus token: the target's own sample at the next position.
        pos = base + n_draft
        cond_p = condition(target.backbone, context, pos)
        record = draw_noise_record(target.steps, target.dim, streams.stream(pos))
        traj = run_chain(target.denoiser, cond_p, record, temperature, position=pos)
        state.append(traj.token, TARGET_FALLTHROUGH)
        target_calls += 1

    outcome = VerificationOutcome(
        accepted_count=n,
        log_ratios=tuple(log_ratios),
        uniforms=tuple(uniforms),
        resampled_token=resampled_token,
        resample_trials=trials,
    )

    if stats is not None:
        for i, prop in enumerate(bundle.proposals):
            stats.proposal_positions.append(prop.position)
            stats.proposal_log_ratios.append(log_ratios[i])
            stats.proposal_uniforms.append(uniforms[i])
            stats.proposal_examined.append(i <= n)
            stats.proposal_accepted.append(i < n)
        stats.step_proposed.append(n_draft)
        stats.step_accepted.append(n)
        if trials is not None:
            stats.resample_positions.append(base + n)
            stats.resample_trials.append(trials)
        stats.draft_chain_calls += draft_calls
        stats.target_chain_calls += target_calls
    return state, outcome


def generate(
    target: Model,
    draft: Model,
    config: SpecDecodeConfig,
) -> tuple[SequenceState, RunStats]:
    """Full speculative generation: pre-fill, then speculative steps to length."""
    config.check_models(target, draft)
    streams = PositionStreams(config.seed)
    stats = RunStats(seed=config.seed, config=config_echo(config))

    state = prefill(target, config.length, config.rho, streams, config.temperature)
    stats.target_chain_calls += len(state)
    while len(state) < config.length:
        speculative_step(
            target,
            draft,
            state,
            config.gamma,
            config.temperature,
            streams,
            max_resample_trials=config.max_resample_trials,
            aligned=config.aligned,
            stats=stats,
        )
    stats.origins = list(state.origins)
    stats.tokens = [[float(v) for v in tok] for tok in state.tokens]
    return state, stats


def config_echo(config: SpecDecodeConfig) -> dict:
    return {
        "gamma": config.gamma,
        "steps": config.steps,
        "dim": config.dim,
        "length": config.length,
        "rho": config.rho,
        "temperature": config.temperature,
        "max_resample_trials": config.max_resample_trials,
        "seed": config.seed,
        "aligned": config.aligned,
    }


def config_from_echo(echo: dict) -> SpecDecodeConfig:
    return SpecDecodeConfig(**echo)
