"""One full speculative generation run, narrated step by step.

The draft model proposes a few tokens per step; the target verifies each one
along the shared noise; the first rejection is patched by a residual-
distribution sample, and full acceptance earns a bonus token from the target.
"""

from cspdec import SequenceState, speculative_step
from cspdec.rng import PositionStreams
from cspdec.scenarios import standard_pair

target, draft, config = standard_pair()
streams = PositionStreams(master_seed=2024)
state = SequenceState(capacity=config.length)

step = 0
while state.remaining:
    step += 1
    before = len(state)
    state, outcome = speculative_step(
        target, draft, state, config.gamma, config.temperature, streams
    )
    print(f"step {step}: proposed {len(outcome.log_ratios)} drafts")
    for i, (lr, u) in enumerate(zip(outcome.log_ratios, outcome.uniforms)):
        verdict = (
            "accepted" if i < outcome.accepted_count
            else "REJECTED" if i == outcome.accepted_count
            else "discarded"
        )
        print(f"   draft {i}: ratio={min(1.0, 2.718281828 ** lr):.3f} u={u:.3f} -> {verdict}")
    if outcome.resampled_token is not None:
        print(
            f"   resampled replacement {outcome.resampled_token[0]:+.4f} "
            f"after {outcome.resample_trials} trial(s)"
        )
    appended = state.origins[before:]
    print(f"   appended: {appended}\n")

print("final origins:", state.origins)
print("final tokens: ", [f"{t[0]:+.4f}" for t in state.tokens])
