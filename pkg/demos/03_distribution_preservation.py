"""Does speculative decoding leave the target distribution untouched?

Per sequence position, compares a few thousand speculative outputs against
target-only outputs with the two-sample KS statistic.  The full acceptance
suite runs this at 50 000 runs per side; a few thousand already tell the
story.  Also prints a coarse text histogram at the last position.
"""

import numpy as np

from cspdec.oracle import distribution_check
from cspdec.parallel import speculative_token_matrix, baseline_token_matrix
from cspdec.rng import replicate_seed
from cspdec.scenarios import standard_pair

RUNS = 4000

target, draft, config = standard_pair()
config = config.with_seed(31337)

result = distribution_check(target, draft, config, runs=RUNS, jobs=2)
print(f"two-sample KS per position, {RUNS} runs per side:")
for test in result.tests:
    bar = "#" * int(test.statistic / test.critical * 40)
    print(
        f"  position {test.position}: ks={test.statistic:.4f} "
        f"(reject above {test.critical:.4f})  {bar}"
    )
print(f"overall: {'consistent with the target law' if result.passed else 'MISMATCH'}")

# text histogram at the last position
spec = speculative_token_matrix(
    target, draft, config, [replicate_seed(1, 0, r) for r in range(RUNS)], jobs=2
)[:, -1, 0]
base = baseline_token_matrix(
    target, config, [replicate_seed(2, 0, r) for r in range(RUNS)], jobs=2
)[:, -1, 0]
edges = np.linspace(-2.0, 2.5, 19)
spec_hist, _ = np.histogram(spec, edges)
base_hist, _ = np.histogram(base, edges)
print(f"\nlast-position histogram ({RUNS} samples each):")
print(f"{'bin':>12}  {'speculative':<26} {'target-only':<26}")
for lo, hi, s, b in zip(edges, edges[1:], spec_hist, base_hist):
    print(f"[{lo:+.2f},{hi:+.2f})  {'*' * (s // 12):<26} {'*' * (b // 12):<26}")
