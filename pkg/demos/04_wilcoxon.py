# Paired-condition comparison with the Wilcoxon signed-rank test.
#
# Differences are ranked by magnitude (average ranks on ties, zeros
# dropped); W sums the positively-signed ranks. For small samples the
# two-sided p-value is exact -- identical to enumerating all 2^n sign
# assignments -- and above n=20 a tie-corrected normal approximation with
# continuity correction takes over.

import random

from panelguide.analytics import PairedSamples, wilcoxon_signed_rank

# Five subjects, condition A always slower: the most extreme pattern at
# n=5, which is still only p = 2/32 = 0.0625. Small samples simply cannot
# reach p < 0.05 in a two-sided test with fewer than six subjects.
samples = PairedSamples("slower", "faster", ((241.7, 160.6), (250.4, 171.2), (199.9, 150.0), (301.5, 190.4), (275.0, 201.1)))
result = wilcoxon_signed_rank(samples)
print(f"n=5, all positive: W={result.w_statistic}, p={result.p_two_sided} ({result.method})")

# Fifteen subjects (the usual within-subject study size) with a consistent
# effect crosses the threshold comfortably.
rng = random.Random(7)
pairs = tuple((200 + rng.gauss(40, 20), 160 + rng.gauss(0, 20)) for _ in range(15))
result = wilcoxon_signed_rank(PairedSamples("a", "b", pairs))
print(f"n=15 with a real effect: W={result.w_statistic}, p={result.p_two_sided:.6f} ({result.method})")

# Under the null (pure noise), p is large most of the time.
pairs = tuple((rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(15))
result = wilcoxon_signed_rank(PairedSamples("a", "b", pairs))
print(f"n=15 pure noise:         W={result.w_statistic}, p={result.p_two_sided:.6f} ({result.method})")

# Exact and approximate methods agree closely already at n=15.
mags = rng.sample(range(1, 300), 15)
pairs = tuple((m * rng.choice((1, -1)), 0) for m in mags)
exact = wilcoxon_signed_rank(PairedSamples("a", "b", pairs), method="exact")
approx = wilcoxon_signed_rank(PairedSamples("a", "b", pairs), method="normal-approximation")
print(f"exact vs approximation at n=15: {exact.p_two_sided:.6f} vs {approx.p_two_sided:.6f}")

# Ties and zeros are handled: zeros drop out, tied magnitudes share ranks.
pairs = ((3, 3), (5, 4), (4, 5), (7, 5), (9, 7), (2, 4))
result = wilcoxon_signed_rank(PairedSamples("a", "b", pairs))
print(f"ties and zeros: n_effective={result.n_effective}, W={result.w_statistic}, p={result.p_two_sided}")
