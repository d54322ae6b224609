"""
How many vehicles check each message?
=====================================

With complete mutual knowledge of k neighbors, the p-nearest strategy elects
exactly p checkers, while the literal "beta <= alpha_p" rule elects k - p + 1.
Below p mutual neighbors everybody checks.
"""

from coopauth.analysis import exact_verifier_count, verifier_count_distribution
from coopauth.obu import ElectionStrategy

p = 5
print(f"p = {p}\n{'k':>3} {'p-nearest':>10} {'literal':>8}")
for k in range(1, 16):
    print(f"{k:>3} {exact_verifier_count(k, p, ElectionStrategy.P_NEAREST):>10}"
          f" {exact_verifier_count(k, p, ElectionStrategy.PAPER_RULE):>8}")

# Random 64-bit pseudonyms never change the count: the distribution is a point mass.
res = verifier_count_distribution(15, p, ElectionStrategy.PAPER_RULE, trials=2000, seed=1)
print("\nliteral rule, k=15, 2000 random id draws:", res.histogram)
