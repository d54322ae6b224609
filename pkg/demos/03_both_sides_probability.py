"""
Are verifiers on both sides of the sender?
==========================================

If each of N verifiers sits in front of or behind the sender with even odds,
both sides are covered with probability 1 - 2 * 0.5**N. Monte Carlo confirms
the closed form; at N = 15 it gives 0.99994 against a published 0.99998.
"""

from coopauth.analysis import PUBLISHED_BOTH_SIDES_N15, prob_table

print(f"{'N':>3} {'closed form':>12} {'monte carlo':>12} {'stderr':>9}")
for r in prob_table(20, trials=100_000, seed=4):
    flag = "" if r.agrees else "  <- outside 4 sigma"
    print(f"{r.n:>3} {r.closed_form:>12.6f} {r.monte_carlo:>12.6f} {r.mc_stderr:>9.1e}{flag}")

r15 = prob_table(15, trials=100_000, seed=4)[-1]
print(f"\nN=15: closed form {r15.closed_form:.5f}, published {PUBLISHED_BOTH_SIDES_N15}")

# The same table as CSV, ready for plotting:
#   coopauth analyze-prob --n-max 30 -o both_sides.csv
