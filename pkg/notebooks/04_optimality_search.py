# %% [markdown]
# # Exhaustive search over deterministic two-copy wirings
#
# 32768 strategies per party, every pair evaluated (about 10^9 pairs, a few
# seconds on one core).

# %%
from nsdistill import make_correlated
from nsdistill.search import best_response_search, optimal_two_copy_search
from nsdistill.wiring import decode

for eps in (0.1, 0.3, 0.5, 0.8):
    res = optimal_two_copy_search(make_correlated(eps))
    proto = 3 * eps - eps**2 + 2
    print(f"eps={eps}: best={res.best_chsh:.4f}  protocol={proto:.4f}  "
          f"maximizers={res.n_best}  (10342, 10342) optimal: {(10342, 10342) in res.best_pairs}")

# %% [markdown]
# Below eps = 1/3 an XOR wiring does better: correlators multiply, so
# `E11 -> (1 - 2 eps)^2` and CHSH becomes `2 + 4 eps - 4 eps^2`.

# %%
res = optimal_two_copy_search(make_correlated(0.1))
a, b = res.best_pairs[0]
print(decode(a), decode(b))
print(optimal_two_copy_search(make_correlated(0.1), restrict="xor").best_chsh)
print(best_response_search(make_correlated(0.1)))
