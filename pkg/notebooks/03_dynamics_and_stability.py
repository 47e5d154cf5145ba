# %% [markdown]
# # Iterating the protocol: fixed points and stability

# %%
from nsdistill import B_CC, fixed_points_1d, fixed_points_2d, iterate, map_t, map_t2

for r in fixed_points_1d() + fixed_points_2d():
    print(r.location, r.eigenvalues, r.classification)

# %% [markdown]
# Starting from eps = 0.01 (CHSH 2.02), twelve rounds (4096 copies) push the
# box past B_CC.

# %%
t = iterate(map_t, 0.01, chsh_threshold=B_CC)
for k, (e, c) in enumerate(zip(t.points, t.chsh)):
    print(k, round(e, 6), round(c, 6))

# %% [markdown]
# Off the correlated line PR repels: a small anti-PR admixture ends at the
# fully mixed box.

# %%
t = iterate(map_t2, (0.9, 0.09), tol=1e-12)
print(t.terminated_by, t.steps, t.final, max(t.chsh))
