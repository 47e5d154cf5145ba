# %% [markdown]
# # Boxes, correlators and CHSH
#
# A box is a table `p[x, y, a, b]`. The named extremal boxes and the
# correlated family `eps * PR + (1 - eps) * Pc` are built directly.

# %%
import numpy as np

from nsdistill import (
    chsh, chsh_all8, correlators, depolarize, is_local, make_antipr, make_correlated,
    make_one, make_pa, make_pc, make_plane, make_pr, mix, to_plane_coords,
)

for name, box in [("PR", make_pr()), ("Pc", make_pc()), ("anti-PR", make_antipr()),
                  ("Pa", make_pa()), ("mixed", make_one())]:
    print(f"{name:8s} CHSH={chsh(box):+.1f}  local={is_local(box)}")

# %%
print(correlators(make_pr()))
print(max(chsh_all8(make_antipr())))  # anti-PR is PR up to relabeling

# %% [markdown]
# The correlated family has CHSH `2 (eps + 1)`: non-local for every eps > 0.

# %%
for eps in (0.0, 0.01, 0.25, 0.5, 1.0):
    box = make_correlated(eps)
    print(eps, chsh(box), is_local(box))

# %% [markdown]
# Pa is reachable only through an affine (non-convex) combination.

# %%
print(mix([make_pr(), make_antipr(), make_pc()], [1, 1, -1]).allclose(make_pa()))

# %% [markdown]
# Depolarization maps any box onto the PR / anti-PR line and keeps CHSH.

# %%
b = make_plane((0.4, 0.3))
d = depolarize(b)
print(chsh(b), chsh(d), to_plane_coords(d))
np.set_printoptions(precision=4)
print(d.p.reshape(4, 4))
