# %% [markdown]
# # Which boxes collapse communication complexity
#
# Classify the plane `xi PR + gamma Pc + (1 - xi - gamma) anti-PR`.

# %%
from collections import Counter

import numpy as np

from nsdistill.region import fig4_data, region_width_probe

data = fig4_data(201, 200, 101)
print(Counter(data.grid.cls.ravel()))

# %%
for level in (2.1, 2.5, 3.0, 3.5):
    print(level, region_width_probe(level))

# %% [markdown]
# Plot with matplotlib if available.

# %%
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    codes = {"invalid": np.nan, "local": 0, "non_collapsing": 1,
             "collapses_by_distillation": 2, "collapses_directly": 3}
    img = np.vectorize(codes.get)(data.grid.cls).astype(float)
    fig, ax = plt.subplots()
    ax.pcolormesh(data.grid.xi, data.grid.gamma, img, shading="auto")
    q = np.array(data.quantum)
    o = np.array(data.one_step)
    ax.plot(q[:, 0], q[:, 1], "k.", ms=1)
    ax.plot(o[:, 0], o[:, 1], "r.", ms=1)
    ax.set_xlabel("xi")
    ax.set_ylabel("gamma")
    fig.savefig("collapse_region.png", dpi=120)
