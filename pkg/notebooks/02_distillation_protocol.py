# %% [markdown]
# # The two-copy distillation protocol
#
# Both parties feed their input to box 1, feed `input * output1` to box 2,
# and output the XOR of the two outputs.

# %%
import numpy as np

from nsdistill import chsh, compose, make_antipr, make_correlated, make_pc, make_pr, mix, paper_protocol
from nsdistill.analysis import fig3_data, verify_protocol_identity
from nsdistill.dynamics import map_t

w = paper_protocol()
print(w.alice)

# %% [markdown]
# Component rules, box by box.

# %%
pr, pc, anti = make_pr(), make_pc(), make_antipr()
print(compose(pr, pr, w).allclose(pr))
print(compose(pc, pr, w).allclose(mix([pr, pc], [0.5, 0.5])))
print(compose(anti, anti, w).allclose(mix([pr, pc], [0.5, 0.5])))

# %% [markdown]
# On the correlated family the protocol acts as `eps -> eps (3 - eps) / 2`.

# %%
rep = verify_protocol_identity(101)
print("max deviation", rep.max_deviation)
for eps in (0.1, 0.5, 0.9):
    b = make_correlated(eps)
    print(eps, chsh(compose(b, b, w)), 2 * (map_t(eps) + 1))

# %% [markdown]
# Data behind the CHSH_f versus CHSH_i plot and its staircase.

# %%
data = fig3_data(11, start_chsh=2.2)
print(data.curve)
print(data.staircase[:8])
