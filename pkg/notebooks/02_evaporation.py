# %% [markdown]
# # Exact evaporation substep
#
# The sink `du/dt = -E_s u**q` integrates in closed form. For `q < 1` the
# solution reaches zero in finite time and stays there.

# %%
import numpy as np

from dfvm import evap_exact
from dfvm.verify import rk4_evap_oracle

u0, E_s = 0.49, 1.0
t = np.linspace(0.0, 2.0, 9)

# %%
for q in (0.5, 1.0, 2.0):
    exact = np.array([evap_exact(u0, s, q, E_s) for s in t])
    print(f"q={q}:", np.array2string(exact, precision=4))

# %% [markdown]
# Extinction time for `q = 1/2` is `u0**0.5 / (0.5 E_s)`.

# %%
t_star = u0**0.5 / (0.5 * E_s)
print(t_star, evap_exact(u0, t_star, 0.5, E_s), evap_exact(u0, 0.99 * t_star, 0.5, E_s))

# %%
print("max |exact - rk4| =", abs(evap_exact(u0, 1.0, 2.0, E_s) - rk4_evap_oracle(u0, 2.0, E_s, 1.0, step=1e-4)))
