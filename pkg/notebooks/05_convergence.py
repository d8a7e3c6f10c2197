# %% [markdown]
# # Convergence on a manufactured solution
#
# For `m = 1` the equation is linear advection-diffusion and a travelling,
# decaying sine wave is an exact solution. Dirichlet data follow it in time.

# %%
import math

import numpy as np
from scipy.linalg import expm

from dfvm import ModelParams, TimeConfig, assemble, run, theta_update, uniform_chain

alpha, k, T = math.pi / 4, math.pi, 0.1
c = math.sin(alpha)
params = ModelParams(m=1.0, alpha=alpha)


def exact(x, t):
    return 1.5 + math.exp(-k * k * t) * np.sin(k * (x + c * t))


# %%
errors = []
for n in (10, 20, 40):
    mesh = uniform_chain(n)
    x = np.asarray(mesh.node_coords)
    steps = round(T / (0.1 / n**2))
    bc = {0: lambda t: float(exact(0.0, t)), n: lambda t: float(exact(1.0, t))}
    res = run(mesh, params, exact(x, 0.0), TimeConfig(T / steps, T, output_every=steps), "is", bc)
    errors.append(float(np.abs(res.final.u - exact(x, T)).max()))
print("errors:", errors)
print("orders:", np.log2(np.array(errors[:-1]) / errors[1:]))

# %% [markdown]
# ## Time discretization
#
# Against the matrix exponential of the semidiscrete system, backward Euler
# is first order. With `theta = 0.51` the error is second order only while
# `(theta - 1/2) dt` is small next to `dt**2`.

# %%
mesh = uniform_chain(19)
u0 = 1.0 + np.cos(math.pi * np.asarray(mesh.node_coords))
Xi = assemble(mesh, u0, params).Xi
reference = expm(T * Xi.toarray()) @ u0
for theta in (1.0, 0.51):
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        u = u0.copy()
        for _ in range(round(T / dt)):
            u, _ = theta_update(assemble(mesh, u, params), u, dt, theta)
        errs.append(np.abs(u - reference).max())
    print(f"theta={theta}: slopes", np.log2(np.array(errs[:-1]) / errs[1:]).round(3))
