# %% [markdown]
# # Voronoi boxes on a triangulation
#
# A long thin strip of right triangles with data that do not vary across the
# strip behaves exactly like the one dimensional chain.

# %%
import math

import numpy as np

from dfvm import ModelParams, TimeConfig, rect_tri_mesh, run, uniform_chain

strip = rect_tri_mesh(40, 4, 1.0, 0.1)
chain = uniform_chain(40)
print(strip.summary())

# %%
params = ModelParams(m=2.0, alpha=math.pi / 2)
tc = TimeConfig(1e-3, 0.1, output_every=100)
px = np.asarray(strip.points)[:, 0]
x = np.asarray(chain.node_coords)
a = run(chain, params, np.where(x < 0.5, 1.0, 0.0), tc).final.u
b = run(strip, params, np.where(px < 0.5, 1.0, 0.0), tc).final.u

# %%
col = np.rint(px * 40).astype(int)
print("max |strip - chain| =", np.abs(b - a[col]).max())
print("front position:", x[np.argmax(a < 0.5)])
