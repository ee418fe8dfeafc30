"""
Projection approximation vs multi-slice
=======================================

For a thin, weakly refracting object the projection approximation
(line-integral phase and attenuation, then one free-space hop) agrees
with the multi-slice calculation. As the object thickens at fixed
feature size -- the Fresnel number N_F = a^2/(lambda T) dropping -- the
two diverge and only multi-slice stays honest.
"""

import os
import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from xpci import (
    ComplexField,
    Grid2D,
    RefractiveVolume,
    apply_sample,
    extract_intensity,
    fresnel_number,
    fresnel_propagate,
    multislice,
    project,
    transmission_function,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

lam = 1e-10
grid = Grid2D(256, 256, 1e-6, 1e-6)
x, y = grid.xy()
sigma = 8e-6  # transverse feature scale


def blob_volume(nz, thickness, max_phase=0.3):
    trans = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    centres = (np.arange(nz) + 0.5) / nz
    zprof = np.exp(-(((centres - 0.5) / 0.2) ** 2))
    dz = thickness / nz
    k = 2 * np.pi / lam
    dmax = max_phase / (k * zprof.sum() * dz)
    delta = dmax * zprof[:, None, None] * trans[None, :, :]
    return RefractiveVolume(delta, 0.02 * delta, dz, grid.dy, grid.dx)


beam = ComplexField(grid, np.ones(grid.shape), lam)
thicknesses = (2e-4, 2e-3, 2e-2, 1e-1)
fig, axes = plt.subplots(1, len(thicknesses), figsize=(4 * len(thicknesses), 3.2))
print("thickness (m), N_F(feature), relative intensity discrepancy:")
for ax, thickness in zip(axes, thicknesses):
    volume = blob_volume(64, thickness)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ms = extract_intensity(multislice(beam, volume)).values
        pa = extract_intensity(
            fresnel_propagate(
                apply_sample(beam, transmission_function(project(volume, lam))), thickness
            )
        ).values
    discrepancy = np.linalg.norm(ms - pa) / np.linalg.norm(pa)
    n_f = fresnel_number(sigma, thickness, lam)
    print(f"  {thickness:7.0e}   {n_f.n_f:9.1f} ({n_f.verdict:8s})   {discrepancy:.2e}")
    ax.plot(x[0] * 1e6, ms[128], label="multi-slice")
    ax.plot(x[0] * 1e6, pa[128], "--", label="projection + hop")
    ax.set_title(f"T = {thickness*1e3:g} mm, N_F = {n_f.n_f:.0f}")
    ax.set_xlabel("x (um)")
    ax.set_xlim(-40, 40)
axes[0].set_ylabel("exit intensity")
axes[0].legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_projection_vs_multislice.png"), dpi=120)
print("wrote", os.path.join(OUT, "02_projection_vs_multislice.png"))
