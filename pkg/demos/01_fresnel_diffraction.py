"""
Free-space Fresnel diffraction
==============================

A Gaussian beam spreads according to the analytic width law
w(d) = w0 * sqrt(1 + (2d/(k w0^2))^2), and a hard edge develops the
bright/dark fringe pair that is the signature of propagation-based
phase contrast.
"""

import os
import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from xpci import ComplexField, Grid2D, extract_intensity, fresnel_propagate

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

lam = 1e-10  # 1 angstrom
grid = Grid2D(512, 512, 1e-6, 1e-6)
x, y = grid.xy()

# --- Gaussian beam: measured width vs the analytic law -----------------
w0 = 20e-6
beam = ComplexField(grid, np.exp(-(x**2 + y**2) / w0**2), lam)
distances = np.linspace(0.0, 8.0, 9)
measured, analytic = [], []
for d in distances:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = fresnel_propagate(beam, d, pad=True) if d else beam
    intensity = extract_intensity(out).values
    r2 = ((x**2 + y**2) * intensity).sum() / intensity.sum()
    measured.append(np.sqrt(2 * r2) * 1e6)
    analytic.append(w0 * np.sqrt(1 + (2 * d / (beam.k * w0**2)) ** 2) * 1e6)
print("distance (m), measured width (um), analytic width (um):")
for d, m, a in zip(distances, measured, analytic):
    print(f"  {d:5.2f}   {m:8.3f}   {a:8.3f}")

# --- edge diffraction: fringes grow with distance ----------------------
edge = ComplexField(grid, np.exp(1j * 0.5 * (x > 0)), lam)  # pure phase step
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
axes[0].plot(distances, measured, "o", label="measured")
axes[0].plot(distances, analytic, "-", label="analytic")
axes[0].set_xlabel("distance (m)")
axes[0].set_ylabel("1/e$^2$ intensity radius (um)")
axes[0].legend()
axes[0].set_title("Gaussian beam spreading")

for d in (0.005, 0.02, 0.08):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        profile = extract_intensity(fresnel_propagate(edge, d)).values[256]
    axes[1].plot(x[0] * 1e6, profile, label=f"d = {d*100:.0f} cm")
axes[1].set_xlim(-60, 60)
axes[1].set_xlabel("x (um)")
axes[1].set_ylabel("intensity")
axes[1].legend()
axes[1].set_title("phase edge: contact image is flat, fringes need distance")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "01_fresnel_diffraction.png"), dpi=120)
print("wrote", os.path.join(OUT, "01_fresnel_diffraction.png"))
