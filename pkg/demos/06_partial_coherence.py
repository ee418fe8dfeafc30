"""
Partial coherence via mode ensembles
====================================

A partially coherent beam is a weighted ensemble of monochromatic
fields, each propagated like a coherent one. Three classic effects
fall out of the averaging:

1. the two-point correlation (cross-spectral density) of a tilt-cone
   ensemble decays with separation (van Cittert-Zernike style);
2. edge-fringe visibility degrades as the cone widens;
3. for a weak object the ensemble average reproduces plain geometric
   source blurring of the coherent image.
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
    ProjectedObject,
    TiltedPlaneWaves,
    apply_pipeline,
    cross_spectral_density,
    extract_intensity,
    make_ensemble,
    penumbral_blur,
    propagate_ensemble,
    spectral_density,
    transmission_function,
)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

lam = 1e-10
grid = Grid2D(256, 64, 1e-6, 1e-6)

# 1 --- coherence width of a tilt-cone ensemble --------------------------
half_angle = lam / (8e-6)
ensemble = make_ensemble(TiltedPlaneWaves(half_angle, 300), grid, lam)
p0 = (32, 128)
separations = np.arange(0, 25)
degrees = []
for s in separations:
    w = cross_spectral_density(ensemble, p0, (32, 128 + s))
    s1 = cross_spectral_density(ensemble, p0, p0).real
    s2 = cross_spectral_density(ensemble, (32, 128 + s), (32, 128 + s)).real
    degrees.append(abs(w) / np.sqrt(s1 * s2))
print(f"coherence degree drops below 0.5 at {separations[np.argmax(np.array(degrees) < 0.5)]} px")

# 2 --- fringe visibility vs cone angle ----------------------------------
x, _ = grid.xy()
edge = transmission_function(
    ProjectedObject(grid, np.where(x > 0, 0.5, 0.0) * np.ones(grid.shape), np.zeros(grid.shape), lam)
)
fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
axes[0].plot(separations, degrees, "o-")
axes[0].set_xlabel("separation (px)")
axes[0].set_ylabel("|W| / sqrt(S1 S2)")
axes[0].set_title("transverse coherence decay")

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for alpha in (2e-6, 1e-5, 3e-5):
        cone = make_ensemble(TiltedPlaneWaves(alpha, 200), grid, lam)
        out = spectral_density(propagate_ensemble(cone, [edge, 0.05]))
        axes[1].plot(x[0] * 1e6, out.values[32], label=f"{alpha*1e6:.0f} urad cone")
axes[1].set_xlim(-40, 40)
axes[1].legend(fontsize=8)
axes[1].set_xlabel("x (um)")
axes[1].set_title("edge fringes wash out with source divergence")

# 3 --- ensemble average vs penumbral blur -------------------------------
square = Grid2D(128, 128, 1e-6, 1e-6)
sx, sy = square.xy()
weak = transmission_function(
    ProjectedObject(
        square,
        0.3 * np.exp(-(sx**2 + sy**2) / (2 * (10e-6) ** 2)),
        0.2 * np.exp(-(sx**2 + sy**2) / (2 * (12e-6) ** 2)),
        lam,
    )
)
alpha = 1.5625e-5
distance = 4e-6 / (2 * alpha)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    averaged = spectral_density(
        propagate_ensemble(make_ensemble(TiltedPlaneWaves(alpha, 200), square, lam), [weak, distance])
    )
    coherent = extract_intensity(
        apply_pipeline(ComplexField(square, np.ones(square.shape), lam), [weak, distance])
    )
    blurred = penumbral_blur(coherent, 2 * alpha * 0.1, 0.1, distance)
mismatch = np.linalg.norm(averaged.values - blurred.values) / np.linalg.norm(blurred.values)
print(f"ensemble average vs penumbral blur: {mismatch:.2%} relative L2")
axes[2].plot(sx[0] * 1e6, averaged.values[64], label="ensemble average")
axes[2].plot(sx[0] * 1e6, blurred.values[64], "--", label="blurred coherent")
axes[2].set_xlabel("x (um)")
axes[2].legend(fontsize=8)
axes[2].set_title("geometric-blur equivalence")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "06_partial_coherence.png"), dpi=120)
print("wrote", os.path.join(OUT, "06_partial_coherence.png"))
