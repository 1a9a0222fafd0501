#!/usr/bin/env python3
# Panel geometry and steering vectors.
#
# The device is a 6x6 panel with 3 mm pitch and four missing elements.
# MUSIC never uses the whole panel at once: it scans with 4x4 windows,
# and every complete window shares the same steering manifold.

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from mmimaging import ArrayGeometry, Direction, enumerate_subarrays, steering_vector

geom = ArrayGeometry()
print(f"panel {geom.rows}x{geom.cols}, pitch {geom.pitch*1e3:.1f} mm, "
      f"{geom.n_active} active elements, wavelength {geom.wavelength*1e3:.3f} mm")

subs = enumerate_subarrays(geom)
print(f"{len(subs)} complete 4x4 subarrays, anchors: {[s.anchor for s in subs]}")

# steering phases across one subarray for a few directions
sub = subs[0]
fig, axes = plt.subplots(1, 3, figsize=(10, 3))
for ax, (theta, phi) in zip(axes, [(0, 0), (0, 25), (20, -15)]):
    a = steering_vector(geom, sub, Direction(np.deg2rad(theta), np.deg2rad(phi)))
    ax.imshow(np.angle(a).reshape(4, 4), cmap="twilight", vmin=-np.pi, vmax=np.pi)
    ax.set_title(f"theta={theta}, phi={phi}")
    ax.set_xticks([])
    ax.set_yticks([])
fig.suptitle("steering phase across a 4x4 subarray")
fig.tight_layout()

import pathlib

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "steering_phases.png", dpi=120)
print(f"wrote {out/'steering_phases.png'}")

# boresight is the all-ones vector
a0 = steering_vector(geom, sub, Direction(0.0, 0.0))
print("boresight vector is all ones:", np.allclose(a0, 1.0))
