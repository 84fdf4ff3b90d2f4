"""Tight frame, admissible multipliers and scale steering on a random image.

Run: python3 demos/01_frame_and_steering.py
"""

import numpy as np

from scalesteer.frame import analyze, build_filter_bank, max_scales, synthesize
from scalesteer.multipliers import (MultiplierBank, bspline_spec, quality_sweep, steer_pyramid,
                                    steering_matrix)

rng = np.random.default_rng(0)
f = rng.standard_normal((128, 128))
bank = build_filter_bank(128, max_scales(128))
spec = bspline_spec()
mb = MultiplierBank(spec)

# analysis then synthesis returns the image; energy is preserved
p = analyze(f, bank, mb)
g = synthesize(p, bank, mb)
print(f"{bank.n_scales} scales x {spec.n_channels} channels")
print(f"reconstruction error  {np.linalg.norm(g - f) / np.linalg.norm(f):.2e}")
print(f"energy ratio          {p.energy() / np.mean(f ** 2):.15f}")

# steering: coefficients of a dilated family are a 9x9 mix of the ones we have
a, b = 1.0, 2 ** 0.37
steered = steer_pyramid(p, spec, a, b)
direct = analyze(f, bank, MultiplierBank(spec, b))
err = np.linalg.norm(steered.channels - direct.channels) / np.linalg.norm(direct.channels)
print(f"steer {a:g} -> {b:.4f}: relative error {err:.2e}")
T = steering_matrix(spec, 1.0, 4.0)
print(f"one full period (x4) is the identity: {np.allclose(T, np.eye(9))}")

# pseudo-dilation quality over one period
a_vals, q = quality_sweep(spec)
print(f"pseudo-dilation quality: 1 at a=1, minimum {q.min():.4f} at a={a_vals[q.argmin()]:.3f}")
