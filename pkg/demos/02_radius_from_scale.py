"""Reading a disk radius from the steered scale and from the complex phase.

Both readings are periodic in log-scale, so a calibration table maps them
to pixels. Run: python3 demos/02_radius_from_scale.py
"""

import numpy as np

from scalesteer.complex_channel import calibrate_phase_radius, phase_radius
from scalesteer.detector import (CALIBRATION_GRID, CALIBRATION_SCALES, DEFAULT_CALIBRATION_RADII,
                                 calibration_sweep, default_calibration, steered_radius)
from scalesteer.frame import build_filter_bank
from scalesteer.simdata import NARROW_SWEEP_RADII, radius_sweep

# same grid and 6-24 px sweep the shipped multichannel table was fit on
size = CALIBRATION_GRID
bank = build_filter_bank(size, CALIBRATION_SCALES)
mc = default_calibration()
cx = calibrate_phase_radius(calibration_sweep(), DEFAULT_CALIBRATION_RADII, bank)
print(f"multichannel table slope {mc.slope:.3f} (1 means covariant)")

radii = np.array(NARROW_SWEEP_RADII)
_, imgs = radius_sweep(0, radii, size)
print(" true   steered  phase  phase+centroid")
for r, im in zip(radii, imgs):
    rm, s, t = steered_radius(im, bank, mc)
    rc = phase_radius(im, bank, cx)[0]
    rh = phase_radius(im, bank, cx, use_centroid=True)[0]
    print(f"{r:5.1f}  {rm:7.3f}  {rc:6.3f}  {rh:6.3f}")
# the phase repeats every half octave: without the centroid cue some
# readings land one cycle off
