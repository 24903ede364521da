"""Averaged slow dynamics of the fast subsystem at J=2, tau=1.

Prints the critical branches, the averages of stable fast cycles, the fold
of limit cycles, and the regime predicted for a few inputs a.

Run: python3 demos/fast_averaging.py
"""

import numpy as np

from delayfhn.atlas import augmented_manifold, flc_locate, predict_regime

aug = augmented_manifold(2.0, 1.0, np.linspace(-1.5, 1.5, 31))
for r in aug.rows():
    print(f"y={r['y']:+.2f}  lower={r['x_lower']:+.4f}  upper={r['x_upper']:+.4f}  "
          f"cycle mean={r['cycle_m']:+.4f}")
print(f"fold of limit cycles at y = {flc_locate(2.0, 1.0, 1):+.4f}, {flc_locate(2.0, 1.0, -1):+.4f}")
for a in (0.0, 0.5, 1.0, 1.5, 2.0):
    print(f"a={a}: {predict_regime(aug, a)}")
