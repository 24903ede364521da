"""First Lyapunov coefficient along tau_1^0 and the Bautin point (J=2, eps=0.01).

Run: python3 demos/lyapunov_along_hopf.py
"""

import math

from delayfhn.bifurcation import bautin_locate, chebyshev_grid
from delayfhn.normal_form import lyap1_full

J, eps = 2.0, 0.01
print(f"{'a':>8} {'tau':>9} {'ell1':>12} {'projection':>12}")
for a in chebyshev_grid(1.0, math.sqrt(1 + 2 * J), 26)[1:-1]:
    r = lyap1_full(J, eps, a)
    print(f"{a:8.4f} {r.tau:9.4f} {r.ell1:12.4e} {r.ell1_projection:12.4e}")
print(f"sign change at tau_s = {bautin_locate(J, eps, tol=1e-6):.5f}")
