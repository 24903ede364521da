"""Saddle-homoclinic proxies of the fast subsystem (J=2).

Double homoclinic at y=0, split pair off the symmetric line, and the branch
near the Bogdanov-Takens point compared with two closed-form expansions.

Run: python3 demos/homoclinic_proxies.py
"""

from delayfhn.atlas import homoclinic_proxy, homoclinic_proxy_y
from delayfhn.bifurcation import bt_homoclinic_approx, bt_homoclinic_leading

J = 2.0
for y in (0.0, 0.1, 0.2):
    h = homoclinic_proxy(J, y)
    print(f"y={y}: tau = {', '.join(f'{t:.4f}' for t in h.taus)}  branches {h.branches}")
print(f"{'nu':>5} {'proxy y':>9} {'2/3-98/25 nu^2/tau':>19} {'2/3-4.41 J^2 nu^2':>18}")
for nu in (0.02, 0.05, 0.1, 0.15):
    tau = (1 + nu) / J
    print(f"{nu:5.2f} {homoclinic_proxy_y(J, tau):9.4f} {bt_homoclinic_approx(J, tau):19.4f} "
          f"{bt_homoclinic_leading(J, tau):18.4f}")
