"""Classify the full system along a delay ladder at J=2, eps=0.05, a=1.01.

Run: python3 demos/regime_ladder.py
"""

from delayfhn import SystemParams
from delayfhn.atlas import classify
from delayfhn.bifurcation import tau_full_hopf

tau_h = tau_full_hopf(1.01, 2.0, 0.05, 0).tau1_k
print(f"Hopf delay tau_1^0 = {tau_h:.4f}")
for tau in (0.30, 0.36, 0.40, 0.55, 0.62, 0.70, 0.74, 0.82, 0.90, 1.00):
    lab = classify(SystemParams(2.0, 1.01, 0.05, tau))
    s = lab.stats
    lam = float("nan") if s.lambda_hat is None else s.lambda_hat
    print(f"tau={tau:.2f}  {lab.label:<15} L={s.large_count:<3} S={s.small_count:<3} "
          f"section period={s.section_period}  lambda={lam:+.4f}  ({lab.reason})")
