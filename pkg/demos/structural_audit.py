"""Audit the model's structural assumptions and the exact exponent
arithmetic behind the Gaussian coupling rates.

The growth-bound machinery asks for: a sign pattern on the linear part,
a weighted column bound with explicit constant w, polynomial growth of
the weights, Lipschitz jump rates, and a moment threshold on the weight
exponents.  `check_assumptions` audits all of it numerically and reports
fitted constants; `exponent_calc` does the exponent arithmetic in exact
rational numbers.

Run:  python3 demos/structural_audit.py   (~2 s)
"""

from fractions import Fraction

from metapop import ModelSpec, check_assumptions, exponent_calc

model = ModelSpec()

# 1. structural audit ----------------------------------------------------
print("1. structural assumption audit (M = 60)")
rp = check_assumptions(model, M=60)
print(f"   moment order audited: r0 = {rp.r0:g}  (threshold + 2)")
print(f"   off-diagonal sign pattern        "
      f"{'pass' if rp.offdiag_nonneg else 'FAIL'}")
print(f"   weighted column bound (w = {rp.w:g})  "
      f"{'pass' if rp.mu_drift_ok else 'FAIL'}"
      f"   worst slack {rp.mu_drift_worst:.3e}")
print(f"   weight growth orders             "
      f"{'pass' if rp.mu_growth_ok else 'FAIL'}"
      f"   diagonal order {rp.diag_growth_order:.2f}")
print(f"   moment threshold {rp.threshold:g} < r0       "
      f"{'pass' if rp.r0_above_threshold else 'FAIL'}")
print(f"   fitted rate-Lipschitz constant   {rp.lipschitz_fit:.3f}")
print(f"   fitted moment-rate dominations   U: {rp.u_bound_fit:.3f}"
      f"   V: {rp.v_bound_fit:.3f}")
print(f"   overall: {'pass' if rp.passed else 'FAIL'}"
      f"   flags: {rp.flags}")
print()

# 2. exponent arithmetic -------------------------------------------------
betas = model.weights().betas
print(f"2. weight exponents for the logistic law: {betas}")
rep = exponent_calc(betas, 22, Fraction(1, 30))
print(f"   moment threshold: {rep.threshold:g}"
      f"   (feasible needs the moment order r0 strictly above it)")
print(f"   at r0 = 22 every zeta is infeasible: feasible={rep.feasible}")
print()
print("   coupling exponents approach (1/4, 1) in the zeta*r0 = 2 regime")
print("   (zeta = 2/r0 enters the window once r0 > 2 * threshold = 44):")
print(f"   {'r0':>10}  {'feasible':>8}  {'b1':>12}  {'b2':>6}")
for r0 in (50, 100, 1000, 10 ** 6):
    rep = exponent_calc(betas, r0, Fraction(2, r0))
    print(f"   {r0:>10}  {str(rep.feasible):>8}  {rep.b1:>12.6f}"
          f"  {rep.b2:>6g}")
