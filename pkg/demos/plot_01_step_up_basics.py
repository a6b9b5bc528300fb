"""
Adaptive step-up tests on one sample
====================================

Draw a sample from the BI model, then compare the plain Benjamini-Hochberg
test with its adaptive versions.
"""

import numpy as np

import fdrlab

# 1000 hypotheses, 600 of them true; false nulls get normal-shift p-values
sample = fdrlab.sample_bi(1000, fdrlab.FixedTruth(600), fdrlab.NormalShift(2.0), seed=3)
print(f"n={sample.n}, true nulls={sample.n0}")

# the ecdf is all an estimator ever looks at
e = fdrlab.Ecdf.from_pvalues(sample.p)
print("F_n(0.5) =", e(0.5))

for spec in ["bh", "storey:0.5", "gstorey:0.5,0.8", "dynamic:grid=0.5,0.6,0.7,0.8,0.9,0.95,1;eps=0.05"]:
    cfg = fdrlab.ProcedureConfig(alpha=0.05, lam=0.5, estimator=spec)
    res = fdrlab.run_procedure(sample, cfg)
    print(f"{spec:55s} n0_hat={res.estimate:8.2f}  R={res.r:4d}  V={res.v:3d}  FDP={res.fdp:.3f}")

# step-down never rejects more than step-up with the same critical values
cfg = fdrlab.ProcedureConfig(0.05, 0.5, "storey:0.5")
su = fdrlab.run_procedure(sample, cfg).r
sd = fdrlab.run_procedure(sample, cfg.with_direction("sd")).r
print(f"SU rejects {su}, SD rejects {sd}")

# the critical values themselves: i*alpha/n0_hat, capped at lambda
crit = fdrlab.critical_values(5, 0.05, 0.5, n0_hat=0.2)
print("capped ladder:", np.round(crit, 4))
