"""
Estimating the number of true nulls
===================================

Storey-type estimators read the ecdf to the right of lambda.  The dynamic
estimator chooses its weights from the sample.
"""

import numpy as np

import fdrlab
from fdrlab.estimators import Dynamic, Storey, Weighted, variance_balanced_weights

sample = fdrlab.sample_bi(1000, fdrlab.FixedTruth(600), fdrlab.PiecewiseD3(), seed=11)
e = fdrlab.Ecdf.from_pvalues(sample.p)

for lam in (0.5, 0.6, 0.7, 0.8, 0.9):
    print(f"storey({lam}) = {Storey(lam).evaluate(e):7.2f}")

# variance-balanced combination of three Storey estimators
lams = (0.5, 0.6, 0.7)
w = variance_balanced_weights(lams)
weighted = Weighted(tuple(Storey(x) for x in lams), tuple(w))
print("weights", np.round(w, 4), "->", round(weighted.evaluate(e), 2))

# the dynamic estimator, with its per-cell estimates and chosen weights
dyn = Dynamic((0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0), epsilon=0.05, fixed_tail=2)
trace = dyn.trace(e)
print("cell estimates", np.round(trace.interval_estimates, 1))
print("case", trace.case, "weights", np.round(trace.weights, 3))
print("dynamic estimate", round(dyn.evaluate(e), 2), "(truth 600)")
