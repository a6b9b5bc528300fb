"""
Checking the exact FDR identities
=================================

The step-up FDR equals the mean of a closed-form integrand, and the control
condition E(V(lambda)/n0_hat) <= lambda is what guarantees level alpha.
"""

from fractions import Fraction

import fdrlab
from fdrlab.estimators import GStorey, Storey

proc = fdrlab.ProcedureConfig(0.05, 0.5, Storey(0.5))
cfg = fdrlab.SimulationConfig(200, fdrlab.FixedTruth(120), fdrlab.NormalShift(1.0), proc,
                              replications=3000, master_seed=4)

# mean FDP against mean integrand, on the same replicates
print(fdrlab.thm1_identity(cfg).line())

# the control condition for a generalized Storey estimator
gcfg = fdrlab.SimulationConfig(200, fdrlab.FixedTruth(120), fdrlab.NormalShift(1.0),
                               fdrlab.ProcedureConfig(0.05, 0.5, GStorey(0.5, 0.8)), 3000, 5)
print(fdrlab.check_control_condition(gcfg).line())

# leave-one-out identity behind the control condition
print(fdrlab.lemma2_sides(fdrlab.SimulationConfig(50, fdrlab.FixedTruth(25), fdrlab.DiracZero(),
                                                  proc, 3000, 6)).line())

# the multinomial identity holds exactly in rational arithmetic
third = Fraction(1, 3)
rep = fdrlab.multinomial_identity(2, third, third, third)
print("E(V1/(n+1-V1-V2)) =", rep.lhs, "closed form", rep.rhs)
