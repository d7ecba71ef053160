"""
Splitting a proof through an interpolant
========================================

Prove A => B by way of a layer pattern, and compare with the direct query.
"""

import numpy as np

from relupat import DecisionPattern, Dataset, Postcondition, Query, Region, dp, figure1_network
from relupat.decompose import prove_via_interpolant, prove_via_prefix_cover, select_interpolant

net = figure1_network()
A = Region.from_box([[1, 2], [-3, -2.5]])
B = Postcondition.prediction(0)
rng = np.random.default_rng(2)
data = Dataset(A.box[:, 0] + rng.random((200, 2)) * (A.box[:, 1] - A.box[:, 0]))

mp, coverage = select_interpolant(net, data, A, B)
print("interpolant", mp.pattern, "at layer", mp.layer, "covering", coverage)

plan = prove_via_interpolant(net, A, B, mp)
for ob in plan.obligations:
    print("  ", ob.name, ob.verdict.status.value)
print("plan:", plan.status.value)

plan = prove_via_prefix_cover(net, A, B, mp, data)
print("prefix cover:", plan.status.value, len(plan.prefixes), "prefixes,", len(plan.cells), "cells")
print("direct:", dp(net, Query(DecisionPattern(), B, A)).status.value)
