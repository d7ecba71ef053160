"""
Mining layer patterns
=====================

Grow a decision tree over layer statuses, keep pure leaves, then try to
prove each with the decision procedure.
"""

import numpy as np

from relupat import Dataset, Postcondition, figure1_network, random_network
from relupat.mine import mine_and_prove, mine_layer_patterns, validate_empirically

net = figure1_network()
rows = Dataset(np.array([[0, -1], [1, 0], [0, 1], [4, 3], [1, -1]], dtype=float))
for mp in mine_layer_patterns(net, rows, 1, Postcondition.prediction(0)):
    print(mp.pattern, "support", mp.support.count, "purity", mp.support.purity)

# a random net, multiclass mining at layer 2
rng = np.random.default_rng(0)
net = random_network([2, 8, 8, 3], rng, scale=np.sqrt(2), domain=[[-1, 1], [-1, 1]])
train = Dataset(rng.uniform(-1, 1, size=(2000, 2)))
holdout = Dataset(rng.uniform(-1, 1, size=(2000, 2)))

mined = mine_layer_patterns(net, train, 2)
print(len(mined), "pure patterns at layer 2")
for mp in mined[:5]:
    mp = validate_empirically(net, mp, holdout, tau=0.98)
    print(f"  class {mp.target_class} support {mp.support.count:4d} holdout acc {mp.validated_accuracy}")

proved = mine_and_prove(net, train, 2)
for mp in proved[:5]:
    print("  ", mp.status.value, mp.pattern)
