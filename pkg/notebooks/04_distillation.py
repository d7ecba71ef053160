"""
Short-circuit inference
=======================

Answer from layer 2 whenever a rule matches; otherwise finish the pass.
"""

import numpy as np

from relupat import Dataset, random_network
from relupat.distill import benchmark, build_rule_table
from relupat.mine import mine_layer_patterns, validate_empirically
from relupat.model import evaluate, predicted_class

rng = np.random.default_rng(1)
net = random_network([2] + [32] * 6 + [3], rng, scale=np.sqrt(2), bias_scale=0.1, domain=[[-1, 1], [-1, 1]])
train = Dataset(rng.uniform(-1, 1, size=(3000, 2)))
holdout = Dataset(rng.uniform(-1, 1, size=(3000, 2)))

mined = mine_layer_patterns(net, train, 2, keep_impure=True)
valid = [validate_empirically(net, mp, holdout, 0.9) for mp in mined]
table = build_rule_table(valid, 0.9)
print(len(table.rules), "rules")

X = rng.uniform(-1, 1, size=(100000, 2))
rep = benchmark(net, table, Dataset(X, predicted_class(evaluate(net, X))), repeats=5)
print(f"shortcut rate {rep.shortcut_rate:.3f}, accuracy {rep.accuracy_hybrid:.4f}, "
      f"{rep.time_hybrid * 1e3:.1f} ms vs {rep.time_full * 1e3:.1f} ms")
