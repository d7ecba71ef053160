"""
Boxes and minimal assignments
=============================

Turn a pattern into something readable: the widest box inside its region,
and the fewest input coordinates that still force it.
"""

import numpy as np

from relupat import DecisionPattern, figure1_network, random_network
from relupat.explain import format_box, minimal_assignment, under_approx_box
from relupat.model import activation_signature
from relupat.pattern import satisfies_batch

net = figure1_network()
wedge = DecisionPattern({(1, 0): "on", (1, 1): "off"})
box = under_approx_box(net, wedge, np.array([[1.0, -1.0], [0.0, -1.0]]))
print(format_box(box, ["x1", "x2"]))

rng = np.random.default_rng(1)
print("all samples inside:", satisfies_batch(net, wedge, box.sample(rng, 10000)).all())

res = minimal_assignment(net, wedge, [1.0, -1.0], domain=[[-4, 4], [-4, 4]])
print("fixed", res.fixed, "free", res.free)

# five inputs named like the collision-avoidance benchmark
net = random_network([5, 10, 10, 5], rng, domain=np.tile([-1.0, 1.0], (5, 1)))
x = rng.uniform(-1, 1, size=5)
sigma = activation_signature(net, x).restrict([1])
res = minimal_assignment(net, sigma, x)
print("fixed", res.fixed, "free", res.free, "dp calls", res.dp_calls)
