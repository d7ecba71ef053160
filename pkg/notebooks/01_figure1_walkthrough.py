"""
The two-input example network
=============================

Evaluate, read off an activation signature, and prove that the wedge
{N1,0 on, N1,1 off} forces class 0.
"""

import numpy as np

from relupat import DecisionPattern, Postcondition, Query, dp, figure1_network
from relupat.affine import polytope_of, propagate
from relupat.model import activation_signature, evaluate
from relupat.relax import infer_input_property

net = figure1_network()
x = np.array([1.0, -1.0])
print("F(x) =", evaluate(net, x))

sig = activation_signature(net, x)
print("signature:", sig)

# inside the signature's region the network is affine
y0, y1 = propagate(net, sig).outputs()
print("outputs:", y0.w, y0.b, "|", y1.w, y1.b)

wedge = DecisionPattern({(1, 0): "on", (1, 1): "off"})
for w, rel, r in polytope_of(net, wedge).constraints():
    print("  ", w, rel, r)

post = Postcondition.prediction(0)
print("wedge => class 0:", dp(net, Query(wedge, post)).status.value)

flipped = DecisionPattern({(1, 0): "off", (1, 1): "on"})
v = dp(net, Query(flipped, post))
print("flipped => class 0:", v.status.value, "counterexample", v.counterexample, "->", v.output)

# iterative relaxation recovers the wedge from the full signature
prop = infer_input_property(net, x, post)
print("input property:", prop.pattern, "critical layer", prop.critical_layer, "dp calls", prop.dp_calls)
