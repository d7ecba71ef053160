"""Affine forms of neurons under a phase-fixed prefix, and the induced polytope."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .model import Network, NeuronId
from .pattern import DecisionPattern, is_closed


@dataclass(frozen=True)
class AffineForm:
    w: np.ndarray
    b: float

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.w + self.b


def next_layer(net: Network, post_w, post_b, layer: int):
    """Pre-activation forms of ``layer`` given post-activation forms of the layer below.

    ``post_w`` is ``(width_{layer-1}, n)`` and ``post_b`` ``(width_{layer-1},)``;
    for ``layer=1`` pass the identity and zeros.
    """
    w, b = net.weights[layer - 1], net.biases[layer - 1]
    return w @ post_w, w @ post_b + b


def apply_phases(pre_w, pre_b, phases):
    """Post-activation forms: on rows pass through, off rows become zero."""
    mask = np.asarray(phases, dtype=bool)
    return pre_w * mask[:, None], pre_b * mask


@dataclass
class Propagation:
    """Pre-activation forms per constrained neuron; output forms when fully fixed."""

    forms: dict
    output_w: np.ndarray | None = None
    output_b: np.ndarray | None = None

    def outputs(self):
        if self.output_w is None:
            return None
        return [AffineForm(w, float(b)) for w, b in zip(self.output_w, self.output_b)]


def propagate(net: Network, sigma: DecisionPattern) -> Propagation:
    """Symbolic forward pass through the constrained prefix of ``sigma``.

    For each constrained neuron ``N`` the returned form satisfies
    ``N(X) = relu(w.X + b)`` for every ``X`` in the pattern region.
    """
    if not is_closed(net, sigma):
        raise ValueError("pattern is not closed; cannot propagate affine forms")
    n = net.input_dim
    post_w, post_b = np.eye(n), np.zeros(n)
    forms = {}
    top = sigma.max_layer()
    for l in range(1, top + 1):
        pre_w, pre_b = next_layer(net, post_w, post_b, l)
        for i in range(net.width(l)):
            if NeuronId(l, i) in sigma:
                forms[NeuronId(l, i)] = AffineForm(pre_w[i].copy(), float(pre_b[i]))
        if l < top or len(sigma.layer(l)) == net.width(l):
            phases = [sigma[NeuronId(l, i)] for i in range(net.width(l))]
            post_w, post_b = apply_phases(pre_w, pre_b, phases)
    result = Propagation(forms)
    if top == net.num_hidden and len(sigma) == sum(net.widths):
        result.output_w, result.output_b = next_layer(net, post_w, post_b, net.num_hidden + 1)
    return result


@dataclass
class Polytope:
    """``strict``: rows ``w.x + b > 0``; ``nonstrict``: rows ``w.x + b <= 0``."""

    dim: int
    strict: list = field(default_factory=list)
    nonstrict: list = field(default_factory=list)
    box: np.ndarray | None = None

    def constraints(self):
        """Rows ``(coeffs, rel, rhs)`` in the form the LP solver takes."""
        rows = [(np.asarray(w), ">", 0.0 - b) for w, b in self.strict]
        rows += [(np.asarray(w), "<=", 0.0 - b) for w, b in self.nonstrict]
        return rows

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if self.box is not None and (np.any(x < self.box[:, 0] - tol) or np.any(x > self.box[:, 1] + tol)):
            return False
        return (all(x @ w + b > -tol for w, b in self.strict)
                and all(x @ w + b <= tol for w, b in self.nonstrict))

    def slacks(self, x) -> np.ndarray:
        """Signed margins; every entry is positive (or zero for non-strict) inside."""
        x = np.asarray(x, dtype=float)
        out = [x @ w + b for w, b in self.strict] + [-(x @ w + b) for w, b in self.nonstrict]
        return np.array(out)

    def to_dict(self) -> dict:
        doc = {"strict": [{"w": list(map(float, w)), "b": float(b)} for w, b in self.strict],
               "nonstrict": [{"w": list(map(float, w)), "b": float(b)} for w, b in self.nonstrict]}
        if self.box is not None:
            doc["box"] = self.box.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Polytope":
        strict = [(np.array(r["w"], dtype=float), float(r["b"])) for r in doc.get("strict", [])]
        nonstrict = [(np.array(r["w"], dtype=float), float(r["b"])) for r in doc.get("nonstrict", [])]
        box = np.array(doc["box"], dtype=float) if doc.get("box") is not None else None
        rows = strict + nonstrict
        dim = len(rows[0][0]) if rows else (len(box) if box is not None else int(doc.get("dim", 0)))
        return cls(dim, strict, nonstrict, box)

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def polytope_of(net: Network, sigma: DecisionPattern) -> Polytope:
    """Halfspace description of the input region of a closed pattern."""
    prop = propagate(net, sigma)
    poly = Polytope(net.input_dim, box=None if net.input_domain is None else net.input_domain.copy())
    for nid, form in prop.forms.items():
        (poly.strict if sigma[nid] else poly.nonstrict).append((form.w, form.b))
    return poly
