"""Decision patterns: partial on/off assignments to hidden neurons."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .model import Network, NeuronId, activation_signature, hidden_values


def _status(v) -> bool:
    if isinstance(v, str):
        v = v.lower()
        if v not in ("on", "off"):
            raise ValueError(f"status must be 'on' or 'off', got {v!r}")
        return v == "on"
    return bool(v)


class DecisionPattern(Mapping):
    """Immutable map ``NeuronId -> bool`` where ``True`` means on.

    Keys may be given as ``NeuronId`` or ``(layer, index)`` tuples; values as
    booleans or the strings ``"on"``/``"off"``.
    """

    __slots__ = ("_phases", "_hash")

    def __init__(self, phases: Mapping | Iterable = ()):
        items = phases.items() if isinstance(phases, Mapping) else phases
        d = {}
        for k, v in items:
            nid = NeuronId(*k)
            if nid in d:
                raise ValueError(f"{nid} constrained twice")
            d[nid] = _status(v)
        self._phases = dict(sorted(d.items()))
        self._hash = None

    def __getitem__(self, nid):
        return self._phases[NeuronId(*nid)]

    def __iter__(self):
        return iter(self._phases)

    def __len__(self):
        return len(self._phases)

    def __eq__(self, other):
        if isinstance(other, DecisionPattern):
            return self._phases == other._phases
        if isinstance(other, Mapping):
            try:
                return self == DecisionPattern(other)
            except (TypeError, ValueError):
                return False
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._phases.items()))
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{n}:{'on' if s else 'off'}" for n, s in self._phases.items())
        return "{" + body + "}"

    @property
    def on(self) -> frozenset:
        return frozenset(n for n, s in self._phases.items() if s)

    @property
    def off(self) -> frozenset:
        return frozenset(n for n, s in self._phases.items() if not s)

    def layers(self) -> list[int]:
        return sorted({n.layer for n in self._phases})

    def max_layer(self) -> int:
        return max((n.layer for n in self._phases), default=0)

    def restrict(self, layers: Iterable[int]) -> "DecisionPattern":
        keep = set(layers)
        return DecisionPattern({n: s for n, s in self._phases.items() if n.layer in keep})

    def layer(self, l: int) -> "DecisionPattern":
        return self.restrict([l])

    def without(self, neurons: Iterable) -> "DecisionPattern":
        drop = {NeuronId(*n) for n in neurons}
        return DecisionPattern({n: s for n, s in self._phases.items() if n not in drop})

    def without_layer(self, l: int) -> "DecisionPattern":
        return DecisionPattern({n: s for n, s in self._phases.items() if n.layer != l})

    def union(self, other: Mapping) -> "DecisionPattern":
        """Union of two patterns; they must agree on shared neurons."""
        other = DecisionPattern(other)
        for n, s in other.items():
            if n in self._phases and self._phases[n] != s:
                raise ValueError(f"patterns disagree on {n}")
        return DecisionPattern({**self._phases, **other._phases})

    def issubset(self, other: Mapping) -> bool:
        return all(n in other and other[n] == s for n, s in self._phases.items())

    def validate(self, net: Network):
        for n in self._phases:
            net.check_neuron(n)

    def to_json(self) -> list[dict]:
        return [{"layer": n.layer, "index": n.index, "status": "on" if s else "off"}
                for n, s in self._phases.items()]

    @classmethod
    def from_json(cls, doc) -> "DecisionPattern":
        if isinstance(doc, dict) and "pattern" in doc:
            doc = doc["pattern"]
        return cls(((d["layer"], d["index"]), d["status"]) for d in doc)


EMPTY = DecisionPattern()


def load_pattern(path) -> DecisionPattern:
    with open(path, encoding="utf-8") as f:
        return DecisionPattern.from_json(json.load(f))


def save_pattern(sigma: DecisionPattern, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(sigma.to_json(), f)


def satisfies_batch(net: Network, sigma: DecisionPattern, X) -> np.ndarray:
    """Vectorized :func:`satisfies` over the rows of ``X``."""
    sigma.validate(net)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = np.ones(len(X), dtype=bool)
    if not sigma:
        return ok
    values = hidden_values(net, X, upto=sigma.max_layer())
    for n, s in sigma.items():
        v = values[n.layer - 1][:, n.index]
        ok &= (v > 0) if s else (v <= 0)
    return ok


def satisfies(net: Network, sigma: DecisionPattern, x) -> bool:
    """True when every constrained neuron of ``x`` has its prescribed status."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("satisfies expects a single input vector")
    return bool(satisfies_batch(net, sigma, x)[0])


def is_closed(net: Network, sigma: DecisionPattern) -> bool:
    """Every constrained neuron has all earlier hidden layers fully constrained."""
    sigma.validate(net)
    top = sigma.max_layer()
    return all(NeuronId(l, i) in sigma
               for l in range(1, top) for i in range(net.width(l)))


def closed_through(net: Network, sigma: DecisionPattern) -> int:
    """Largest ``L`` such that layers ``1..L`` are fully constrained."""
    L = 0
    for l in range(1, net.num_hidden + 1):
        if all(NeuronId(l, i) in sigma for i in range(net.width(l))):
            L = l
        else:
            break
    return L


@dataclass
class SupportStats:
    count: int
    satisfying_indices: list = field(default_factory=list)
    purity: float | None = None

    def to_dict(self):
        return {"count": self.count, "purity": self.purity,
                "satisfying_indices": [int(i) for i in self.satisfying_indices]}


def support(net: Network, sigma: DecisionPattern, data, post) -> SupportStats:
    """Rows of ``data`` satisfying ``sigma`` and the fraction whose output meets ``post``."""
    X = data.inputs if hasattr(data, "inputs") else np.asarray(data, dtype=float)
    if len(X) == 0:
        return SupportStats(0, [], None)
    mask = satisfies_batch(net, sigma, X)
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return SupportStats(0, [], None)
    from .model import evaluate
    good = post.holds(evaluate(net, X[idx]))
    return SupportStats(len(idx), idx.tolist(), float(np.mean(good)))


def prefix_extension(net: Network, sigma_l: DecisionPattern, x) -> DecisionPattern:
    """Extend a layer pattern with the statuses of all earlier layers observed on ``x``."""
    if not satisfies(net, sigma_l, x):
        raise ValueError("witness input does not satisfy the layer pattern")
    l = sigma_l.max_layer()
    sig = activation_signature(net, x)
    return sigma_l.union(sig.restrict(range(1, l)))
