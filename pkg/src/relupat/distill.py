"""Short-circuit inference with layer-pattern rules."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .mine import MinedPattern, PatternStatus
from .model import Network, NeuronId, forward_from, hidden_values, predicted_class
from .pattern import DecisionPattern

log = logging.getLogger(__name__)


@dataclass
class Rule:
    pattern: DecisionPattern
    cls: int
    validated_accuracy: float | None
    support: int
    proved: bool = False

    def to_dict(self):
        return {"pattern": self.pattern.to_json(), "class": self.cls,
                "validated_accuracy": self.validated_accuracy, "support": self.support,
                "proved": self.proved}


@dataclass
class RuleTable:
    layer: int
    rules: list = field(default_factory=list)
    tau: float = 1.0
    mode: str = "argmax"

    def __post_init__(self):
        self._compile()

    def _compile(self):
        # rule k matches a status row s exactly when s @ A[k] equals its on-count
        width = 1 + max((n.index for r in self.rules for n in r.pattern), default=-1)
        self._A = np.zeros((len(self.rules), width))
        for k, r in enumerate(self.rules):
            for n, s in r.pattern.items():
                self._A[k, n.index] = 1.0 if s else -1.0
        self._need = (self._A > 0).sum(axis=1)

    def match(self, statuses) -> np.ndarray:
        """Index of the first matching rule per row of ``statuses`` (-1 for none)."""
        statuses = np.atleast_2d(statuses)
        if not self.rules:
            return np.full(len(statuses), -1)
        S = statuses[:, :self._A.shape[1]].astype(float)
        hits = (S @ self._A.T) == self._need
        first = np.argmax(hits, axis=1)
        return np.where(hits[np.arange(len(S)), first], first, -1)

    def to_dict(self) -> dict:
        return {"layer": self.layer, "tau": self.tau, "mode": self.mode,
                "rules": [r.to_dict() for r in self.rules]}

    @classmethod
    def from_dict(cls, doc) -> "RuleTable":
        rules = [Rule(DecisionPattern.from_json(r["pattern"]), r["class"], r.get("validated_accuracy"),
                      r.get("support", 0), r.get("proved", False)) for r in doc["rules"]]
        return cls(doc["layer"], rules, doc.get("tau", 1.0), doc.get("mode", "argmax"))


def build_rule_table(mined, tau: float, layer: int | None = None) -> RuleTable:
    """Admit proved patterns and those validated at accuracy ``>= tau``."""
    mined = list(mined)
    layers = {mp.layer for mp in mined}
    if len(layers) > 1:
        raise ValueError("mined patterns come from several layers")
    layer = layers.pop() if layers else (layer or 1)
    mode = mined[0].post.mode if mined else "argmax"
    if tau > 1.0:
        return RuleTable(layer, [], tau, mode)
    chosen = {}
    for mp in mined:
        proved = mp.status is PatternStatus.PROVED
        ok = proved or (mp.validated_accuracy is not None and mp.validated_accuracy >= tau)
        if not ok or mp.status is PatternStatus.DISCARDED:
            continue
        rule = Rule(mp.pattern, mp.target_class, mp.validated_accuracy, mp.support.count, proved)
        prev = chosen.get(mp.pattern)
        if prev is not None and prev.cls != rule.cls:
            loser, rule = sorted([prev, rule], key=lambda r: (r.proved, r.validated_accuracy or 0.0))
            log.warning("pattern %s claimed by classes %d and %d; keeping %d",
                        mp.pattern, loser.cls, rule.cls, rule.cls)
        chosen[mp.pattern] = rule
    rules = sorted(chosen.values(), key=lambda r: -r.support)
    return RuleTable(layer, rules, tau, mode)


def hybrid_evaluate(net: Network, table: RuleTable, x):
    """Run up to the table's layer, answer from the first matching rule, else finish."""
    h = hidden_values(net, np.asarray(x, dtype=float), upto=table.layer)[-1]
    k = table.match(h > 0)[0]
    if k >= 0:
        return table.rules[k].cls, True
    y = forward_from(net, h, table.layer)
    return int(predicted_class(y, table.mode)), False


def hybrid_classes(net: Network, table: RuleTable, X):
    """Batched hybrid inference; returns classes and the shortcut mask."""
    h = hidden_values(net, X, upto=table.layer)[-1]
    hit = table.match(h > 0)
    out = np.empty(len(X), dtype=int)
    short = hit >= 0
    if short.any():
        out[short] = np.array([r.cls for r in table.rules])[hit[short]]
    if (~short).any():
        out[~short] = predicted_class(forward_from(net, h[~short], table.layer), table.mode)
    return out, short


@dataclass
class DistillReport:
    accuracy_full: float
    accuracy_hybrid: float
    shortcut_rate: float
    time_full: float
    time_hybrid: float
    mismatches: int
    shortcuts: int = 0
    total: int = 0

    def to_dict(self, timings: bool = True) -> dict:
        doc = dict(self.__dict__)
        if not timings:
            doc.pop("time_full")
            doc.pop("time_hybrid")
        return doc


def benchmark(net: Network, table: RuleTable, test: Dataset, repeats: int = 10) -> DistillReport:
    """Accuracy of both pipelines and the median wall time of whole-dataset passes."""
    X = test.inputs
    if test.labels is None:
        raise ValueError("benchmark needs a labelled test set")
    t_full, t_hyb = [], []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        full = predicted_class(forward_from(net, X, 0), table.mode)
        t_full.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        hyb, short = hybrid_classes(net, table, X)
        t_hyb.append(time.perf_counter() - t0)
    y = test.labels
    return DistillReport(
        accuracy_full=float(np.mean(full == y)),
        accuracy_hybrid=float(np.mean(hyb == y)),
        shortcut_rate=float(np.mean(short)),
        time_full=float(np.median(t_full)),
        time_hybrid=float(np.median(t_hyb)),
        mismatches=int(np.sum(short & (hyb != full))),
        shortcuts=int(short.sum()),
        total=len(X),
    )


def save_rules(table: RuleTable, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(table.to_dict(), f)
