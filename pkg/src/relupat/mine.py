"""Mining layer patterns from activation data with decision trees."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset
from .model import Network, NeuronId, activation_signature, evaluate, predicted_class, signature_matrix
from .pattern import DecisionPattern, SupportStats, satisfies_batch, support
from .postcondition import Postcondition
from .verify import Budget, Status, Verdict, dp_layer

log = logging.getLogger(__name__)


class PatternStatus(enum.Enum):
    CANDIDATE = "candidate"
    EMPIRICALLY_VALID = "empirically_valid"
    PROVED = "proved_by_dp"
    DISCARDED = "discarded"


@dataclass
class MinedPattern:
    layer: int
    pattern: DecisionPattern
    target_class: int | None
    post: Postcondition
    support: SupportStats
    validated_accuracy: float | None = None
    status: PatternStatus = PatternStatus.CANDIDATE
    tau: float | None = None
    counterexample: np.ndarray | None = None

    def to_dict(self) -> dict:
        doc = {"layer": self.layer, "pattern": self.pattern.to_json(),
               "target_class": self.target_class, "post": self.post.to_dict(),
               "support": self.support.count, "purity": self.support.purity,
               "validated_accuracy": self.validated_accuracy, "status": self.status.value,
               "tau": self.tau}
        if self.counterexample is not None:
            doc["counterexample"] = [float(v) for v in self.counterexample]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MinedPattern":
        return cls(doc["layer"], DecisionPattern.from_json(doc["pattern"]), doc.get("target_class"),
                   Postcondition.from_dict(doc["post"]),
                   SupportStats(doc.get("support", 0), [], doc.get("purity")),
                   doc.get("validated_accuracy"), PatternStatus(doc.get("status", "candidate")),
                   doc.get("tau"))


# ---------------------------------------------------------------------------
# decision tree over binary features


def _entropy(labels) -> float:
    if len(labels) == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


@dataclass
class Node:
    rows: np.ndarray
    label: object
    feature: int | None = None
    on: "Node | None" = None
    off: "Node | None" = None
    path: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.on.leaves()
            yield from self.off.leaves()


def best_split(F: np.ndarray, y: np.ndarray, rows, used):
    """Feature with the largest gain ratio; lowest index wins ties."""
    base = _entropy(y[rows])
    best, best_score = None, 0.0
    for j in range(F.shape[1]):
        if j in used:
            continue
        mask = F[rows, j]
        k = mask.sum()
        if k == 0 or k == len(rows):
            continue
        p = k / len(rows)
        cond = p * _entropy(y[rows][mask]) + (1 - p) * _entropy(y[rows][~mask])
        gain = base - cond
        split_info = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
        score = gain / split_info
        if gain > 1e-12 and score > best_score + 1e-12:
            best, best_score = j, score
    return best


def _majority(labels):
    vals, counts = np.unique(labels, return_counts=True)
    return vals[np.argmax(counts)].item()


def grow_tree(F: np.ndarray, y: np.ndarray, max_depth: int | None = None) -> Node:
    """Binary-feature tree; stops on pure nodes, zero gain, or depth equal to the feature count."""
    F = np.asarray(F, dtype=bool)
    y = np.asarray(y)
    max_depth = F.shape[1] if max_depth is None else max_depth

    def grow(rows, path, used):
        node = Node(rows, _majority(y[rows]), path=path)
        if len(np.unique(y[rows])) <= 1 or len(path) >= max_depth:
            return node
        j = best_split(F, y, rows, used)
        if j is None:
            return node
        mask = F[rows, j]
        node.feature = j
        node.on = grow(rows[mask], path + ((j, True),), used | {j})
        node.off = grow(rows[~mask], path + ((j, False),), used | {j})
        return node

    return grow(np.arange(len(y)), (), frozenset())


def mine_layer_patterns(net: Network, data: Dataset, layer: int,
                        target: Postcondition | None = None, mode: str = "argmax",
                        keep_impure: bool = False) -> list[MinedPattern]:
    """Harvest pure root-to-leaf paths of a tree over layer-``layer`` statuses.

    With a boolean ``target`` the tree predicts whether ``target`` holds and
    only leaves labelled True are harvested. With ``target=None`` it predicts
    the network's top class and every leaf yields a pattern for its class.
    Results are sorted by decreasing support.
    """
    if not 1 <= layer <= net.num_hidden:
        raise ValueError(f"layer {layer} out of range")
    if len(data) == 0:
        raise ValueError("empty dataset")
    X = data.inputs
    F = signature_matrix(net, X, layer)
    Y = evaluate(net, X)
    if target is not None:
        labels = np.asarray(target.holds(Y), dtype=bool)
    else:
        labels = predicted_class(Y, mode)
    tree = grow_tree(F, labels)
    if tree.is_leaf and len(np.unique(labels)) > 1:
        log.warning("layer %d statuses carry no information about the labels; tree is a single leaf", layer)
    found = []
    for leaf in tree.leaves():
        if target is not None:
            if leaf.label is not True:
                continue
            post, cls = target, target.cls
        else:
            cls = int(leaf.label)
            post = Postcondition.prediction(cls, mode)
        sigma = DecisionPattern({NeuronId(layer, j): s for j, s in leaf.path})
        stats = support(net, sigma, data, post)
        if stats.count == 0 or (stats.purity < 1.0 and not keep_impure):
            continue
        found.append(MinedPattern(layer, sigma, cls, post, stats))
    found.sort(key=lambda mp: -mp.support.count)
    return found


def validate_empirically(net: Network, mp: MinedPattern, holdout: Dataset, tau: float) -> MinedPattern:
    stats = support(net, mp.pattern, holdout, mp.post)
    if stats.count == 0:
        log.warning("pattern %s has no support on the holdout set", mp.pattern)
        return replace(mp, validated_accuracy=None, status=PatternStatus.CANDIDATE, tau=tau)
    ok = stats.purity >= tau
    status = mp.status if mp.status is PatternStatus.PROVED else (
        PatternStatus.EMPIRICALLY_VALID if ok else PatternStatus.CANDIDATE)
    return replace(mp, validated_accuracy=stats.purity, status=status, tau=tau)


def unanimous_statuses(net: Network, layer: int, supporters) -> DecisionPattern:
    """Layer-``layer`` neurons whose status is the same for every supporter."""
    F = signature_matrix(net, supporters, layer)
    same = np.all(F == F[0], axis=0)
    return DecisionPattern({NeuronId(layer, j): bool(F[0, j]) for j in np.flatnonzero(same)})


def refine_with_counterexample(net: Network, mp: MinedPattern, cex, supporters,
                               budget: Budget | None = None) -> MinedPattern:
    """Strengthen a refuted layer pattern; returns a proved or discarded pattern."""
    supporters = np.atleast_2d(np.asarray(supporters, dtype=float)) if len(supporters) else []
    if len(supporters) == 0:
        return replace(mp, status=PatternStatus.DISCARDED, counterexample=cex)
    stage1 = mp.pattern.union(unanimous_statuses(net, mp.layer, supporters))
    v = dp_layer(net, stage1, mp.post, budget)
    if v.proved:
        return replace(mp, pattern=stage1, status=PatternStatus.PROVED, counterexample=None)
    full = activation_signature(net, supporters[0]).layer(mp.layer)
    stage2 = mp.pattern.union(full)
    if stage2 != stage1:
        v = dp_layer(net, stage2, mp.post, budget)
        if v.proved:
            return replace(mp, pattern=stage2, status=PatternStatus.PROVED, counterexample=None)
    return replace(mp, status=PatternStatus.DISCARDED,
                   counterexample=v.counterexample if v.refuted else cex)


def prove_pattern(net: Network, mp: MinedPattern, data: Dataset, budget: Budget | None = None,
                  refine: str = "strengthen") -> MinedPattern:
    """Run the decision procedure on a mined pattern, strengthening on failure."""
    v = dp_layer(net, mp.pattern, mp.post, budget)
    if v.proved:
        return replace(mp, status=PatternStatus.PROVED)
    if v.status is Status.TIMEOUT:
        return mp
    if refine == "none":
        return replace(mp, status=PatternStatus.DISCARDED, counterexample=v.counterexample)
    supporters = data.inputs[satisfies_batch(net, mp.pattern, data.inputs)]
    return refine_with_counterexample(net, mp, v.counterexample, supporters, budget)


def mine_and_prove(net: Network, data: Dataset, layer: int, target: Postcondition | None = None,
                   mode: str = "argmax", budget: Budget | None = None,
                   refine: str = "strengthen", rounds: int = 3) -> list[MinedPattern]:
    """Mine patterns and check each; ``refine="retrain"`` re-learns with counterexamples."""
    if refine != "retrain":
        mined = mine_layer_patterns(net, data, layer, target, mode)
        return [prove_pattern(net, mp, data, budget, refine) for mp in mined]
    current = data
    proved = {}
    for _ in range(rounds):
        mined = mine_layer_patterns(net, current, layer, target, mode)
        cexs = []
        for mp in mined:
            if mp.pattern in proved:
                continue
            v = dp_layer(net, mp.pattern, mp.post, budget)
            if v.proved:
                proved[mp.pattern] = replace(mp, status=PatternStatus.PROVED)
            elif v.refuted:
                cexs.append(v.counterexample)
        if not cexs:
            break
        current = Dataset(np.vstack([current.inputs, np.array(cexs)]))
    out = list(proved.values())
    for mp in out:
        mp.support = support(net, mp.pattern, data, mp.post)
    out.sort(key=lambda mp: -mp.support.count)
    return out
