"""Splitting ``A => B`` proofs through a layer pattern used as an interpolant."""

from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .explain import under_approx_box
from .lp import Box
from .mine import MinedPattern, PatternStatus, mine_layer_patterns, refine_with_counterexample, unanimous_statuses
from .model import Network, activation_signature, evaluate
from .pattern import DecisionPattern, satisfies_batch, support
from .postcondition import Postcondition
from .verify import Budget, Query, Region, Status, Verdict, dp, dp_implies_pattern, dp_layer


class PlanStatus(enum.Enum):
    PROVED = "proved"
    INCOMPLETE = "incomplete"
    REFUTED = "refuted"


@dataclass
class Obligation:
    name: str
    kind: str                      # "pattern_implies_post", "region_implies_pattern", "region_implies_post"
    region: Region | None = None
    pattern: DecisionPattern | None = None
    verdict: Verdict | None = None
    wall_time: float = 0.0

    def to_dict(self, timings=False) -> dict:
        doc = {"name": self.name, "kind": self.kind,
               "verdict": None if self.verdict is None else self.verdict.to_dict(timings)}
        if self.pattern is not None:
            doc["pattern"] = self.pattern.to_json()
        if self.region is not None:
            doc["region"] = self.region.to_dict()
        if timings:
            doc["wall_time"] = self.wall_time
        return doc


@dataclass
class ProofPlan:
    A: Region
    B: Postcondition
    interpolant: DecisionPattern
    layer: int
    method: str
    obligations: list = field(default_factory=list)
    status: PlanStatus = PlanStatus.INCOMPLETE
    counterexample: np.ndarray | None = None
    prefixes: list = field(default_factory=list)
    cells: list = field(default_factory=list)
    unchecked_cells: list = field(default_factory=list)
    note: str = ""

    @property
    def results(self):
        return [ob.verdict for ob in self.obligations]

    def covers(self, net: Network, X, include_interpolant: bool = True) -> np.ndarray:
        """Which rows of ``X`` fall in at least one obligation region."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        hit = np.zeros(len(X), dtype=bool)
        if self.method == "interpolant":
            return self.A.contains_batch(X)
        for sigma in self.prefixes:
            hit |= satisfies_batch(net, sigma, X)
        for lo, hi in self.cells:
            hit |= np.all((X >= lo) & (X <= hi), axis=1)
        if include_interpolant:
            hit |= satisfies_batch(net, self.interpolant, X)
        return hit

    def to_dict(self, timings: bool = False) -> dict:
        doc = {"method": self.method, "status": self.status.value, "layer": self.layer,
               "A": self.A.to_dict(), "B": self.B.to_dict(),
               "interpolant": self.interpolant.to_json(),
               "obligations": [ob.to_dict(timings) for ob in self.obligations]}
        if self.counterexample is not None:
            doc["counterexample"] = [float(v) for v in self.counterexample]
        if self.method == "prefix_cover":
            doc["prefixes"] = [p.to_json() for p in self.prefixes]
            doc["cells"] = [[list(map(float, lo)), list(map(float, hi))] for lo, hi in self.cells]
            doc["unchecked_cells"] = [[list(map(float, lo)), list(map(float, hi))]
                                      for lo, hi in self.unchecked_cells]
        if self.note:
            doc["note"] = self.note
        return doc


def _violates(net, A: Region, B: Postcondition, x) -> bool:
    return x is not None and A.contains(x) and not B.holds(evaluate(net, x))


def select_interpolant(net: Network, data: Dataset, A: Region, B: Postcondition,
                       candidates=None, layers=None):
    """Layer pattern covering the most dataset inputs inside ``A``.

    Candidates default to patterns mined for ``B`` at each layer. A mined
    pattern with no constraints (a single-leaf tree) is replaced by the
    statuses its supporters agree on; when no input meets ``B`` the
    candidates are the statuses shared by the inputs in ``A``. Ties go to
    the lower layer.
    Returns ``(pattern, coverage)``.
    """
    X = data.inputs
    inside = A.contains_batch(X) & _in_domain_batch(net, X)
    if not inside.any():
        raise ValueError("no dataset input lies inside A; sample A and retry")
    if candidates is None:
        candidates = []
        for l in (layers or range(1, net.num_hidden + 1)):
            for mp in mine_layer_patterns(net, data, l, B):
                if not mp.pattern:
                    sup = X[mp.support.satisfying_indices]
                    sigma = unanimous_statuses(net, l, sup)
                    mp = MinedPattern(l, sigma, mp.target_class, B, support(net, sigma, data, B))
                candidates.append(mp)
        if not candidates:
            # no input in the data meets B: fall back to what the inputs in A share
            for l in (layers or range(1, net.num_hidden + 1)):
                sigma = unanimous_statuses(net, l, X[inside])
                candidates.append(MinedPattern(l, sigma, B.cls, B, support(net, sigma, data, B)))
    if not candidates:
        raise ValueError("no candidate layer patterns for B")
    best, best_key = None, None
    for mp in candidates:
        cov = int(np.sum(satisfies_batch(net, mp.pattern, X[inside])))
        key = (cov, mp.support.count, -mp.layer)
        if best_key is None or key > best_key:
            best, best_key = mp, key
    return best, best_key[0] / int(inside.sum())


def _in_domain_batch(net, X):
    if net.input_domain is None:
        return np.ones(len(X), dtype=bool)
    d = net.input_domain
    return np.all((X >= d[:, 0]) & (X <= d[:, 1]), axis=1)


def _as_pattern(sigma_l):
    if isinstance(sigma_l, MinedPattern):
        return sigma_l.pattern, sigma_l.layer
    sigma_l = DecisionPattern(sigma_l)
    layers = sigma_l.layers()
    if len(layers) != 1:
        raise ValueError("interpolant must constrain exactly one layer")
    return sigma_l, layers[0]


def _run(obligations, fn, jobs: int):
    """Evaluate obligations in order; stop at the first refutation (by position)."""
    def timed(ob):
        t0 = time.perf_counter()
        ob.verdict = fn(ob)
        ob.wall_time = time.perf_counter() - t0
        return ob

    if jobs <= 1:
        done = []
        for ob in obligations:
            done.append(timed(ob))
            if ob.verdict.refuted:
                break
        return done
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(timed, ob) for ob in obligations]
        done = []
        for k, fut in enumerate(futures):
            ob = fut.result()
            done.append(ob)
            if ob.verdict.refuted:
                for f in futures[k + 1:]:
                    f.cancel()
                break
        return done


def prove_via_interpolant(net: Network, A: Region, B: Postcondition, sigma_l,
                          budget: Budget | None = None, supporters=None) -> ProofPlan:
    """Prove ``sigma_l => B`` (strengthening on failure) and then ``A => sigma_l``."""
    sigma, layer = _as_pattern(sigma_l)
    plan = ProofPlan(A, B, sigma, layer, "interpolant")
    ob1 = Obligation("interpolant_implies_B", "pattern_implies_post", pattern=sigma)
    t0 = time.perf_counter()
    ob1.verdict = dp_layer(net, sigma, B, budget)
    if ob1.verdict.refuted and supporters is not None and len(supporters):
        mp = MinedPattern(layer, sigma, B.cls, B, support(net, sigma, np.empty((0, net.input_dim)), B))
        refined = refine_with_counterexample(net, mp, ob1.verdict.counterexample, supporters, budget)
        if refined.status is PatternStatus.PROVED:
            sigma = refined.pattern
            ob1 = Obligation("strengthened_interpolant_implies_B", "pattern_implies_post",
                             pattern=sigma, verdict=Verdict(Status.PROVED, stats={}))
            plan.interpolant = sigma
            plan.note = f"interpolant strengthened to {len(sigma)} neurons"
    ob1.wall_time = time.perf_counter() - t0
    plan.obligations.append(ob1)
    if not ob1.verdict.proved:
        x = ob1.verdict.counterexample
        if _violates(net, A, B, x):
            plan.status, plan.counterexample = PlanStatus.REFUTED, x
        else:
            plan.status = PlanStatus.INCOMPLETE
            plan.counterexample = x
        return plan
    ob2 = Obligation("A_implies_interpolant", "region_implies_pattern", region=A, pattern=sigma)
    t0 = time.perf_counter()
    ob2.verdict = dp_implies_pattern(net, A, sigma, budget)
    ob2.wall_time = time.perf_counter() - t0
    plan.obligations.append(ob2)
    if ob2.verdict.proved:
        plan.status = PlanStatus.PROVED
    else:
        x = ob2.verdict.counterexample
        plan.counterexample = x
        plan.status = PlanStatus.REFUTED if _violates(net, A, B, x) else PlanStatus.INCOMPLETE
    return plan


def subtract_box(cell, box):
    """Axis-aligned pieces of ``cell`` outside ``box`` (closed cells, shared faces allowed)."""
    lo, hi = np.array(cell[0], dtype=float), np.array(cell[1], dtype=float)
    blo, bhi = box
    if np.any(bhi < lo) or np.any(blo > hi):
        return [(lo, hi)]
    out = []
    for d in range(len(lo)):
        if lo[d] < blo[d]:
            nlo, nhi = lo.copy(), hi.copy()
            nhi[d] = blo[d]
            out.append((nlo, nhi))
            lo[d] = blo[d]
        if hi[d] > bhi[d]:
            nlo, nhi = lo.copy(), hi.copy()
            nlo[d] = bhi[d]
            out.append((nlo, nhi))
            hi[d] = bhi[d]
    return out


def region_box(net: Network, A: Region) -> np.ndarray:
    box = A.combined_box(net)
    if not np.all(np.isfinite(box)):
        raise ValueError("prefix-cover decomposition needs a bounded region A")
    return box


def prove_via_prefix_cover(net: Network, A: Region, B: Postcondition, sigma_l, data: Dataset,
                           budget: Budget | None = None, jobs: int = 1,
                           max_cells: int = 256) -> ProofPlan:
    """Prove ``A => B`` through the closed prefixes of data inputs plus box-complement cells."""
    sigma, layer = _as_pattern(sigma_l)
    plan = ProofPlan(A, B, sigma, layer, "prefix_cover")
    abox = region_box(net, A)
    X = data.inputs
    inside = A.contains_batch(X) & _in_domain_batch(net, X)
    members = X[inside & satisfies_batch(net, sigma, X)]
    prefixes, groups = [], {}
    for x in members:
        p = activation_signature(net, x).restrict(range(1, layer + 1))
        if p not in groups:
            groups[p] = []
            prefixes.append(p)
        groups[p].append(x)
    plan.prefixes = prefixes
    obligations = [Obligation(f"prefix_{k}", "region_implies_post", region=A, pattern=p)
                   for k, p in enumerate(prefixes)]

    cells = [(abox[:, 0].copy(), abox[:, 1].copy())]
    for p in prefixes:
        box = under_approx_box(net, p, groups[p], seed=_clip_seed(groups[p], abox))
        if box.is_empty or np.any(box.widths <= 1e-12):
            continue
        cells = [piece for c in cells for piece in subtract_box(c, (box.lo, box.hi))]
        cells = [c for c in cells if np.all(c[1] - c[0] > 1e-12)]
    if len(cells) > max_cells:
        plan.cells = cells[:max_cells]
        plan.unchecked_cells = cells[max_cells:]
    else:
        plan.cells = cells
    for k, (lo, hi) in enumerate(plan.cells):
        obligations.append(Obligation(f"cell_{k}", "region_implies_post",
                                      region=A.intersect(Region(np.column_stack([lo, hi])))))

    def check(ob):
        return dp(net, Query(ob.pattern or DecisionPattern(), B, ob.region), budget)

    plan.obligations = _run(obligations, check, jobs)
    refuted = [ob for ob in plan.obligations if ob.verdict.refuted]
    if refuted:
        plan.status = PlanStatus.REFUTED
        plan.counterexample = refuted[0].verdict.counterexample
    elif plan.unchecked_cells or any(ob.verdict.status is Status.TIMEOUT for ob in plan.obligations):
        plan.status = PlanStatus.INCOMPLETE
    else:
        plan.status = PlanStatus.PROVED
    return plan


def _clip_seed(points, abox):
    P = np.atleast_2d(points)
    seed = np.column_stack([P.min(axis=0), P.max(axis=0)])
    seed[:, 0] = np.maximum(seed[:, 0], abox[:, 0])
    seed[:, 1] = np.minimum(seed[:, 1], abox[:, 1])
    return seed


def prove_contract(net: Network, A: Region, B: Postcondition, data: Dataset,
                   layers=None, budget: Budget | None = None, jobs: int = 1) -> ProofPlan:
    """Interpolant proof first; fall back to the prefix cover when it does not go through."""
    mp, coverage = select_interpolant(net, data, A, B, layers=layers)
    X = data.inputs
    supporters = X[satisfies_batch(net, mp.pattern, X) & B.holds(evaluate(net, X))]
    plan = prove_via_interpolant(net, A, B, mp, budget, supporters)
    plan.note = (plan.note + "; " if plan.note else "") + f"coverage {coverage:.4f}"
    if plan.status is PlanStatus.PROVED:
        return plan
    fallback = prove_via_prefix_cover(net, A, B, mp, data, budget, jobs)
    fallback.note = f"interpolant plan {plan.status.value}; coverage {coverage:.4f}"
    return fallback
