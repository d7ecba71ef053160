"""Branch-and-bound decision procedure for ``A(X) => B(F(X))``.

The search fixes ReLU phases in layer order. Every node carries the exact
affine forms of the fixed prefix, so the constraints of a node are linear in
the input; infeasible nodes are pruned with an LP. A node also keeps one
feasible input (the witness) so that only the phase the witness does not
already satisfy costs an LP call.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import lp as _lp
from .affine import apply_phases, next_layer
from .model import Network, NeuronId, evaluate
from .pattern import DecisionPattern, satisfies
from .postcondition import Postcondition

log = logging.getLogger(__name__)

REGION_TOL = 1e-9


class Status(enum.Enum):
    PROVED = "proved"
    REFUTED = "refuted"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Budget:
    max_nodes: int = 200_000
    timeout: float | None = None


@dataclass
class Region:
    """Convex input region: an optional box and linear rows ``(coeffs, rel, rhs)``."""

    box: np.ndarray | None = None
    constraints: list = field(default_factory=list)

    def __post_init__(self):
        if self.box is not None:
            self.box = np.asarray(self.box, dtype=float).reshape(-1, 2)
        self.constraints = [(np.asarray(a, dtype=float), rel, float(r))
                            for a, rel, r in self.constraints]

    @classmethod
    def from_box(cls, bounds) -> "Region":
        return cls(np.asarray(bounds, dtype=float).reshape(-1, 2))

    def contains(self, x, tol: float = REGION_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if self.box is not None:
            if np.any(x < self.box[:, 0] - tol) or np.any(x > self.box[:, 1] + tol):
                return False
        for a, rel, r in self.constraints:
            v = float(a @ x)
            t = tol * max(1.0, abs(r))
            ok = {"<=": v <= r + t, "<": v < r + t, ">=": v >= r - t,
                  ">": v > r - t, "=": abs(v - r) <= t}[rel]
            if not ok:
                return False
        return True

    def contains_batch(self, X, tol: float = REGION_TOL) -> np.ndarray:
        return np.array([self.contains(x, tol) for x in np.atleast_2d(X)], dtype=bool)

    def combined_box(self, net: Network) -> np.ndarray:
        n = net.input_dim
        b = np.tile([-np.inf, np.inf], (n, 1))
        for other in (net.input_domain, self.box):
            if other is not None:
                b[:, 0] = np.maximum(b[:, 0], other[:, 0])
                b[:, 1] = np.minimum(b[:, 1], other[:, 1])
        return b

    def intersect(self, other: "Region") -> "Region":
        if self.box is None:
            box = other.box
        elif other.box is None:
            box = self.box
        else:
            box = np.column_stack([np.maximum(self.box[:, 0], other.box[:, 0]),
                                   np.minimum(self.box[:, 1], other.box[:, 1])])
        return Region(box, list(self.constraints) + list(other.constraints))

    def to_dict(self) -> dict:
        doc = {"constraints": [{"coeffs": [float(v) for v in a], "rel": rel, "rhs": r}
                               for a, rel, r in self.constraints]}
        if self.box is not None:
            doc["box"] = self.box.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc) -> "Region":
        if isinstance(doc, list):
            return cls.from_box(doc)
        rows = [(c["coeffs"], c["rel"], c["rhs"]) for c in doc.get("constraints", [])]
        return cls(doc.get("box"), rows)


@dataclass
class Query:
    pattern: DecisionPattern
    post: Postcondition
    region: Region = field(default_factory=Region)


@dataclass
class Verdict:
    status: Status
    counterexample: np.ndarray | None = None
    output: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def proved(self) -> bool:
        return self.status is Status.PROVED

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    def to_dict(self, timings: bool = False) -> dict:
        doc = {"status": self.status.value}
        if self.counterexample is not None:
            doc["counterexample"] = [float(v) for v in self.counterexample]
            doc["output"] = [float(v) for v in self.output]
        stats = {k: v for k, v in self.stats.items() if timings or k != "wall_time"}
        doc["stats"] = stats
        return doc


def _interval(w, b, box):
    """Range of ``w.x + b`` over ``box`` (entries may be infinite)."""
    lo_b, hi_b = box[:, 0], box[:, 1]
    with np.errstate(invalid="ignore"):
        lo = np.where(w > 0, w * lo_b, np.where(w < 0, w * hi_b, 0.0))
        hi = np.where(w > 0, w * hi_b, np.where(w < 0, w * lo_b, 0.0))
    return b + lo.sum(axis=-1), b + hi.sum(axis=-1)


def _row_holds(a, rel, r, x, eps) -> bool:
    v = float(a @ x)
    if rel == "<=":
        return v <= r
    if rel == ">=":
        return v >= r
    if rel == "=":
        return v == r
    m = _lp.strict_margin(r, eps)
    return v <= r - m if rel == "<" else v >= r + m


class _Search:
    """Depth-first phase enumeration with LP pruning.

    ``goals`` are output rows ``(a, rel, r)`` of which at least one must be
    satisfiable at a leaf (``None`` when only the pattern matters); ``depth``
    is the number of hidden layers that must be fixed at a leaf.
    """

    def __init__(self, net: Network, region: Region, pattern: DecisionPattern,
                 goals, depth: int, budget: Budget, validate, eps=_lp.EPS, witness=None,
                 bound_prune: bool = True):
        self.net = net
        self.region = region
        self.pattern = pattern
        self.goals = goals
        self.depth = depth
        self.budget = budget
        self.validate = validate
        self.eps = eps
        self.box = region.combined_box(net)
        self.bounded = bool(np.all(np.isfinite(self.box)))
        self.bound_prune = bound_prune and self.bounded and goals is not None
        self.nodes = 0
        self.lp_calls = 0
        self.near_misses = []
        self.start = time.perf_counter()
        self.witness = witness

    # -- LP helpers ---------------------------------------------------------
    def _feasible(self, rows):
        self.lp_calls += 1
        out = _lp.solve(_lp.LinearProgram(self.net.input_dim, list(rows), None, self.box), self.eps)
        if out.status == _lp.LpStatus.NUMERIC_FAILURE:
            # retry once with the strict margins widened slightly
            out = _lp.solve(_lp.LinearProgram(self.net.input_dim, list(rows), None, self.box),
                            self.eps * 1.5)
            if out.status == _lp.LpStatus.NUMERIC_FAILURE:
                raise ArithmeticError("simplex failed to converge during search")
        return out.point if out.feasible else None

    def _centered(self, rows):
        """A point of ``rows`` as deep inside as possible (distance capped at 1)."""
        n = self.net.input_dim
        lp = _lp.LinearProgram(n + 1, bounds=np.vstack([self.box, [[0.0, 1.0]]]),
                               objective=np.r_[np.zeros(n), 1.0])
        for a, rel, r in rows:
            norm = float(np.linalg.norm(a))
            if rel == "=" or norm < 1e-12:
                lp.add(np.r_[a, 0.0], rel, r)
            elif rel in ("<=", "<"):
                lp.add(np.r_[a, norm], rel, r)
            else:
                lp.add(np.r_[a, -norm], rel, r)
        self.lp_calls += 1
        out = _lp.solve(lp, self.eps)
        return out.point[:n] if out.status == _lp.LpStatus.OPTIMAL else None

    def _out_of_budget(self) -> bool:
        if self.nodes >= self.budget.max_nodes:
            return True
        t = self.budget.timeout
        return t is not None and time.perf_counter() - self.start > t

    # -- search -------------------------------------------------------------
    def _tighten(self, rows, box):
        """Bounding box of ``rows`` within ``box`` by 2n LPs; ``None`` if empty."""
        n = self.net.input_dim
        out = box.copy()
        for d in range(n):
            for sign, col in ((1.0, 1), (-1.0, 0)):
                c = np.zeros(n)
                c[d] = sign
                self.lp_calls += 1
                res = _lp.solve(_lp.LinearProgram(n, list(rows), c, out), self.eps)
                if res.status == _lp.LpStatus.INFEASIBLE:
                    return None
                if res.status == _lp.LpStatus.OPTIMAL:
                    v = sign * res.value
                    # widen slightly so LP round-off never cuts off feasible points
                    slack = 1e-9 * max(1.0, abs(v))
                    out[d, col] = min(out[d, 1], v + slack) if col == 1 else max(out[d, 0], v - slack)
        return out

    def _goal_possible(self, post_w, post_b, layer, goals, box=None):
        """Drop goals that symbolic interval bounds rule out from ``layer`` onward.

        Lower and upper bounds are kept as affine functions of the input and
        only concretized over ``box`` to relax unstable neurons.
        """
        box = self.box if box is None else box
        Lw, Lb, Uw, Ub = post_w, post_b, post_w, post_b
        for w, b in zip(self.net.weights[layer:-1], self.net.biases[layer:-1]):
            wp, wn = np.maximum(w, 0), np.minimum(w, 0)
            Lw, Lb, Uw, Ub = (wp @ Lw + wn @ Uw, wp @ Lb + wn @ Ub + b,
                              wp @ Uw + wn @ Lw, wp @ Ub + wn @ Lb + b)
            lo = _interval(Lw, Lb, box)[0]
            hi = _interval(Uw, Ub, box)[1]
            dead, live = hi <= 0, lo >= 0
            mixed = ~dead & ~live
            s = np.where(mixed, hi / np.where(mixed, hi - lo, 1.0), live.astype(float))
            Uw, Ub = Uw * s[:, None], np.where(mixed, s * (Ub - lo), Ub * s)
            lam = np.where(mixed, (hi > -lo).astype(float), live.astype(float))
            Lw, Lb = Lw * lam[:, None], Lb * lam
        w, b = self.net.weights[-1], self.net.biases[-1]
        wp, wn = np.maximum(w, 0), np.minimum(w, 0)
        Lw, Lb, Uw, Ub = wp @ Lw + wn @ Uw, wp @ Lb + wn @ Ub + b, wp @ Uw + wn @ Lw, wp @ Ub + wn @ Lb + b
        keep = []
        for g in goals:
            a, rel, r = g
            ap, an = np.maximum(a, 0), np.minimum(a, 0)
            vlo = _interval(ap @ Lw + an @ Uw, ap @ Lb + an @ Ub, box)[0]
            vhi = _interval(ap @ Uw + an @ Lw, ap @ Ub + an @ Lb, box)[1]
            if rel in (">=", ">") and vhi < r:
                continue
            if rel in ("<=", "<") and vlo > r:
                continue
            keep.append(g)
        return keep

    def run(self):
        n = self.net.input_dim
        base_rows = tuple(self.region.constraints)
        if np.any(self.box[:, 0] > self.box[:, 1]):
            return None
        x0 = self.witness
        if x0 is None or not all(_row_holds(a, rel, r, x0, self.eps) for a, rel, r in base_rows) \
                or np.any(x0 < self.box[:, 0]) or np.any(x0 > self.box[:, 1]):
            x0 = self._feasible(base_rows)
            if x0 is None:
                return None
        goals = list(self.goals) if self.goals is not None else None
        pre_w, pre_b = next_layer(self.net, np.eye(n), np.zeros(n), 1)
        # frame: layer, neuron index, pre-activation forms of the layer (post
        # forms of the last fixed layer once layer > depth), phases fixed in
        # the layer so far, constraint rows, witness, live goals
        stack = [(1, 0, pre_w, pre_b, (), base_rows, x0, goals, (self.box, -1))]
        while stack:
            if self._out_of_budget():
                return "timeout"
            l, i, pre_w, pre_b, phases, rows, x, goals, (box, nbox) = stack.pop()
            self.nodes += 1
            if l > self.depth:
                hit = self._leaf(pre_w, pre_b, rows, x, goals, box)
                if hit is not None:
                    return hit
                continue
            children = self._branch(l, i, pre_w[i], pre_b[i], rows, x, box)
            frames = []
            for phase, crows, cx in children:
                ph = phases + (phase,)
                if i + 1 < len(pre_b):
                    frames.append((l, i + 1, pre_w, pre_b, ph, crows, cx, goals, (box, nbox)))
                    continue
                cbox, cn = box, nbox
                if self.bounded and len(crows) > nbox:
                    # layer complete: shrink the box around the current polytope
                    cbox, cn = self._tighten(crows, box), len(crows)
                    if cbox is None:
                        continue
                post_w, post_b = apply_phases(pre_w, pre_b, ph)
                g = goals
                if self.bound_prune and l < self.depth and goals:
                    g = self._goal_possible(post_w, post_b, l, goals, cbox)
                    if not g:
                        continue
                if l < self.depth:
                    post_w, post_b = next_layer(self.net, post_w, post_b, l + 1)
                frames.append((l + 1, 0, post_w, post_b, (), crows, cx, g, (cbox, cn)))
            stack.extend(reversed(frames))
        return None

    def _branch(self, l, i, w, b, rows, x, box):
        """Feasible phases of neuron ``(l, i)``, the witness-compatible one first."""
        lo, hi = _interval(w, b, box)
        margin = _lp.strict_margin(-b, self.eps)
        required = self.pattern.get(NeuronId(l, i))
        ranked = []
        for phase in ((True, False) if required is None else (required,)):
            if phase:
                if hi < margin:
                    continue
                row = None if lo >= margin else (w, ">", -b)
            else:
                if lo > 0:
                    continue
                row = None if hi <= 0 else (w, "<=", -b)
            ok = row is None or _row_holds(row[0], row[1], row[2], x, self.eps)
            ranked.append((not ok, phase, row))
        ranked.sort(key=lambda t: t[0])
        children = []
        for needs_lp, phase, row in ranked:
            new_rows = rows if row is None else rows + (row,)
            if not needs_lp:
                children.append((phase, new_rows, x))
            else:
                xc = self._feasible(new_rows)
                if xc is not None:
                    children.append((phase, new_rows, xc))
        return children

    def _leaf(self, post_w, post_b, rows, x, goals, box):
        if goals is None:
            return self._accept([rows], x)
        out_w, out_b = next_layer(self.net, post_w, post_b, self.net.num_hidden + 1)
        for a, rel, r in goals:
            c, const = a @ out_w, float(a @ out_b)
            row = (c, rel, r - const)
            if self.bounded:
                lo, hi = _interval(c, const, box)
                if rel in (">=", ">") and hi < r:
                    continue
                if rel in ("<=", "<") and lo > r:
                    continue
            new_rows = rows + (row,)
            if _row_holds(c, rel, r - const, x, self.eps):
                pt = x
            else:
                pt = self._feasible(new_rows)
                if pt is None:
                    continue
            hit = self._accept([new_rows], pt)
            if hit is not None:
                return hit
        return None

    def _accept(self, rows_list, x):
        rows = rows_list[0]
        xc = self._centered(rows)
        if xc is not None and self.validate(xc):
            return xc
        if self.validate(x):
            return x
        self.near_misses.append([float(v) for v in x])
        log.debug("near miss at %s", x)
        return None

    def stats(self) -> dict:
        return {"nodes": self.nodes, "lp_calls": self.lp_calls,
                "near_misses": len(self.near_misses),
                "wall_time": time.perf_counter() - self.start}


def _verdict(search: _Search, result, net: Network) -> Verdict:
    stats = search.stats()
    if result is None:
        return Verdict(Status.PROVED, stats=stats)
    if isinstance(result, str):
        return Verdict(Status.TIMEOUT, stats=stats)
    x = np.asarray(result, dtype=float)
    return Verdict(Status.REFUTED, x, evaluate(net, x), stats)


def dp(net: Network, query: Query, budget: Budget | None = None, witness=None,
       eps: float = _lp.EPS) -> Verdict:
    """Decide whether every input in the query's region and pattern meets its postcondition."""
    budget = budget or Budget()
    sigma, post, region = query.pattern, query.post, query.region
    sigma.validate(net)
    post.check_dim(net.output_dim)

    def validate(x):
        return (region.contains(x) and _in_domain(net, x)
                and satisfies(net, sigma, x) and not post.holds(evaluate(net, x)))

    search = _Search(net, region, sigma, post.negation(net.output_dim), net.num_hidden,
                     budget, validate, eps, witness)
    return _verdict(search, search.run(), net)


def dp_layer(net: Network, sigma_l: DecisionPattern, post: Postcondition,
             budget: Budget | None = None, region: Region | None = None, **kw) -> Verdict:
    """``dp`` for a pattern over a single layer; all other neurons are branched on."""
    if len(sigma_l.layers()) > 1:
        raise ValueError("layer pattern spans several layers")
    return dp(net, Query(sigma_l, post, region or Region()), budget, **kw)


def dp_implies_pattern(net: Network, region: Region, sigma: DecisionPattern,
                       budget: Budget | None = None, eps: float = _lp.EPS) -> Verdict:
    """Decide ``region => sigma`` by refuting each flipped neuron in turn.

    The j-th disjunct keeps the neurons of ``sigma`` that precede ``N_j`` and
    flips ``N_j``; together they cover the negation of ``sigma`` exactly.
    """
    budget = budget or Budget()
    sigma.validate(net)
    start = time.perf_counter()
    totals = {"nodes": 0, "lp_calls": 0, "near_misses": 0, "disjuncts": 0}
    items = list(sigma.items())
    for j, (nid, phase) in enumerate(items):
        sub = DecisionPattern(dict(items[:j]) | {nid: not phase})

        def validate(x, sub=sub):
            return region.contains(x) and _in_domain(net, x) and satisfies(net, sub, x)

        remaining = None
        if budget.timeout is not None:
            remaining = max(0.0, budget.timeout - (time.perf_counter() - start))
        search = _Search(net, region, sub, None, nid.layer,
                         Budget(budget.max_nodes - totals["nodes"], remaining), validate, eps)
        result = search.run()
        for k in ("nodes", "lp_calls", "near_misses"):
            totals[k] += search.stats()[k]
        totals["disjuncts"] += 1
        if result is not None:
            totals["wall_time"] = time.perf_counter() - start
            if isinstance(result, str):
                return Verdict(Status.TIMEOUT, stats=totals)
            x = np.asarray(result, dtype=float)
            totals["violated_neuron"] = [nid.layer, nid.index]
            return Verdict(Status.REFUTED, x, evaluate(net, x), totals)
    totals["wall_time"] = time.perf_counter() - start
    return Verdict(Status.PROVED, stats=totals)


def _in_domain(net: Network, x) -> bool:
    if net.input_domain is None:
        return True
    d = net.input_domain
    return bool(np.all(x >= d[:, 0] - REGION_TOL) and np.all(x <= d[:, 1] + REGION_TOL))
