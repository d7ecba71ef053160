"""Brute-force reference decisions for desk-scale networks.

Enumerates every total phase assignment, builds the region of each one with
:func:`relupat.affine.propagate`, and checks each negated-postcondition
disjunct with SciPy's HiGHS LP solver. Independent of the branch-and-bound
search and of the in-house simplex.
"""

from __future__ import annotations

import itertools
import time

import numpy as np
from scipy.optimize import linprog

from .affine import propagate
from .lp import EPS, strict_margin
from .model import Network, NeuronId, evaluate, random_network
from .pattern import DecisionPattern, satisfies
from .postcondition import Postcondition
from .verify import Budget, Query, Region, Status, dp

MAX_NEURONS = 12


class TooLargeError(ValueError):
    pass


def _linprog_point(n, rows, box, eps=EPS):
    A, b = [], []
    for a, rel, r in rows:
        a = np.asarray(a, dtype=float)
        if rel == "<":
            rel, r = "<=", r - strict_margin(r, eps)
        elif rel == ">":
            rel, r = ">=", r + strict_margin(r, eps)
        if rel == "<=":
            A.append(a), b.append(r)
        elif rel == ">=":
            A.append(-a), b.append(-r)
        else:
            A.append(a), b.append(r)
            A.append(-a), b.append(-r)
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in box]
    if any(lo is not None and hi is not None and lo > hi for lo, hi in bounds):
        return None
    res = linprog(np.zeros(n), A_ub=np.array(A) if A else None, b_ub=np.array(b) if b else None,
                  bounds=bounds, method="highs")
    return res.x if res.status == 0 else None


def phase_assignments(net: Network, pattern: DecisionPattern):
    """All total patterns extending ``pattern``."""
    free = [nid for nid in net.neurons() if nid not in pattern]
    for bits in itertools.product((True, False), repeat=len(free)):
        yield pattern.union(dict(zip(free, bits)))


def enumerate_dp(net: Network, pattern: DecisionPattern, post: Postcondition,
                 region: Region | None = None, eps=EPS):
    """Return ``(status, witness)``; ``witness`` is an LP point for refutations."""
    if sum(net.widths) > MAX_NEURONS:
        raise TooLargeError(f"network has {sum(net.widths)} hidden neurons; limit is {MAX_NEURONS}")
    region = region or Region()
    box = region.combined_box(net)
    n = net.input_dim
    for full in phase_assignments(net, pattern):
        prop = propagate(net, full)
        rows = list(region.constraints)
        for nid, form in prop.forms.items():
            rows.append((form.w, ">" if full[nid] else "<=", -form.b))
        for a, rel, r in post.negation(net.output_dim):
            c, const = a @ prop.output_w, float(a @ prop.output_b)
            x = _linprog_point(n, rows + [(c, rel, r - const)], box, eps)
            if x is not None:
                return Status.REFUTED, x
    return Status.PROVED, None


def grid_counterexample(net: Network, pattern: DecisionPattern, post: Postcondition,
                        box, steps: int = 81):
    """A grid point of ``box`` that satisfies ``pattern`` and violates ``post``."""
    box = np.asarray(box, dtype=float)
    axes = [np.linspace(lo, hi, steps) for lo, hi in box]
    pts = np.array(list(itertools.product(*axes)))
    from .pattern import satisfies_batch
    mask = satisfies_batch(net, pattern, pts)
    if not mask.any():
        return None
    bad = ~post.holds(evaluate(net, pts[mask]))
    if not bad.any():
        return None
    return pts[mask][np.argmax(bad)]


def random_query(net: Network, rng, drop: float = 0.5):
    """Pattern from a random input's signature with some neurons unconstrained."""
    from .model import activation_signature
    n = net.input_dim
    lo, hi = (net.input_domain[:, 0], net.input_domain[:, 1]) if net.input_domain is not None \
        else (-np.ones(n), np.ones(n))
    x = lo + rng.random(n) * (hi - lo)
    sig = activation_signature(net, x)
    keep = {nid: s for nid, s in sig.items() if rng.random() > drop}
    c = int(rng.integers(net.output_dim)) if rng.random() < 0.3 else \
        int(np.argmax(evaluate(net, x)))
    return DecisionPattern(keep), Postcondition.prediction(c)


def oracle_check(net: Network | None = None, seed: int = 42, trials: int = 100,
                 budget: Budget | None = None) -> dict:
    """Compare ``dp`` against phase enumeration on random queries."""
    rng = np.random.default_rng(seed)
    if net is not None and sum(net.widths) > MAX_NEURONS:
        raise TooLargeError(f"network has {sum(net.widths)} hidden neurons; limit is {MAX_NEURONS}")
    agree, cex_ok, records = 0, 0, []
    start = time.perf_counter()
    for t in range(trials):
        cur = net
        if cur is None:
            n = int(rng.integers(1, 4))
            widths = [n] + [int(rng.integers(1, 5)) for _ in range(int(rng.integers(1, 4)))] + [2]
            cur = random_network(widths, rng, domain=np.tile([-2.0, 2.0], (n, 1)))
        sigma, post = random_query(cur, rng)
        v = dp(cur, Query(sigma, post), budget)
        o, ox = enumerate_dp(cur, sigma, post)
        same = v.status == o
        agree += same
        if v.refuted:
            ok = satisfies(cur, sigma, v.counterexample) and not post.holds(v.output)
            cex_ok += ok
        records.append({"trial": t, "dp": v.status.value, "oracle": o.value, "agree": bool(same)})
    refuted = sum(r["dp"] == "refuted" for r in records)
    return {"trials": trials, "agreement": agree / trials if trials else 1.0,
            "agreed": agree, "refuted": refuted, "counterexamples_valid": cex_ok,
            "seed": seed, "records": records, "wall_time": time.perf_counter() - start}
