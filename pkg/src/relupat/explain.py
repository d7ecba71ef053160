"""Readable renderings of properties: under-approximation boxes and minimal assignments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affine import polytope_of
from .lp import Box, EmptyBox, max_box
from .model import Network
from .pattern import DecisionPattern, is_closed, satisfies_batch
from .verify import Budget, Region, Status, dp_implies_pattern

ACASXU_ATTRIBUTES = ("range", "θ", "ψ", "v_own", "v_int")

__all__ = ["Box", "EmptyBox", "MinimalAssignment", "under_approx_box", "format_box",
           "minimal_assignment", "ACASXU_ATTRIBUTES"]


def seed_bounds(net: Network, support_inputs=None) -> np.ndarray:
    """Per-attribute min/max over the support, else the network's input domain."""
    if support_inputs is not None and len(support_inputs):
        X = np.atleast_2d(np.asarray(support_inputs, dtype=float))
        return np.column_stack([X.min(axis=0), X.max(axis=0)])
    if net.input_domain is None:
        raise ValueError("no support inputs and no input domain to seed the box")
    return net.input_domain.copy()


def under_approx_box(net: Network, sigma: DecisionPattern, support_inputs=None,
                     seed=None):
    """Widest box, within the seed bounds, all of whose points satisfy ``sigma``.

    Returns :class:`EmptyBox` when no box fits.
    """
    if not is_closed(net, sigma):
        raise ValueError("boxes are computed for closed patterns only")
    if seed is None:
        seed = seed_bounds(net, support_inputs)
    return max_box(polytope_of(net, sigma), seed)


def format_box(box, names=None, digits: int = 5) -> str:
    if getattr(box, "is_empty", False):
        return "empty box"
    names = names or [f"x{i}" for i in range(box.dim)]
    parts = []
    for name, lo, hi in zip(names, box.lo, box.hi):
        if np.isclose(lo, hi, rtol=0, atol=10 ** -digits):
            parts.append(f"{name} = {lo:.{digits}g}")
        else:
            parts.append(f"{lo:.{digits}g} ≤ {name} ≤ {hi:.{digits}g}")
    return ", ".join(parts)


def box_grid_csv(boxes, path):
    """Per-dimension min/mean/max of a list of boxes, one row per input dimension."""
    lo = np.array([b.lo for b in boxes])
    hi = np.array([b.hi for b in boxes])
    rows = np.column_stack([lo.min(axis=0), ((lo + hi) / 2).mean(axis=0), hi.max(axis=0)])
    np.savetxt(path, rows, delimiter=",", header="min,mean,max", comments="")


@dataclass
class MinimalAssignment:
    fixed: dict
    free: list
    partial: bool = False
    dp_calls: int = 0
    stats: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"fixed": {str(k): float(v) for k, v in sorted(self.fixed.items())},
                "free": sorted(int(i) for i in self.free), "partial": self.partial,
                "dp_calls": self.dp_calls}


def assignment_region(x, fixed_idx, domain) -> Region:
    """Fixed coordinates pinned to ``x``; the rest range over ``domain``."""
    box = np.array(domain, dtype=float, copy=True)
    for i in fixed_idx:
        box[i] = [x[i], x[i]]
    return Region(box)


def minimal_assignment(net: Network, sigma: DecisionPattern, x, budget: Budget | None = None,
                       domain=None) -> MinimalAssignment:
    """Greedily free input coordinates (ascending) while ``sigma`` stays implied."""
    x = np.asarray(x, dtype=float)
    if not satisfies_batch(net, sigma, x)[0]:
        raise ValueError("input does not satisfy the pattern")
    domain = net.input_domain if domain is None else np.asarray(domain, dtype=float)
    if domain is None:
        raise ValueError("minimal assignments need an input domain")
    fixed = list(range(net.input_dim))
    calls, partial = 0, False
    for i in range(net.input_dim):
        trial = [j for j in fixed if j != i]
        v = dp_implies_pattern(net, assignment_region(x, trial, domain), sigma, budget)
        calls += 1
        if v.status is Status.TIMEOUT:
            partial = True
            break
        if v.proved:
            fixed = trial
    free = [i for i in range(net.input_dim) if i not in fixed]
    return MinimalAssignment({i: float(x[i]) for i in fixed}, free, partial, calls)
