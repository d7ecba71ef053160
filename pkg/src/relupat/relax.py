"""Iterative relaxation of an activation signature into a minimal input property."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Network, activation_signature, evaluate
from .pattern import DecisionPattern
from .postcondition import Postcondition
from .verify import Budget, Query, Status, dp


@dataclass
class InputProperty:
    """A closed pattern that implies ``post`` when ``proved``.

    When the signature itself does not imply ``post`` the property is the
    signature conjoined with ``post`` on its affine output, and ``proved`` is
    False. ``partial`` marks a run cut short by the budget.
    """

    pattern: DecisionPattern
    post: Postcondition
    proved: bool
    critical_layer: int | None
    dp_calls: int
    partial: bool = False
    conjoin_post: bool = False

    def to_dict(self) -> dict:
        return {"pattern": self.pattern.to_json(), "post": self.post.to_dict(),
                "proved": self.proved, "critical_layer": self.critical_layer,
                "dp_calls": self.dp_calls, "partial": self.partial,
                "conjoin_post": self.conjoin_post}


def infer_input_property(net: Network, x, post: Postcondition,
                         budget: Budget | None = None) -> InputProperty:
    x = np.asarray(x, dtype=float)
    if not post.holds(evaluate(net, x)):
        raise ValueError("the input does not satisfy the postcondition")
    calls = 0

    def implies(sigma):
        nonlocal calls
        calls += 1
        v = dp(net, Query(sigma, post), budget, witness=x)
        if v.status is Status.TIMEOUT:
            raise _Aborted
        return v.proved

    sigma = activation_signature(net, x)
    try:
        if not implies(sigma):
            return InputProperty(sigma, post, False, None, calls, conjoin_post=True)
        for l in range(net.num_hidden, 0, -1):
            relaxed = sigma.without_layer(l)
            if implies(relaxed):
                sigma = relaxed
                continue
            # critical layer: keep it, then drop its neurons one at a time
            for nid in net.neurons(l):
                candidate = sigma.without([nid])
                if implies(candidate):
                    sigma = candidate
            return InputProperty(sigma, post, True, l, calls)
        return InputProperty(sigma, post, True, None, calls)
    except _Aborted:
        return InputProperty(sigma, post, False, None, calls, partial=True)


class _Aborted(Exception):
    pass


def dp_call_count_bound(net: Network, result: InputProperty) -> bool:
    """Check the call count against hidden layers + widest layer + 1."""
    return result.dp_calls <= net.num_hidden + max(net.widths) + 1
