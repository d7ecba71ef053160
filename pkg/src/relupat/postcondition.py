"""Convex output predicates and their negations."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

RELATIONS = ("<=", "<", "=", ">=", ">")
_NEGATE = {"<=": (">",), "<": (">=",), "=": ("<", ">")}
EQ_TOL = 1e-9


@dataclass(frozen=True)
class Postcondition:
    """Either a prediction predicate or a conjunction of linear output rows.

    A prediction for class ``c`` holds when ``y[c]`` is strictly the largest
    output (``mode="argmax"``) or strictly the smallest (``mode="argmin"``).
    Linear rows are ``(coeffs, rel, rhs)`` with ``rel`` in ``<=``, ``<``, ``=``.
    """

    kind: str
    cls: int | None = None
    mode: str = "argmax"
    rows: tuple = ()

    @classmethod
    def prediction(cls, c: int, mode: str = "argmax") -> "Postcondition":
        if mode not in ("argmax", "argmin"):
            raise ValueError(f"unknown prediction mode {mode!r}")
        return cls("prediction", int(c), mode)

    @classmethod
    def linear(cls, rows) -> "Postcondition":
        out = []
        for coeffs, rel, rhs in rows:
            if rel not in _NEGATE:
                raise ValueError(f"relation {rel!r} is not allowed in a convex postcondition")
            out.append((tuple(float(v) for v in coeffs), rel, float(rhs)))
        return cls("linear", rows=tuple(out))

    def check_dim(self, m: int):
        if self.kind == "prediction":
            if not 0 <= self.cls < m:
                raise ValueError(f"class {self.cls} out of range for {m} outputs")
        else:
            for coeffs, _, _ in self.rows:
                if len(coeffs) != m:
                    raise ValueError(f"postcondition row has {len(coeffs)} coefficients, expected {m}")

    def holds(self, y) -> np.ndarray | bool:
        """Concrete check on one output vector or a batch of rows."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        y = np.atleast_2d(y)
        if self.kind == "prediction":
            target = y[:, [self.cls]]
            others = np.delete(y, self.cls, axis=1)
            if self.mode == "argmax":
                ok = np.all(target > others, axis=1)
            else:
                ok = np.all(target < others, axis=1)
        else:
            ok = np.ones(len(y), dtype=bool)
            for coeffs, rel, rhs in self.rows:
                v = y @ np.asarray(coeffs)
                if rel == "<=":
                    ok &= v <= rhs
                elif rel == "<":
                    ok &= v < rhs
                else:
                    ok &= np.abs(v - rhs) <= EQ_TOL
        return bool(ok[0]) if single else ok

    def negation(self, m: int) -> list[tuple[np.ndarray, str, float]]:
        """Disjuncts of the negated predicate, each a single row ``a.y rel r``."""
        self.check_dim(m)
        out = []
        if self.kind == "prediction":
            for c in range(m):
                if c == self.cls:
                    continue
                a = np.zeros(m)
                a[c], a[self.cls] = 1.0, -1.0
                if self.mode == "argmin":
                    a = -a
                out.append((a, ">=", 0.0))
        else:
            for coeffs, rel, rhs in self.rows:
                for neg in _NEGATE[rel]:
                    out.append((np.asarray(coeffs, dtype=float), neg, rhs))
        return out

    def to_dict(self) -> dict:
        if self.kind == "prediction":
            return {"kind": "prediction", "class": self.cls, "mode": self.mode}
        return {"kind": "linear",
                "rows": [{"coeffs": list(c), "rel": r, "rhs": b} for c, r, b in self.rows]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Postcondition":
        if doc.get("kind") == "prediction":
            return cls.prediction(doc["class"], doc.get("mode", "argmax"))
        if doc.get("kind") == "linear":
            return cls.linear((r["coeffs"], r["rel"], r["rhs"]) for r in doc["rows"])
        raise ValueError(f"unknown postcondition kind {doc.get('kind')!r}")

    def describe(self) -> str:
        if self.kind == "prediction":
            return f"class:{self.cls}" + (":argmin" if self.mode == "argmin" else "")
        return " and ".join(f"{list(c)}.y {r} {b}" for c, r, b in self.rows)


def parse_post(text: str) -> Postcondition:
    """Parse ``class:<c>[:argmin]`` or ``lin:<file.json>``."""
    head, _, rest = text.partition(":")
    if head == "class":
        c, _, mode = rest.partition(":")
        return Postcondition.prediction(int(c), mode or "argmax")
    if head == "lin":
        with open(rest, encoding="utf-8") as f:
            doc = json.load(f)
        if isinstance(doc, list):
            doc = {"kind": "linear", "rows": doc}
        return Postcondition.from_dict(doc)
    raise ValueError(f"cannot parse postcondition {text!r}")
