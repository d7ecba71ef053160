"""Dense two-phase simplex over mixed strict / non-strict constraint systems.

Strict relations are tightened by ``eps * max(1, |rhs|)`` before solving, so a
strict row ``a.x > r`` is enforced as ``a.x >= r + eps * max(1, |r|)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-6
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERIC_FAILURE = "numeric_failure"


@dataclass
class LinearProgram:
    """Maximize ``objective . x`` (or just find a point) subject to ``constraints``.

    Each constraint is ``(coeffs, rel, rhs)`` with ``rel`` one of
    ``<=, >=, =, <, >``. ``bounds`` is an optional ``(num_vars, 2)`` array,
    infinite entries allowed; variables are free by default.
    """

    num_vars: int
    constraints: list = field(default_factory=list)
    objective: np.ndarray | None = None
    bounds: np.ndarray | None = None

    def add(self, coeffs, rel, rhs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.num_vars,):
            raise ValueError(f"constraint has {coeffs.shape} coefficients, expected {self.num_vars}")
        if rel not in ("<=", ">=", "=", "<", ">"):
            raise ValueError(f"unknown relation {rel!r}")
        self.constraints.append((coeffs, rel, float(rhs)))
        return self


@dataclass
class LpOutcome:
    status: LpStatus
    value: float | None = None
    point: np.ndarray | None = None
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in (LpStatus.OPTIMAL, LpStatus.FEASIBLE, LpStatus.UNBOUNDED)


def strict_margin(rhs: float, eps: float = EPS) -> float:
    return eps * max(1.0, abs(rhs))


class _Tableau:
    def __init__(self, T, basis, pivot_tol, max_iter, bland_after):
        self.T = T
        self.basis = basis
        self.pivot_tol = pivot_tol
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.iterations = 0

    def pivot(self, r, c):
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0
        self.basis[r] = c

    def run(self, allowed) -> str:
        """Iterate until optimal; returns 'optimal', 'unbounded' or 'cap'."""
        T = self.T
        degenerate = 0
        bland = False
        cols = np.flatnonzero(allowed)
        while True:
            if self.iterations >= self.max_iter:
                return "cap"
            rc = T[-1, cols]
            neg = np.flatnonzero(rc < -self.pivot_tol)
            if len(neg) == 0:
                return "optimal"
            c = cols[neg[0]] if bland else cols[neg[np.argmin(rc[neg])]]
            col = T[:-1, c]
            rows = np.flatnonzero(col > self.pivot_tol)
            if len(rows) == 0:
                return "unbounded"
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = min(ties, key=lambda i: self.basis[i])
            if best <= 1e-12:
                degenerate += 1
                if degenerate >= self.bland_after:
                    bland = True
            else:
                degenerate = 0
            self.pivot(r, c)
            self.iterations += 1


def _standard_form(lp: LinearProgram, eps: float):
    """Rewrite with non-negative variables ``u``: ``x = M u + x0``."""
    n = lp.num_vars
    bounds = (np.tile([-np.inf, np.inf], (n, 1)) if lp.bounds is None
              else np.asarray(lp.bounds, dtype=float).reshape(n, 2))
    M_cols, x0 = [], np.zeros(n)
    extra = []  # (column, upper) for bounded-both-sides variables
    for j, (lo, hi) in enumerate(bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if lo > hi:
            return None
        if np.isfinite(lo):
            x0[j] = lo
            M_cols.append(e)
            if np.isfinite(hi):
                extra.append((len(M_cols) - 1, hi - lo))
        elif np.isfinite(hi):
            x0[j] = hi
            M_cols.append(-e)
        else:
            M_cols.append(e)
            M_cols.append(-e)
    M = np.array(M_cols).T if M_cols else np.zeros((n, 0))
    rows = []
    for coeffs, rel, rhs in lp.constraints:
        coeffs = np.asarray(coeffs, dtype=float)
        if rel == "<":
            rel, rhs = "<=", rhs - strict_margin(rhs, eps)
        elif rel == ">":
            rel, rhs = ">=", rhs + strict_margin(rhs, eps)
        rows.append((coeffs @ M, rel, rhs - coeffs @ x0))
    nu = M.shape[1]
    for k, ub in extra:
        e = np.zeros(nu)
        e[k] = 1.0
        rows.append((e, "<=", ub))
    return M, x0, rows


def solve(lp: LinearProgram, eps: float = EPS, pivot_tol: float = PIVOT_TOL) -> LpOutcome:
    """Solve ``lp`` with a two-phase tableau simplex."""
    sf = _standard_form(lp, eps)
    if sf is None:
        return LpOutcome(LpStatus.INFEASIBLE)
    M, x0, rows = sf
    nu = M.shape[1]

    # constant rows (all-zero coefficients) are decided directly
    kept = []
    for a, rel, r in rows:
        if not np.any(np.abs(a) > 0):
            ok = {"<=": 0 <= r + FEAS_TOL * 1e-3, ">=": 0 >= r - FEAS_TOL * 1e-3,
                  "=": abs(r) <= FEAS_TOL * 1e-3}[rel]
            if not ok:
                return LpOutcome(LpStatus.INFEASIBLE)
            continue
        scale = np.abs(a).max()
        a, r = a / scale, r / scale
        if r < 0:
            a, r = -a, -r
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        kept.append((a, rel, r))
    m = len(kept)
    n_slack = sum(1 for _, rel, _ in kept if rel != "=")
    n_art = sum(1 for _, rel, _ in kept if rel != "<=")
    ncols = nu + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    basis = [0] * m
    s = nu
    art = nu + n_slack
    art_cols = []
    for i, (a, rel, r) in enumerate(kept):
        T[i, :nu] = a
        T[i, -1] = r
        if rel == "<=":
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if rel == ">=":
                T[i, s] = -1.0
                s += 1
            T[i, art] = 1.0
            basis[i] = art
            art_cols.append(art)
            art += 1
    size = nu + m
    tab = _Tableau(T, basis, pivot_tol, 10 * size * size + 50, 2 * size)

    if art_cols:
        # phase 1: maximize -sum(artificials)
        art_rows = [i for i in range(m) if basis[i] >= nu + n_slack]
        T[-1] = -T[art_rows].sum(axis=0)
        T[-1, art_cols] = 0.0
        allowed = np.ones(ncols, dtype=bool)
        status = tab.run(allowed)
        if status == "cap":
            return LpOutcome(LpStatus.NUMERIC_FAILURE, iterations=tab.iterations)
        b_scale = max(1.0, np.abs(T[:-1, -1]).max() if m else 1.0)
        if T[-1, -1] < -1e-9 * b_scale:
            return LpOutcome(LpStatus.INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis
        is_art = np.zeros(ncols, dtype=bool)
        is_art[art_cols] = True
        drop = []
        for i in range(m):
            if is_art[tab.basis[i]]:
                cand = np.flatnonzero((np.abs(T[i, :ncols]) > pivot_tol) & ~is_art)
                if len(cand):
                    tab.pivot(i, cand[np.argmax(np.abs(T[i, cand]))])
                else:
                    drop.append(i)
        if drop:
            keep_rows = [i for i in range(m + 1) if i not in drop]
            tab.T = T = T[keep_rows]
            tab.basis = [b for i, b in enumerate(tab.basis) if i not in drop]
            m = len(tab.basis)
        keep_cols = [j for j in range(ncols + 1) if j == ncols or not is_art[j]]
        remap = {old: new for new, old in enumerate(keep_cols)}
        tab.T = T = T[:, keep_cols]
        tab.basis = [remap[b] for b in tab.basis]
        ncols = T.shape[1] - 1

    def extract():
        u = np.zeros(ncols)
        for i, b in enumerate(tab.basis):
            u[b] = tab.T[i, -1]
        return M @ u[:nu] + x0

    if lp.objective is None:
        x = extract()
        return _checked(lp, LpOutcome(LpStatus.FEASIBLE, None, x, tab.iterations), eps)

    c = np.zeros(ncols)
    c[:nu] = np.asarray(lp.objective, dtype=float) @ M
    T = tab.T
    T[-1] = 0.0
    T[-1, :ncols] = -c
    for i, b in enumerate(tab.basis):
        if c[b] != 0.0:
            T[-1] += c[b] * T[i]
    status = tab.run(np.ones(ncols, dtype=bool))
    if status == "cap":
        return LpOutcome(LpStatus.NUMERIC_FAILURE, iterations=tab.iterations)
    if status == "unbounded":
        return LpOutcome(LpStatus.UNBOUNDED, None, extract(), tab.iterations)
    x = extract()
    value = float(np.asarray(lp.objective) @ x)
    return _checked(lp, LpOutcome(LpStatus.OPTIMAL, value, x, tab.iterations), eps)


def violations(lp: LinearProgram, x, eps: float = EPS) -> list[int]:
    """Indices of constraints (then bounds) that ``x`` fails."""
    bad = []
    for k, (a, rel, r) in enumerate(lp.constraints):
        v = float(np.asarray(a) @ x)
        tol = FEAS_TOL * max(1.0, abs(r))
        ok = {"<=": v <= r + tol, ">=": v >= r - tol, "=": abs(v - r) <= tol,
              "<": v <= r - strict_margin(r, eps) / 2, ">": v >= r + strict_margin(r, eps) / 2}[rel]
        if not ok:
            bad.append(k)
    if lp.bounds is not None:
        b = np.asarray(lp.bounds, dtype=float).reshape(-1, 2)
        for j in range(lp.num_vars):
            tol = FEAS_TOL * max(1.0, abs(x[j]))
            if x[j] < b[j, 0] - tol or x[j] > b[j, 1] + tol:
                bad.append(len(lp.constraints) + j)
    return bad


def _checked(lp, out: LpOutcome, eps) -> LpOutcome:
    if lp.bounds is not None:
        b = np.asarray(lp.bounds, dtype=float).reshape(-1, 2)
        out.point = np.clip(out.point, b[:, 0], b[:, 1])
    if violations(lp, out.point, eps):
        return LpOutcome(LpStatus.NUMERIC_FAILURE, out.value, out.point, out.iterations)
    return out


def feasible_point(num_vars, constraints, bounds=None, eps: float = EPS):
    """A point satisfying ``constraints`` or ``None`` when infeasible."""
    out = solve(LinearProgram(num_vars, list(constraints), None, bounds), eps)
    if out.status == LpStatus.NUMERIC_FAILURE:
        raise ArithmeticError("simplex failed to converge")
    return out.point if out.feasible else None


# ---------------------------------------------------------------------------
# boxes


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_i, hi_i]``."""

    lo: np.ndarray
    hi: np.ndarray

    is_empty = False

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def sample(self, rng, k: int) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return self.lo + rng.random((k, self.dim)) * (self.hi - self.lo)

    def as_bounds(self) -> np.ndarray:
        return np.column_stack([self.lo, self.hi])

    def to_json(self) -> list:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]

    @classmethod
    def from_bounds(cls, bounds) -> "Box":
        b = np.asarray(bounds, dtype=float).reshape(-1, 2)
        return cls(b[:, 0].copy(), b[:, 1].copy())


@dataclass(frozen=True)
class EmptyBox:
    """No box (not even a degenerate one) fits the region."""

    reason: str = "infeasible"
    is_empty = True

    def to_json(self):
        return None


def max_box(poly, seed_bounds, eps: float = EPS):
    """Widest box inside ``seed_bounds`` all of whose points satisfy ``poly``.

    Variables are ``lo_i, hi_i``; every halfspace is required at its worst
    corner of the box (``hi`` where the coefficient is positive for upper
    bounds, ``lo`` where it is negative, mirrored for lower bounds), and
    ``sum(hi - lo)`` is maximized.
    """
    seed = np.asarray(seed_bounds, dtype=float).reshape(-1, 2)
    n = seed.shape[0]
    if n != poly.dim:
        raise ValueError("seed bounds and polytope dimensions differ")
    if not np.all(np.isfinite(seed)):
        raise ValueError("seed bounds must be finite")
    if poly.box is not None:
        seed = np.column_stack([np.maximum(seed[:, 0], poly.box[:, 0]),
                                np.minimum(seed[:, 1], poly.box[:, 1])])
    if np.any(seed[:, 0] > seed[:, 1]):
        return EmptyBox("seed bounds do not meet the input domain")
    lp = LinearProgram(2 * n, bounds=np.vstack([seed, seed]),
                       objective=np.concatenate([-np.ones(n), np.ones(n)]))
    for i in range(n):
        e = np.zeros(2 * n)
        e[i], e[n + i] = 1.0, -1.0
        lp.add(e, "<=", 0.0)
    for a, rel, r in poly.constraints():
        a = np.asarray(a, dtype=float)
        pos, neg = np.maximum(a, 0.0), np.minimum(a, 0.0)
        if rel in ("<=", "<"):
            coeffs = np.concatenate([neg, pos])   # maximum of a.x over the box
        else:
            coeffs = np.concatenate([pos, neg])   # minimum of a.x over the box
        lp.add(coeffs, rel, r)
    out = solve(lp, eps)
    if out.status in (LpStatus.INFEASIBLE,):
        return EmptyBox()
    if out.status != LpStatus.OPTIMAL:
        raise ArithmeticError(f"box LP ended with status {out.status.value}")
    lo, hi = out.point[:n], out.point[n:]
    hi = np.maximum(hi, lo)
    return Box(lo.copy(), hi.copy())
