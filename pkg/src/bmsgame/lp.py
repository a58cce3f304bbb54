"""Exact rational linear programming.

A dense two-phase tableau simplex over :class:`fractions.Fraction` with
Bland's anti-cycling rule.  Every outcome carries something checkable:
a feasible point, an optimal point with its value, a Farkas certificate
for infeasibility, or an improving ray for unboundedness.  See
:func:`check_outcome` for the re-substitution checks.

Programs are written as::

    maximize    c . x
    subject to  A_eq x == b_eq
                A_ub x <= b_ub
                x_j >= 0          for every j with nonneg[j]

Variables without the nonnegativity flag are free (split internally into
a nonnegative pair, positive part first).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

__all__ = [
    "LinearProgram",
    "Optimal",
    "Feasible",
    "Infeasible",
    "Unbounded",
    "LpError",
    "solve",
    "check_outcome",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class LpError(ValueError):
    """Malformed linear program (inconsistent dimensions)."""


def _frac_row(row) -> tuple:
    return tuple(Fraction(v) for v in row)


@dataclass(frozen=True)
class LinearProgram:
    n_vars: int
    objective: Optional[tuple] = None
    eq_rows: tuple = ()
    eq_rhs: tuple = ()
    ineq_rows: tuple = ()
    ineq_rhs: tuple = ()
    nonneg: tuple = ()

    @classmethod
    def build(cls, n_vars, objective=None, eq=((), ()), ineq=((), ()),
              nonneg=None):
        """Normalize plain sequences into a frozen program.

        ``nonneg`` may be a bool (applies to every variable), a sequence of
        bools, or None (all free).
        """
        if nonneg is None or nonneg is False:
            mask = (False,) * n_vars
        elif nonneg is True:
            mask = (True,) * n_vars
        else:
            mask = tuple(bool(f) for f in nonneg)
        lp = cls(
            n_vars=n_vars,
            objective=None if objective is None else _frac_row(objective),
            eq_rows=tuple(_frac_row(r) for r in eq[0]),
            eq_rhs=_frac_row(eq[1]),
            ineq_rows=tuple(_frac_row(r) for r in ineq[0]),
            ineq_rhs=_frac_row(ineq[1]),
            nonneg=mask,
        )
        lp.validate()
        return lp

    def validate(self):
        n = self.n_vars
        if n < 0:
            raise LpError("negative variable count")
        if len(self.nonneg) != n:
            raise LpError(f"nonneg mask has length {len(self.nonneg)}, expected {n}")
        if self.objective is not None and len(self.objective) != n:
            raise LpError("objective length does not match n_vars")
        if len(self.eq_rows) != len(self.eq_rhs):
            raise LpError("equality rows and rhs differ in length")
        if len(self.ineq_rows) != len(self.ineq_rhs):
            raise LpError("inequality rows and rhs differ in length")
        for row in self.eq_rows + self.ineq_rows:
            if len(row) != n:
                raise LpError(f"constraint row of length {len(row)}, expected {n}")


@dataclass(frozen=True)
class Optimal:
    point: tuple
    value: Fraction
    status: str = field(default="optimal", init=False)


@dataclass(frozen=True)
class Feasible:
    point: tuple
    status: str = field(default="feasible", init=False)


@dataclass(frozen=True)
class Infeasible:
    """Farkas certificate.

    ``eq_mult`` are free multipliers for the equality rows, ``ineq_mult`` are
    nonnegative multipliers for the inequality rows.  The combination
    ``y^T A`` vanishes on free variables, is nonnegative on nonnegative
    variables (the implicit rows ``-x_j <= 0`` absorb it), and ``y^T b < 0``.
    """
    eq_mult: tuple
    ineq_mult: tuple
    status: str = field(default="infeasible", init=False)


@dataclass(frozen=True)
class Unbounded:
    point: tuple
    ray: tuple
    status: str = field(default="unbounded", init=False)


class _Tableau:
    """Standard-form tableau ``T z == rhs, z >= 0`` with an explicit basis."""

    def __init__(self, rows, rhs, basis):
        self.rows = rows          # list of lists of Fraction
        self.rhs = rhs            # list of Fraction
        self.basis = basis        # basis[i] = column index basic in row i
        self.ncols = len(rows[0]) if rows else 0

    def pivot(self, r, c):
        prow = self.rows[r]
        piv = prow[c]
        if piv != _ONE:
            inv = _ONE / piv
            for j in range(self.ncols):
                if prow[j]:
                    prow[j] *= inv
            self.rhs[r] *= inv
        nz = [j for j in range(self.ncols) if prow[j]]
        prhs = self.rhs[r]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[c]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
                self.rhs[i] -= f * prhs
        self.basis[r] = c

    def reduced_costs(self, cost):
        rc = list(cost)
        obj = _ZERO
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in range(self.ncols):
                    if row[j]:
                        rc[j] -= cb * row[j]
                obj += cb * self.rhs[i]
        return rc, obj

    def run(self, cost, allowed):
        """Minimize ``cost . z`` with Bland's rule.

        Returns ("optimal", rc) or ("unbounded", entering column).
        """
        rc, _ = self.reduced_costs(cost)
        while True:
            enter = -1
            for j in range(self.ncols):
                if allowed[j] and rc[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return "optimal", rc
            leave = -1
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if (best is None or ratio < best
                            or (ratio == best and self.basis[i] < self.basis[leave])):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded", enter
            self.pivot(leave, enter)
            f = rc[enter]
            prow = self.rows[leave]
            for j in range(self.ncols):
                if prow[j]:
                    rc[j] -= f * prow[j]

    def values(self):
        z = [_ZERO] * self.ncols
        for i, b in enumerate(self.basis):
            z[b] = self.rhs[i]
        return z


def solve(lp: LinearProgram):
    """Solve ``lp`` exactly.

    Returns one of :class:`Optimal`, :class:`Feasible` (when there is no
    objective), :class:`Infeasible` or :class:`Unbounded`.  The result is a
    deterministic function of the program, including its row and column
    order.
    """
    lp.validate()
    n = lp.n_vars
    # column layout: structural (+ / - parts), slacks, artificials
    col_of = []
    ncols = 0
    for j in range(n):
        if lp.nonneg[j]:
            col_of.append((ncols, None))
            ncols += 1
        else:
            col_of.append((ncols, ncols + 1))
            ncols += 2
    n_struct = ncols
    m_eq = len(lp.eq_rows)
    m_ub = len(lp.ineq_rows)
    m = m_eq + m_ub
    slack_col = {}
    for i in range(m_ub):
        slack_col[m_eq + i] = ncols
        ncols += 1
    n_real = ncols

    raw_rows = list(lp.eq_rows) + list(lp.ineq_rows)
    raw_rhs = list(lp.eq_rhs) + list(lp.ineq_rhs)
    sign = []
    id_col = []
    needs_art = []
    for i in range(m):
        s = -1 if raw_rhs[i] < 0 else 1
        sign.append(s)
        if i in slack_col and s > 0:
            id_col.append(slack_col[i])
            needs_art.append(False)
        else:
            id_col.append(None)
            needs_art.append(True)
    for i in range(m):
        if needs_art[i]:
            id_col[i] = ncols
            ncols += 1

    rows = []
    rhs = []
    for i in range(m):
        s = sign[i]
        row = [_ZERO] * ncols
        for j, a in enumerate(raw_rows[i]):
            if a:
                p, q = col_of[j]
                row[p] = a if s > 0 else -a
                if q is not None:
                    row[q] = -row[p]
        if i in slack_col:
            row[slack_col[i]] = Fraction(s)
        if needs_art[i]:
            row[id_col[i]] = _ONE
        rows.append(row)
        rhs.append(raw_rhs[i] if s > 0 else -raw_rhs[i])

    tab = _Tableau(rows, rhs, list(id_col))
    is_art = [False] * n_real + [True] * (ncols - n_real)

    if any(needs_art):
        cost1 = [_ZERO] * n_real + [_ONE] * (ncols - n_real)
        _, rc = tab.run(cost1, [True] * ncols)
        _, w = tab.reduced_costs(cost1)
        if w > 0:
            # phase-1 duals: pi_i = c_id - rc_id; certificate y' = -pi
            eq_mult = []
            ineq_mult = []
            for i in range(m):
                pi = cost1[id_col[i]] - rc[id_col[i]]
                y = -pi * sign[i]
                (eq_mult if i < m_eq else ineq_mult).append(y)
            return Infeasible(tuple(eq_mult), tuple(ineq_mult))
        # drive zero-level artificials out of the basis
        for i in range(m):
            if is_art[tab.basis[i]]:
                row = tab.rows[i]
                for j in range(n_real):
                    if row[j]:
                        tab.pivot(i, j)
                        break
    allowed = [not a for a in is_art]

    def point_from(z):
        x = []
        for p, q in col_of:
            x.append(z[p] - (z[q] if q is not None else _ZERO))
        return tuple(x)

    if lp.objective is None:
        return Feasible(point_from(tab.values()))

    cost2 = [_ZERO] * ncols
    for j, c in enumerate(lp.objective):
        if c:
            p, q = col_of[j]
            cost2[p] = -c
            if q is not None:
                cost2[q] = c
    status, info = tab.run(cost2, allowed)
    z = tab.values()
    x = point_from(z)
    if status == "unbounded":
        dz = [_ZERO] * ncols
        dz[info] = _ONE
        for i, b in enumerate(tab.basis):
            dz[b] = -tab.rows[i][info]
        return Unbounded(x, point_from(dz))
    value = sum((c * v for c, v in zip(lp.objective, x)), _ZERO)
    return Optimal(x, value)


def _dot(a: Sequence, b: Sequence):
    return sum((u * v for u, v in zip(a, b)), _ZERO)


def is_feasible_point(lp: LinearProgram, x) -> bool:
    """Exact re-substitution of ``x`` into every constraint of ``lp``."""
    if len(x) != lp.n_vars:
        return False
    for row, b in zip(lp.eq_rows, lp.eq_rhs):
        if _dot(row, x) != b:
            return False
    for row, b in zip(lp.ineq_rows, lp.ineq_rhs):
        if _dot(row, x) > b:
            return False
    return all(v >= 0 for v, f in zip(x, lp.nonneg) if f)


def check_outcome(lp: LinearProgram, outcome) -> bool:
    """Re-verify the certificate carried by ``outcome`` against ``lp``."""
    if isinstance(outcome, (Optimal, Feasible)):
        if not is_feasible_point(lp, outcome.point):
            return False
        if isinstance(outcome, Optimal):
            return _dot(lp.objective, outcome.point) == outcome.value
        return True
    if isinstance(outcome, Infeasible):
        if len(outcome.eq_mult) != len(lp.eq_rows):
            return False
        if len(outcome.ineq_mult) != len(lp.ineq_rows):
            return False
        if any(y < 0 for y in outcome.ineq_mult):
            return False
        combo = [_ZERO] * lp.n_vars
        rhs = _ZERO
        for y, row, b in zip(outcome.eq_mult + outcome.ineq_mult,
                             lp.eq_rows + lp.ineq_rows,
                             lp.eq_rhs + lp.ineq_rhs):
            if y:
                for j, a in enumerate(row):
                    combo[j] += y * a
                rhs += y * b
        for j, c in enumerate(combo):
            if lp.nonneg[j]:
                if c < 0:
                    return False
            elif c != 0:
                return False
        return rhs < 0
    if isinstance(outcome, Unbounded):
        if lp.objective is None or not is_feasible_point(lp, outcome.point):
            return False
        r = outcome.ray
        if any(_dot(row, r) != 0 for row in lp.eq_rows):
            return False
        if any(_dot(row, r) > 0 for row in lp.ineq_rows):
            return False
        if any(v < 0 for v, f in zip(r, lp.nonneg) if f):
            return False
        return _dot(lp.objective, r) > 0
    return False
