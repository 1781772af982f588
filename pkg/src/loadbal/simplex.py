"""Exact rational LP core: two-phase primal simplex on an integer tableau.

The working matrix ``M`` holds Python ints; the true tableau is ``M / q``
for a single positive denominator ``q``.  A pivot on (r, c) updates every
other row i as

    M'[i][j] = (M[i][j] * M[r][c] - M[i][c] * M[r][j]) // q

(the division is exact: tableau entries are quotients of basis minors),
leaves row r unchanged, and sets q' = M[r][c].  Pivot elements are always
positive, so q > 0 throughout and all sign tests read directly off M.

Pivot rule: Dantzig (most negative reduced cost, lowest index on ties) with
an automatic switch to Bland's rule after a run of degenerate pivots; the
leaving row always breaks ratio ties by the smallest basis variable.  Fully
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

LE = "<="
GE = ">="
EQ = "=="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"

# Consecutive degenerate pivots tolerated before switching to Bland's rule.
_STALL_LIMIT = 64


@dataclass
class LpResult:
    status: str
    objective: Fraction | None
    values: list[Fraction] | None


class _Tableau:
    def __init__(
        self,
        num_vars: int,
        objective: Mapping[int, Fraction],
        rows: Sequence[tuple[Mapping[int, Fraction], str, Fraction]],
    ):
        self.num_vars = num_vars
        nrows = len(rows)
        num_slack = sum(1 for _, sense, _ in rows if sense != EQ)
        first_slack = num_vars
        self.first_art = num_vars + num_slack

        int_rows: list[list[int]] = []
        art_rows: list[int] = []
        basis: list[int] = []
        slack_at = first_slack
        art_cols: list[int] = []

        for coeffs, sense, rhs in rows:
            scale = lcm(
                rhs.denominator, *(c.denominator for c in coeffs.values())
            ) if coeffs else rhs.denominator
            row = [0] * self.first_art
            for j, c in coeffs.items():
                row[j] = int(c * scale)
            b = int(rhs * scale)
            if sense == LE:
                row[slack_at] = 1
                slack = slack_at
                slack_at += 1
            elif sense == GE:
                row[slack_at] = -1
                slack = slack_at
                slack_at += 1
            else:
                slack = -1
            if b < 0:
                row = [-v for v in row]
                b = -b
            if slack >= 0 and row[slack] == 1:
                basis.append(slack)
                art_rows.append(-1)
            else:
                basis.append(-1)  # artificial, column assigned below
                art_rows.append(len(int_rows))
            row.append(b)
            int_rows.append(row)

        num_art = sum(1 for r in art_rows if r >= 0)
        total = self.first_art + num_art
        self.rhs_at = total
        art_at = self.first_art
        for i, flag in enumerate(art_rows):
            row = int_rows[i]
            row[-1:-1] = [0] * num_art  # widen with artificial block
            if flag >= 0:
                row[art_at] = 1
                basis[i] = art_at
                art_cols.append(art_at)
                art_at += 1

        self.M = int_rows
        self.nrows = nrows
        self.basis = basis
        self.q = 1
        self.dead: set[int] = set()
        self.art_cols = set(art_cols)

        obj_scale = lcm(*(c.denominator for c in objective.values())) if objective else 1
        cost2 = [0] * (total + 1)
        for j, c in objective.items():
            cost2[j] = int(c * obj_scale)
        self.obj_scale = obj_scale
        self.M.append(cost2)
        self.cost2_at = nrows

        if num_art:
            cost1 = [0] * (total + 1)
            for i, flag in enumerate(art_rows):
                if flag >= 0:
                    row = int_rows[i]
                    for j in range(total + 1):
                        cost1[j] -= row[j]
            for col in art_cols:
                cost1[col] = 0
            self.M.append(cost1)
            self.cost1_at = nrows + 1
        else:
            self.cost1_at = None

    # -- pivoting ----------------------------------------------------------

    def _pivot(self, r: int, c: int) -> None:
        M = self.M
        q = self.q
        prow = M[r]
        p = prow[c]
        for i in range(len(M)):
            if i == r:
                continue
            row = M[i]
            f = row[c]
            if f:
                M[i] = [
                    (x * p - f * y) // q if x or y else 0
                    for x, y in zip(row, prow)
                ]
            elif p != q:
                M[i] = [x * p // q if x else 0 for x in row]
        self.q = p
        self.basis[r] = c

    def _entering(self, crow: int, banned: set[int], bland: bool) -> int | None:
        row = self.M[crow]
        best = None
        best_val = 0
        for j in range(self.rhs_at):
            v = row[j]
            if v < 0 and j not in banned:
                if bland:
                    return j
                if v < best_val:
                    best, best_val = j, v
        return best

    def _leaving(self, c: int, bland: bool) -> int | None:
        # Ratio ties: prefer a pivot equal to q (the update then leaves
        # untouched rows alone); under Bland's rule the smallest basis
        # variable wins unconditionally (anti-cycling).
        best = None
        best_b = best_a = 0
        for i in range(self.nrows):
            row = self.M[i]
            a = row[c]
            if a > 0:
                b = row[-1]
                if best is None:
                    best, best_b, best_a = i, b, a
                    continue
                d = b * best_a - best_b * a
                if d < 0:
                    best, best_b, best_a = i, b, a
                elif d == 0:
                    if bland:
                        take = self.basis[i] < self.basis[best]
                    else:
                        take = (a == self.q) > (best_a == self.q) or (
                            (a == self.q) == (best_a == self.q)
                            and self.basis[i] < self.basis[best]
                        )
                    if take:
                        best, best_b, best_a = i, b, a
        return best

    def _optimize(self, crow: int, banned: set[int]) -> str:
        stall = 0
        bland = False
        last = (self.M[crow][-1], self.q)
        while True:
            c = self._entering(crow, banned, bland)
            if c is None:
                return OPTIMAL
            r = self._leaving(c, bland)
            if r is None:
                return "unbounded"
            self._pivot(r, c)
            cur = (self.M[crow][-1], self.q)
            if cur[0] * last[1] == last[0] * cur[1]:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False
                last = cur

    # -- phases ------------------------------------------------------------

    def _phase1(self) -> bool:
        """Returns True when a feasible basis was found."""
        if self.cost1_at is None:
            return True
        banned = self.art_cols | self.dead
        status = self._optimize(self.cost1_at, banned)
        if status == "unbounded":  # cannot happen: phase-1 objective >= 0
            raise RuntimeError("phase-1 LP unbounded; internal error")
        if self.M[self.cost1_at][-1] != 0:
            return False
        self._evict_artificials()
        # drop the phase-1 cost row and the artificial columns
        del self.M[self.cost1_at]
        self.cost1_at = None
        first_art = self.first_art
        rhs = self.rhs_at
        for i in range(len(self.M)):
            row = self.M[i]
            self.M[i] = row[:first_art] + [row[rhs]]
        self.rhs_at = first_art
        self.art_cols = set()
        return True

    def _evict_artificials(self) -> None:
        """Pivot or eliminate rows whose basic variable is still artificial."""
        drop: list[int] = []
        for r in range(self.nrows):
            if self.basis[r] < self.first_art:
                continue
            row = self.M[r]
            piv = None
            for j in range(self.first_art):
                if row[j] > 0 and j not in self.dead:
                    piv = j
                    break
            if piv is not None:
                self._pivot(r, piv)
                continue
            # Row reads (negative coeffs) . x = 0 with x >= 0: those columns
            # are forced to zero; the row itself is then redundant.
            for j in range(self.first_art):
                if row[j] != 0:
                    self.dead.add(j)
            drop.append(r)
        for r in reversed(drop):
            del self.M[r]
            del self.basis[r]
            self.nrows -= 1
            if self.cost1_at is not None:
                self.cost1_at -= 1
            self.cost2_at -= 1

    def solve(self) -> LpResult:
        if not self._phase1():
            return LpResult(status=INFEASIBLE, objective=None, values=None)
        status = self._optimize(self.cost2_at, self.art_cols | self.dead)
        if status == "unbounded":
            raise RuntimeError(
                "LP unbounded; the model objective must be bounded below"
            )
        values = [Fraction(0)] * self.num_vars
        for r in range(self.nrows):
            col = self.basis[r]
            if col < self.num_vars:
                values[col] = Fraction(self.M[r][-1], self.q)
        objective = -Fraction(self.M[self.cost2_at][-1], self.q * self.obj_scale)
        return LpResult(status=OPTIMAL, objective=objective, values=values)


def solve_lp_arrays(
    num_vars: int,
    objective: Mapping[int, Fraction],
    rows: Sequence[tuple[Mapping[int, Fraction], str, Fraction]],
) -> LpResult:
    """Solve min objective . x subject to rows and x >= 0; exact optimum.

    The returned point is an optimal *basic* solution (a vertex), which is
    what the totally-unimodular integrality arguments downstream rely on.
    """
    for coeffs, sense, rhs in rows:
        if not coeffs:
            # trivial row: fail fast instead of manufacturing artificials
            ok = (rhs >= 0) if sense == LE else (rhs <= 0) if sense == GE else (rhs == 0)
            if not ok:
                return LpResult(status=INFEASIBLE, objective=None, values=None)
    rows = [(c, s, r) for c, s, r in rows if c]
    return _Tableau(num_vars, objective, rows).solve()
