"""Exact decision backends and the promise solver.

Three backends, all over exact arithmetic: GF(2) elimination on bit-packed
rows, integer linear feasibility by column reduction to a triangular system
(unimodular column operations, so solutions map back exactly), and rational
LP feasibility by a phase-one simplex with Bland's rule over Fractions.

The promise solver translates instances through the recipe the classifier
recognized.  Constraints whose variable tuple repeats a variable are routed
through explicit convex-combination columns in the LP backend, because a
single weight row is not exact under repetition.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import List, Optional, Tuple

from .classifier import (Complexity, UnsupportedTemplateError, classify,
                         sandwich, _point_absorbing)
from .structures import BoolRelation, Instance, StructureError, Template, check_instance_against


class InternalCheckError(RuntimeError):
    """A backend produced a witness that fails its own re-check."""


# ---------------------------------------------------------------------------
# GF(2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GF2System:
    """Rows are bit masks over n_vars variables; rhs holds the parity bits."""

    n_vars: int
    rows: tuple
    rhs: tuple

    def __post_init__(self):
        if len(self.rows) != len(self.rhs):
            raise StructureError("rows/rhs length mismatch")
        for mask in self.rows:
            if mask >> self.n_vars:
                raise StructureError("row mask uses variables out of range")


def solve_gf2(system: GF2System) -> Optional[List[int]]:
    """Gaussian elimination; pivots on the lowest set bit, free variables 0."""
    pivots = {}  # column -> (mask, bit)
    for mask, bit in zip(system.rows, system.rhs):
        for col, (pmask, pbit) in pivots.items():
            if (mask >> col) & 1:
                mask ^= pmask
                bit ^= pbit
        if mask == 0:
            if bit:
                return None
            continue
        col = (mask & -mask).bit_length() - 1
        pivots[col] = (mask, bit)
    x = [0] * system.n_vars
    for col in sorted(pivots, reverse=True):
        mask, bit = pivots[col]
        acc = bit
        rest = mask & ~(1 << col)
        while rest:
            j = (rest & -rest).bit_length() - 1
            acc ^= x[j]
            rest &= rest - 1
        x[col] = acc
    for mask, bit in zip(system.rows, system.rhs):
        acc = 0
        rest = mask
        while rest:
            j = (rest & -rest).bit_length() - 1
            acc ^= x[j]
            rest &= rest - 1
        if acc != bit:
            raise InternalCheckError("GF(2) solution fails re-check")
    return x


# ---------------------------------------------------------------------------
# integers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntLinearSystem:
    """A x = b over the integers, exact unbounded arithmetic."""

    n_vars: int
    rows: tuple  # tuple of coefficient tuples
    rhs: tuple

    def __post_init__(self):
        if len(self.rows) != len(self.rhs):
            raise StructureError("rows/rhs length mismatch")
        for row in self.rows:
            if len(row) != self.n_vars:
                raise StructureError("row width mismatch")


def solve_diophantine(system: IntLinearSystem) -> Optional[List[int]]:
    """Integer feasibility via column reduction to a triangular system.

    Columns of A are stacked over an identity block; unimodular column
    operations (Euclidean reduction within each row) bring A to a lower
    triangular form whose pivot equations are solved by exact division.
    Free columns are zero in every pivot row, so setting their multipliers
    to zero loses no solutions; skipped rows become consistency checks.
    """
    m, n = len(system.rows), system.n_vars
    work = [[system.rows[i][j] for i in range(m)] +
            [1 if k == j else 0 for k in range(n)] for j in range(n)]
    b = list(system.rhs)

    pivot_list = []  # (row, column position)
    col_idx = 0
    for row in range(m):
        if col_idx >= n:
            break
        active = [j for j in range(col_idx, n) if work[j][row] != 0]
        while len(active) > 1:
            jstar = min(active, key=lambda j: (abs(work[j][row]), j))
            pivot_val = work[jstar][row]
            for j in active:
                if j == jstar:
                    continue
                q = work[j][row] // pivot_val
                if q:
                    work[j] = [work[j][k] - q * work[jstar][k] for k in range(m + n)]
            active = [j for j in active if work[j][row] != 0]
        if not active:
            continue
        j = active[0]
        work[col_idx], work[j] = work[j], work[col_idx]
        if work[col_idx][row] < 0:
            work[col_idx] = [-v for v in work[col_idx]]
        pivot_list.append((row, col_idx))
        col_idx += 1

    y = [0] * n
    for row, j in pivot_list:
        acc = b[row] - sum(work[k][row] * y[k] for _, k in pivot_list if k < j)
        piv = work[j][row]
        if acc % piv != 0:
            return None
        y[j] = acc // piv
    # consistency of the skipped rows (and a full re-check of pivot rows)
    for i in range(m):
        if sum(work[j][i] * y[j] for j in range(n)) != b[i]:
            return None
    x = [sum(work[j][m + k] * y[j] for j in range(n)) for k in range(n)]
    for i in range(m):
        if sum(system.rows[i][k] * x[k] for k in range(n)) != b[i]:
            raise InternalCheckError("integer solution fails re-check")
    return x


# ---------------------------------------------------------------------------
# rational LP feasibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RationalInequalitySystem:
    """Rows (coeffs, sense, rhs) with sense in {'<=', '>=', '='}.

    Every variable carries the box bound lower <= x <= upper (default 0..1);
    coefficients are exact rationals.
    """

    n_vars: int
    rows: tuple
    lower: tuple = None
    upper: tuple = None

    def __post_init__(self):
        if self.lower is None:
            object.__setattr__(self, "lower", tuple([Fraction(0)] * self.n_vars))
        if self.upper is None:
            object.__setattr__(self, "upper", tuple([Fraction(1)] * self.n_vars))
        if len(self.lower) != self.n_vars or len(self.upper) != self.n_vars:
            raise StructureError("bounds length mismatch")
        for coeffs, sense, _ in self.rows:
            if len(coeffs) != self.n_vars:
                raise StructureError("row width mismatch")
            if sense not in ("<=", ">=", "="):
                raise StructureError(f"bad sense {sense!r}")


def solve_lp_feasible(system: RationalInequalitySystem) -> Optional[List[Fraction]]:
    """Phase-one simplex with Bland's rule, exact Fractions.

    Returns a feasible point or None.  Variables are shifted by their lower
    bounds; upper bounds become explicit rows.
    """
    n = system.n_vars
    rows = []
    for coeffs, sense, rhs in system.rows:
        shift = sum(Fraction(c) * lo for c, lo in zip(coeffs, system.lower))
        rows.append(([Fraction(c) for c in coeffs], sense, Fraction(rhs) - shift))
    for i in range(n):
        span = Fraction(system.upper[i]) - Fraction(system.lower[i])
        if span < 0:
            return None
        coeffs = [Fraction(0)] * n
        coeffs[i] = Fraction(1)
        rows.append((coeffs, "<=", span))

    m = len(rows)
    # columns: n structural, then one slack/surplus per inequality row,
    # then one artificial per row that needs it
    slack_col = {}
    ncols = n
    for i, (_, sense, _) in enumerate(rows):
        if sense in ("<=", ">="):
            slack_col[i] = ncols
            ncols += 1
    art_col = {}
    tableau = []
    basis = []
    for i, (coeffs, sense, rhs) in enumerate(rows):
        row = [Fraction(0)] * ncols
        for j, c in enumerate(coeffs):
            row[j] = Fraction(c)
        if sense == "<=":
            row[slack_col[i]] = Fraction(1)
        elif sense == ">=":
            row[slack_col[i]] = Fraction(-1)
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        row.append(Fraction(rhs))
        tableau.append(row)
        basis.append(None)
    # basic variable per row: its slack when usable, else an artificial
    extra = 0
    for i, (_, sense, _) in enumerate(rows):
        col = slack_col.get(i)
        if col is not None and tableau[i][col] == 1:
            basis[i] = col
        else:
            basis[i] = ncols + extra
            art_col[i] = ncols + extra
            extra += 1
    total = ncols + extra
    for i in range(m):
        pad = [Fraction(0)] * extra
        if i in art_col:
            pad[art_col[i] - ncols] = Fraction(1)
        tableau[i] = tableau[i][:-1] + pad + [tableau[i][-1]]

    # objective: minimize the sum of artificials; reduced-cost row
    z = [Fraction(0)] * (total + 1)
    for i in range(m):
        if i in art_col:
            for j in range(total + 1):
                z[j] += tableau[i][j]
    for i in range(m):
        if i in art_col:
            z[art_col[i]] -= Fraction(1)
        # artificial columns start basic with cost 1; their reduced cost is 0
    for i, bcol in enumerate(basis):
        if bcol >= ncols:
            z[bcol] = Fraction(0)

    while True:
        enter = None
        for j in range(total):
            if j not in basis and z[j] > 0:
                enter = j
                break
        if enter is None:
            break
        leave, ratio = None, None
        for i in range(m):
            a = tableau[i][enter]
            if a > 0:
                r = tableau[i][-1] / a
                if ratio is None or r < ratio or (r == ratio and basis[i] < basis[leave]):
                    leave, ratio = i, r
        if leave is None:
            raise InternalCheckError("phase-one objective unbounded")
        piv = tableau[leave][enter]
        tableau[leave] = [v / piv for v in tableau[leave]]
        for i in range(m):
            if i != leave and tableau[i][enter] != 0:
                f = tableau[i][enter]
                tableau[i] = [v - f * w for v, w in zip(tableau[i], tableau[leave])]
        f = z[enter]
        z = [v - f * w for v, w in zip(z, tableau[leave])]
        basis[leave] = enter

    if z[-1] != 0:
        return None
    point = [Fraction(0)] * total
    for i, bcol in enumerate(basis):
        point[bcol] = tableau[i][-1]
    x = [point[i] + Fraction(system.lower[i]) for i in range(n)]
    for coeffs, sense, rhs in system.rows:
        val = sum(Fraction(c) * xi for c, xi in zip(coeffs, x))
        ok = (val <= rhs if sense == "<=" else val >= rhs if sense == ">=" else val == rhs)
        if not ok:
            raise InternalCheckError("LP point fails re-check")
    for xi, lo, hi in zip(x, system.lower, system.upper):
        if not (lo <= xi <= hi):
            raise InternalCheckError("LP point violates its box")
    return x


# ---------------------------------------------------------------------------
# promise solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PromiseAnswer:
    yes: bool
    witness: Optional[object] = None

    @property
    def answer(self) -> str:
        return "Yes" if self.yes else "No"


def _collapse(tup) -> List[Tuple[int, int]]:
    """Distinct variables of a constraint tuple with their multiplicities."""
    mult = {}
    for v in tup:
        mult[v] = mult.get(v, 0) + 1
    return sorted(mult.items())


def _gf2_translate(t: Template, inst: Instance) -> GF2System:
    rows, rhs = [], []
    for ri, tup in inst.constraints:
        a, b = t.pairs[ri]
        if b.is_full():
            continue  # the relaxed side never blocks, so nothing to encode
        mask = 0
        for v in tup:
            mask ^= 1 << v
        if a.is_neq():
            parity = 1
        else:
            odd = all(w % 2 == 1 for w in a.weights)
            even = all(w % 2 == 0 for w in a.weights)
            if not (odd or even):
                raise UnsupportedTemplateError("parity backend needs parity relations")
            parity = 1 if odd else 0
        rows.append(mask)
        rhs.append(parity)
    return GF2System(inst.var_count, tuple(rows), tuple(rhs))


def _dio_translate(t: Template, inst: Instance) -> IntLinearSystem:
    rows, rhs = [], []
    for ri, tup in inst.constraints:
        a, _ = t.pairs[ri]
        coeffs = [0] * inst.var_count
        for v in tup:
            coeffs[v] += 1
        if a.is_neq():
            target = 1
        elif len(a.weights) == 1:
            (target,) = a.weights
        else:
            raise UnsupportedTemplateError("integer backend needs exact-weight relations")
        rows.append(tuple(coeffs))
        rhs.append(target)
    return IntLinearSystem(inst.var_count, tuple(rows), tuple(rhs))


def _weight_sense(a: BoolRelation):
    s, w = a.arity, set(a.weights)
    if a.is_neq():
        return "=", 1
    if len(w) == 1:
        return "=", next(iter(w))
    if w == set(range(0, max(w) + 1)):
        return "<=", max(w)
    if w == set(range(min(w), s + 1)):
        return ">=", min(w)
    raise UnsupportedTemplateError("LP backend needs interval weight relations")


def _lp_translate(t: Template, inst: Instance) -> RationalInequalitySystem:
    nx = inst.var_count
    rows = []
    extra_cols = []  # (point vectors, distinct vars) per repeated constraint
    for ri, tup in inst.constraints:
        a, _ = t.pairs[ri]
        groups = _collapse(tup)
        if len(groups) == len(tup):
            sense, bound = _weight_sense(a)
            coeffs = [0] * nx
            for v in tup:
                coeffs[v] += 1
            rows.append((coeffs, sense, bound))
        else:
            # repetition: the single weight row is not exact, so model the
            # constraint as a convex combination of its projected points
            variables = [v for v, _ in groups]
            mults = [mlt for _, mlt in groups]
            points = []
            for bits in product((0, 1), repeat=len(variables)):
                expanded = {v: bit for v, bit in zip(variables, bits)}
                if a.contains(tuple(expanded[v] for v in tup)):
                    points.append(bits)
            extra_cols.append((points, variables))

    base = nx
    total = nx + sum(len(points) for points, _ in extra_cols)
    wide_rows = [(list(coeffs) + [0] * (total - nx), sense, Fraction(rhs))
                 for coeffs, sense, rhs in rows]
    lower = [Fraction(0)] * total
    upper = [Fraction(1)] * total
    for points, variables in extra_cols:
        k = len(points)
        conv = [0] * total
        for j in range(k):
            conv[base + j] = 1
        wide_rows.append((conv, "=", Fraction(1)))
        for pos, v in enumerate(variables):
            marg = [0] * total
            marg[v] = -1
            for j, bits in enumerate(points):
                marg[base + j] = bits[pos]
            wide_rows.append((marg, "=", Fraction(0)))
        base += k
    return RationalInequalitySystem(total, tuple((tuple(c), s, r) for c, s, r in wide_rows),
                                    tuple(lower), tuple(upper))


def _check_dio_witness(t: Template, inst: Instance, point: List[int]) -> None:
    bits = [1 if z >= 1 else 0 for z in point]
    for ri, tup in inst.constraints:
        _, b = t.pairs[ri]
        if not b.contains(tuple(bits[v] for v in tup)):
            raise InternalCheckError("rounded integer witness leaves the B side")


def _neq_components(t: Template, inst: Instance):
    """2-color the disequality graph.

    Returns (component id per var, color per var) or None when some odd
    cycle (or self-loop) makes the B side unsatisfiable outright.
    """
    n = inst.var_count
    adj = [[] for _ in range(n)]
    for ri, tup in inst.constraints:
        if t.pairs[ri][0].is_neq():
            u, v = tup
            if u == v:
                return None
            adj[u].append(v)
            adj[v].append(u)
    comp = [-1] * n
    color = [0] * n
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = start
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if comp[w] < 0:
                    comp[w] = start
                    color[w] = color[u] ^ 1
                    stack.append(w)
                elif color[w] == color[u]:
                    return None
    return comp, color


MAX_ORIENTATION_SEARCH = 1 << 20


def _solve_majority_path(t: Template, inst: Instance, polarity: bool) -> PromiseAnswer:
    """Decision for the at-most/at-least majority shapes and their exact
    relaxations.

    LP feasibility alone is not promise-sound here: a fractional point can
    sit on an odd disequality cycle, or leave a tuple of 2r half-valued
    entries that every rounding sends to 2r ones.  Bipartiteness of the
    disequality graph plus a search over per-component roundings of the
    half-valued variables closes exactly those gaps:

    * any A-side solution yields a bipartite graph, an LP point, and an
      orientation (its own), so No answers stay sound;
    * conversely threshold-rounding a feasible point with a clause-respecting
      orientation lands every tuple at 2r-1 ones or fewer, so Yes answers
      produce a genuine B-side witness (re-checked before returning).
    """
    t_work = t.swap01() if polarity else t
    two_color = _neq_components(t_work, inst)
    if two_color is None:
        return PromiseAnswer(False)
    comp, color = two_color
    point = solve_lp_feasible(_lp_translate(t_work, inst))
    if point is None:
        return PromiseAnswer(False)
    x = point[:inst.var_count]
    half = Fraction(1, 2)

    clauses = []
    for ri, tup in inst.constraints:
        a, _ = t_work.pairs[ri]
        if a.is_neq():
            continue
        r = max(a.weights)
        g = sum(1 for v in tup if x[v] > half)
        halves = [v for v in tup if x[v] == half]
        if g == 0 and len(halves) == 2 * r:
            # forbid the orientation that rounds every half here to one
            pinned = {}
            consistent = True
            for v in halves:
                want = 1 ^ color[v]  # orientation value making v round to 1
                if pinned.setdefault(comp[v], want) != want:
                    consistent = False
                    break
            if consistent:
                clauses.append(pinned)

    involved = sorted({c for cl in clauses for c in cl})
    if 2 ** len(involved) > MAX_ORIENTATION_SEARCH:
        raise UnsupportedTemplateError("half-component orientation search too large")
    orientation = {}
    found = False
    for bits in range(1 << len(involved)):
        trial = {c: (bits >> i) & 1 for i, c in enumerate(involved)}
        if all(any(trial[c] != bad for c, bad in cl.items()) for cl in clauses):
            orientation = trial
            found = True
            break
    if clauses and not found:
        return PromiseAnswer(False)

    rounded = []
    for v in range(inst.var_count):
        if x[v] > half:
            rounded.append(1)
        elif x[v] < half:
            rounded.append(0)
        else:
            rounded.append(orientation.get(comp[v], 0) ^ color[v])
    for ri, tup in inst.constraints:
        _, b = t_work.pairs[ri]
        if not b.contains(tuple(rounded[v] for v in tup)):
            raise InternalCheckError("rounded LP witness leaves the B side")
    if polarity:
        rounded = [1 - v for v in rounded]
    return PromiseAnswer(True, {v: rounded[v] for v in range(inst.var_count)})


def solve_pcsp(t: Template, inst: Instance) -> PromiseAnswer:
    """Promise-correct decision through the recognized sandwich.

    Answers Yes whenever the instance maps into the A side and No whenever it
    does not map into the B side; between the two anything goes, which is the
    promise contract.  Unrecognized templates raise rather than guess.
    """
    check_instance_against(inst, t)
    verdict = classify(t)
    if verdict.complexity is not Complexity.TRACTABLE:
        raise UnsupportedTemplateError("template is not known tractable")
    if verdict.sandwich is None:
        c = _point_absorbing(t)
        if c is not None:
            return PromiseAnswer(True, {v: c for v in range(inst.var_count)})
        raise UnsupportedTemplateError("tractable template without a recognized recipe")
    spec = sandwich(t)
    if spec.solver == "gf2":
        sol = solve_gf2(_gf2_translate(t, inst))
        if sol is None:
            return PromiseAnswer(False)
        return PromiseAnswer(True, {v: sol[v] for v in range(inst.var_count)})
    if spec.solver == "diophantine":
        sol = solve_diophantine(_dio_translate(t, inst))
        if sol is None:
            return PromiseAnswer(False)
        _check_dio_witness(t, inst, sol)
        return PromiseAnswer(True, sol)
    return _solve_majority_path(t, inst, spec.polarity)


def brute_force_promise(t: Template, inst: Instance, cap: Optional[int] = None):
    """Exhaustive (X -> A, X -> B) satisfiability; the testing oracle."""
    check_instance_against(inst, t)
    if cap is None:
        cap = int(os.environ.get("PCSP_MAX_BRUTE", "16"))
    if inst.var_count > cap:
        raise StructureError(f"instance above brute-force cap {cap}")

    def side_sat(side: int) -> bool:
        rels = [pair[side] for pair in t.pairs]
        for bits in range(1 << inst.var_count):
            ok = True
            for ri, tup in inst.constraints:
                image = tuple((bits >> v) & 1 for v in tup)
                if not rels[ri].contains(image):
                    ok = False
                    break
            if ok:
                return True
        return False

    return side_sat(0), side_sat(1)
