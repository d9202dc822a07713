"""Machine-checkable certificates that a template admits no bounded doubly
cyclic polymorphism of a given square arity.

Everything here is symbolic: an evaluation is a compact vector of per-block
heights (never a 2**n table), and the unknowns are the values u_k that a
hypothetical polymorphism's transpose takes on the one-run tuples with k
leading ones.  A certificate is a DAG of claims; each node's claim must
follow from its referenced prior claims plus one locally checkable rule:

* plausible tuple families force relation membership of the image values,
* disequality preservation flips values under complementation,
* block rotations and the row/column transpose never change the value,
* halving and completion steps tie almost rectangles to smaller step sizes,
* at the end, two near-threshold almost rectangles that any bounded
  equivalence must identify are proved to take distinct values.

The verifier re-derives every rule instance from scratch, against the
template it is handed, so a certificate accepted here is a proof no matter
which preset guided its generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .structures import BoolRelation, Template, build_family


class CertificateError(ValueError):
    """Malformed context or certificate."""


class GenerationError(RuntimeError):
    """The requested certificate cannot be built at these parameters."""


PRESETS = {
    # exponents: near-threshold window 1/s^(step+near), too-close cutoff
    # 1/s^(b+tooclose), completion precondition 1/s^producing
    "paper": {"near": 10, "tooclose": 12, "producing": 5},
    # verification is local, so smaller windows lose no rigor; they only
    # let certificates exist at desk-sized primes
    "desk": {"near": -2, "tooclose": 2, "producing": 1},
}

CASES = ("1", "2", "3", "4a", "4b")

MAX_FLIP_DEPTH = 64
MAX_FREE_ROOTS = 4


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class ProofContext:
    """Parameters of one non-existence proof instance."""

    r: int
    s: int
    case: str
    p: int
    b: int
    preset: str = "desk"

    def __post_init__(self):
        if self.case not in CASES:
            raise CertificateError(f"unknown case {self.case!r}")
        if self.preset not in PRESETS:
            raise CertificateError(f"unknown preset {self.preset!r}")
        if self.b < 0:
            raise CertificateError("b must be >= 0")
        if not _is_prime(self.p):
            raise CertificateError(f"p={self.p} is not prime")
        if self.p % self.s != 1:
            raise CertificateError(f"p={self.p} is not 1 modulo s={self.s}")
        r, s = self.r, self.s
        if self.case == "1":
            ok = 1 < r and 2 * r < s
        elif self.case == "2":
            ok = r > 1 and s == 2 * r
        elif self.case == "3":
            ok = r > 1 and s == 2 * r and r % 2 == 0
        elif self.case == "4a":
            # normalized to r <= s/2; the swapped template covers the rest
            ok = 1 <= r and 2 * r <= s and s > 2 and (r - s) % 2 == 0
        else:  # 4b
            ok = 1 <= r and 2 * r < s and s > 2 and r % 2 == 0 and s % 2 == 1
        if not ok:
            raise CertificateError(f"case {self.case} incompatible with r={r}, s={s}")

    @property
    def n(self) -> int:
        return self.p * self.p

    @property
    def theta(self) -> Fraction:
        return Fraction(1, 2) if self.case == "1" else Fraction(self.r, self.s)

    @property
    def a(self) -> int:
        # largest k with k/n strictly below the threshold; n = 1 mod s keeps
        # theta*n non-integral
        t = self.theta * self.n
        assert t.denominator != 1
        return int(t)

    @property
    def plausible_sense(self) -> str:
        return "le" if self.case == "2" else "eq"

    @property
    def q_weights(self) -> frozenset:
        if self.case in ("4a", "4b"):
            return frozenset(range(1, self.s))
        return frozenset(range(0, 2 * self.r))

    @property
    def twins(self) -> bool:
        return self.case in ("2", "3")

    @property
    def zero_pad(self) -> int:
        return self.s - 2 * self.r if self.case == "1" else 0

    @property
    def has_neq(self) -> bool:
        return self.case in ("1", "2", "3")

    @property
    def m_half(self) -> int:
        # r/theta - 2
        return self.s - 2 if self.case in ("4a", "4b") else 2 * self.r - 2

    @property
    def m_flip(self) -> int:
        return self.s - 1 if self.case in ("4a", "4b") else 2 * self.r - 1

    def exponent(self, which: str) -> int:
        return PRESETS[self.preset][which]

    def canonical_template(self) -> Template:
        neq = build_family("neq")
        if self.case in ("4a", "4b"):
            return Template(((build_family("exact", self.r, self.s),
                              build_family("nae", self.s)),))
        main_a = (build_family("atmost", self.r, self.s) if self.case == "2"
                  else build_family("exact", self.r, self.s))
        main_b = build_family("atmost", 2 * self.r - 1, self.s)
        return Template(((main_a, main_b), (neq, neq)))


# ---------------------------------------------------------------------------
# evaluation tuples and almost rectangles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalTuple:
    """Per-block counts of leading ones; never a materialized 0/1 tuple."""

    blocks: tuple

    @classmethod
    def flat(cls, k: int, p: int) -> "EvalTuple":
        """The tuple of k leading ones, read as p columns of height p."""
        if not (0 <= k <= p * p):
            raise CertificateError(f"flat length {k} out of range")
        full, rest = divmod(k, p)
        return cls(tuple([p] * full + ([rest] if rest else []) + [0] * (p - full - (1 if rest else 0))))

    def total(self) -> int:
        return sum(self.blocks)


def _blocks_of(z) -> tuple:
    if isinstance(z, EvalTuple):
        return z.blocks
    if isinstance(z, AlmostRectangle):
        return z.blocks
    return tuple(z)


def area(z, p: Optional[int] = None) -> Fraction:
    """Fraction of ones: (sum of block heights) / p**2."""
    blocks = _blocks_of(z)
    if p is None:
        p = len(blocks)
    if len(blocks) != p or any(not (0 <= v <= p) for v in blocks):
        raise CertificateError(f"bad block vector {blocks} for p={p}")
    return Fraction(sum(blocks), p * p)


def _rot(t: tuple, i: int) -> tuple:
    """The i-th cyclic shift: every entry moves i places to the right."""
    if not t:
        return t
    i %= len(t)
    return t[-i:] + t[:-i]


@dataclass(frozen=True)
class AlmostRectangle:
    """A cyclic shift of (z1 x count1, z2 x (p - count1)) with z1 >= z2.

    blocks == rot(canonical, shift).  Step size is z1 - z2.
    """

    blocks: tuple
    z1: int
    z2: int
    count1: int
    shift: int

    @property
    def step(self) -> int:
        return self.z1 - self.z2

    @property
    def p(self) -> int:
        return len(self.blocks)

    def canonical(self) -> tuple:
        return tuple([self.z1] * self.count1 + [self.z2] * (self.p - self.count1))


def as_almost_rectangle(z) -> Optional[AlmostRectangle]:
    """Recognize a block vector as an almost rectangle, or None."""
    blocks = _blocks_of(z)
    p = len(blocks)
    if any(not (0 <= v <= p) for v in blocks):
        return None
    values = sorted(set(blocks), reverse=True)
    if len(values) == 1:
        return AlmostRectangle(blocks, values[0], values[0], p, 0)
    if len(values) != 2:
        return None
    z1, z2 = values
    count1 = blocks.count(z1)
    canonical = tuple([z1] * count1 + [z2] * (p - count1))
    for shift in range(p):
        if _rot(canonical, shift) == blocks:
            return AlmostRectangle(blocks, z1, z2, count1, shift)
    return None


def complement_blocks(z) -> tuple:
    blocks = _blocks_of(z)
    p = len(blocks)
    return tuple(p - v for v in blocks)


def near_threshold(z, ctx: ProofContext) -> bool:
    """Area within 1/s^(step + near-exponent) of the threshold."""
    ar = as_almost_rectangle(z)
    if ar is None:
        raise CertificateError("near-threshold test needs an almost rectangle")
    e = ar.step + ctx.exponent("near")
    window = Fraction(1, ctx.s ** e) if e >= 0 else Fraction(ctx.s ** (-e))
    return abs(area(z, ctx.p) - ctx.theta) < window


# ---------------------------------------------------------------------------
# plausibility and the explicit matrix constructions
# ---------------------------------------------------------------------------

def is_plausible_1d(ks, ctx: ProofContext) -> bool:
    ks = list(ks)
    if len(ks) != ctx.s:
        raise CertificateError(f"need {ctx.s} entries, got {len(ks)}")
    if any(not (0 <= k <= ctx.n) for k in ks):
        return False
    total = sum(ks)
    want = ctx.r * ctx.n
    return total <= want if ctx.plausible_sense == "le" else total == want


def is_plausible_2d(tuples, ctx: ProofContext) -> bool:
    rows = [_blocks_of(t) for t in tuples]
    if any(len(row) != ctx.p for row in rows):
        raise CertificateError("block vectors have the wrong width")
    if any(not (0 <= v <= ctx.p) for row in rows for v in row):
        return False
    want = ctx.r * ctx.p
    for i in range(ctx.p):
        col = sum(row[i] for row in rows)
        if ctx.plausible_sense == "le":
            if col > want:
                return False
        elif col != want:
            return False
    return True


def _ones_run(length: int, ones: int, offset: int) -> tuple:
    row = [0] * length
    for j in range(ones):
        row[(offset + j) % length] = 1
    return tuple(row)


def build_shift_matrix_1d(ks, ctx: ProofContext):
    """Rows are staggered one-runs; returns (matrix, every column lands in P).

    Row i is the (k_1 + ... + k_{i-1})-th cyclic shift of the k_i-run, so the
    runs tile the circle and each column collects exactly r ones (at most r
    when only an upper budget is required).
    """
    ks = list(ks)
    if not is_plausible_1d(ks, ctx):
        raise CertificateError(f"tuple {ks} is not plausible")
    n = ctx.n
    matrix = []
    offset = 0
    for k in ks:
        matrix.append(_ones_run(n, k, offset))
        offset += k
    ok = True
    for j in range(n):
        w = sum(row[j] for row in matrix)
        if ctx.plausible_sense == "le":
            ok = ok and w <= ctx.r
        else:
            ok = ok and w == ctx.r
    return matrix, ok


def build_shift_matrix_2d(tuples, ctx: ProofContext):
    """The two-dimensional stagger: per block position, runs of length r*p are
    staggered, folded into r slices, and summed; the folded slices are glued
    into an s x n matrix whose rows are blockwise rotations of the inputs.

    Returns (matrix, every column lands in P).  Structural failures (a fold
    overlapping, a row not a rotation of its input) raise, because they would
    mean the construction itself is broken, not the input.
    """
    rows_in = [_blocks_of(t) for t in tuples]
    if len(rows_in) != ctx.s:
        raise CertificateError(f"need {ctx.s} block vectors")
    if not is_plausible_2d(rows_in, ctx):
        raise CertificateError("tuple family is not plausible")
    p, r = ctx.p, ctx.r
    big = r * p
    glued = [[] for _ in range(ctx.s)]
    for i in range(p):
        offset = 0
        folded = [[0] * p for _ in range(ctx.s)]
        for j in range(ctx.s):
            k = rows_in[j][i]
            run = _ones_run(big, k, offset)
            offset += k
            for c in range(big):
                folded[j][c % p] += run[c]
            if any(v > 1 for v in folded[j]):
                raise CertificateError("internal: fold overlapped itself")
            target = tuple([1] * k + [0] * (p - k))
            if not any(_rot(target, t) == tuple(folded[j]) for t in range(p)):
                raise CertificateError("internal: folded row is not a rotation")
        for j in range(ctx.s):
            glued[j].extend(folded[j])
    matrix = [tuple(row) for row in glued]
    ok = True
    for c in range(ctx.n):
        w = sum(row[c] for row in matrix)
        if ctx.plausible_sense == "le":
            ok = ok and w <= r
        else:
            ok = ok and w == r
    return matrix, ok


def complete_plausible(z, m: int, ctx: ProofContext):
    """Rotate z into m staggered rows and append the column completion l.

    Returns (rows as EvalTuples, l as AlmostRectangle).  The rows are p-ary
    rotations of z (so they share z's value and area); l tops every column up
    to r*p, and comes out an almost rectangle of the same step size.
    """
    ar = as_almost_rectangle(z)
    if ar is None:
        raise CertificateError("completion needs an almost rectangle")
    if m not in (ctx.m_half, ctx.m_flip):
        raise CertificateError(f"m={m} is not one of the two admissible counts")
    if m < 1:
        raise CertificateError("completion needs at least one row")
    gap = abs(area(ar.blocks, ctx.p) - ctx.theta)
    if gap > Fraction(1, ctx.s ** ctx.exponent("producing")):
        raise CertificateError("area too far from the threshold to complete")
    p = ctx.p
    rows = [_rot(ar.canonical(), (i * ar.count1 + ar.shift) % p) for i in range(m)]
    l_blocks = []
    for i in range(p):
        v = ctx.r * p - sum(row[i] for row in rows)
        if not (0 <= v <= p):
            raise CertificateError(f"completion column {i} out of range ({v})")
        l_blocks.append(v)
    l_ar = as_almost_rectangle(tuple(l_blocks))
    if l_ar is None or l_ar.step != ar.step:
        raise CertificateError("completion is not an almost rectangle of equal step")
    return [EvalTuple(row) for row in rows], l_ar


def halve(l) -> Tuple[AlmostRectangle, AlmostRectangle]:
    """Round each block down and up; both halves are almost rectangles of
    strictly smaller step (the input step must be at least 2)."""
    ar = as_almost_rectangle(l)
    if ar is None:
        raise CertificateError("halving needs an almost rectangle")
    if ar.step < 2:
        raise CertificateError("halving needs step size >= 2")
    lo = tuple(v // 2 for v in ar.blocks)
    hi = tuple(v - v // 2 for v in ar.blocks)
    a1, a2 = as_almost_rectangle(lo), as_almost_rectangle(hi)
    if a1 is None or a2 is None or a1.step >= ar.step or a2.step >= ar.step:
        raise CertificateError("internal: halves are not smaller almost rectangles")
    return a1, a2


# ---------------------------------------------------------------------------
# claims, justifications, nodes
# ---------------------------------------------------------------------------

ZERO = ("zero",)


def sigma_term(k: int) -> tuple:
    return ("sigma", k)


def rect_term(blocks) -> tuple:
    return ("rect", tuple(blocks))


def _term_to_json(term):
    if term[0] == "sigma":
        return {"sigma": term[1]}
    return {"blocks": list(term[1])}


def _term_from_json(obj):
    if "sigma" in obj:
        return sigma_term(obj["sigma"])
    return rect_term(obj["blocks"])


@dataclass(frozen=True)
class Node:
    id: int
    claim: dict
    justify: dict
    refs: tuple

    def to_json(self) -> dict:
        return {"id": self.id, "claim": self.claim, "justify": self.justify,
                "refs": list(self.refs)}


@dataclass(frozen=True)
class Certificate:
    context: ProofContext
    nodes: tuple
    conclusion: str  # "tame_base" or "contradiction"

    def to_json(self) -> dict:
        ctx = self.context
        return {
            "context": {"r": ctx.r, "s": ctx.s, "case": ctx.case, "p": ctx.p,
                        "b": ctx.b,
                        "theta": f"{ctx.theta.numerator}/{ctx.theta.denominator}",
                        "exponent_preset": ctx.preset},
            "nodes": [n.to_json() for n in self.nodes],
            "conclusion": self.conclusion,
        }


def certificate_to_json(cert: Certificate) -> str:
    return json.dumps(cert.to_json(), sort_keys=True, separators=(",", ":")) + "\n"


def certificate_from_json(text: str) -> Certificate:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise CertificateError(f"bad JSON: {e}")
    try:
        c = obj["context"]
        ctx = ProofContext(int(c["r"]), int(c["s"]), str(c["case"]), int(c["p"]),
                           int(c["b"]), str(c["exponent_preset"]))
        num, den = str(c["theta"]).split("/")
        if Fraction(int(num), int(den)) != ctx.theta:
            raise CertificateError("stored threshold disagrees with the case")
        nodes = []
        for nd in obj["nodes"]:
            nodes.append(Node(int(nd["id"]), nd["claim"], nd["justify"],
                              tuple(int(x) for x in nd["refs"])))
        conclusion = str(obj["conclusion"])
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, CertificateError):
            raise
        raise CertificateError(f"malformed certificate: {e}")
    return Certificate(ctx, tuple(nodes), conclusion)


# claim constructors

def claim_forced(k: int, bit: int) -> dict:
    return {"kind": "forced", "k": k, "bit": bit}


def claim_absolute(k: int, bit: int) -> dict:
    return {"kind": "absolute", "k": k, "bit": bit}


def claim_distinct(a, b) -> dict:
    return {"kind": "distinct", "a": _term_to_json(a), "b": _term_to_json(b)}


def claim_tame(blocks) -> dict:
    return {"kind": "tame", "blocks": list(blocks)}


def _claim_edges(claim: dict, ctx: ProofContext):
    """The parity edges a (verified) claim contributes as a fact."""
    kind = claim["kind"]
    if kind == "forced":
        return [(sigma_term(claim["k"]), sigma_term(0), claim["bit"] & 1)]
    if kind == "absolute":
        return [(sigma_term(claim["k"]), ZERO, claim["bit"] & 1)]
    if kind == "distinct":
        return [(_term_from_json(claim["a"]), _term_from_json(claim["b"]), 1)]
    if kind == "equal":
        return [(_term_from_json(claim["a"]), _term_from_json(claim["b"]), 0)]
    if kind == "tame":
        blocks = tuple(claim["blocks"])
        side = 1 if area(blocks, ctx.p) > ctx.theta else 0
        return [(rect_term(blocks), sigma_term(0), side)]
    raise CertificateError(f"unknown claim kind {kind!r}")


# ---------------------------------------------------------------------------
# the parity engine
# ---------------------------------------------------------------------------

class ParityDSU:
    """Union-find over terms with an XOR offset to the class root."""

    def __init__(self):
        self.parent: Dict[tuple, tuple] = {}
        self.offset: Dict[tuple, int] = {}

    def find(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.offset[x] = 0
            return x, 0
        path = []
        while self.parent[x] != x:
            path.append(x)
            x = self.parent[x]
        root = x
        acc = 0
        for y in reversed(path):
            acc ^= self.offset[y]
            self.offset[y] = acc
            self.parent[y] = root
        return root, self.offset[path[0]] if path else 0

    def relation(self, x, y) -> Optional[int]:
        rx, px = self.find(x)
        ry, py = self.find(y)
        if rx != ry:
            return None
        return px ^ py

    def union(self, x, y, parity: int) -> str:
        """Returns 'new', 'known', or 'conflict'."""
        rx, px = self.find(x)
        ry, py = self.find(y)
        if rx == ry:
            return "known" if (px ^ py) == (parity & 1) else "conflict"
        self.parent[ry] = rx
        self.offset[ry] = px ^ py ^ (parity & 1)
        return "new"

    def snapshot_roots(self, terms):
        roots = []
        for t in terms:
            r, _ = self.find(t)
            if r not in roots:
                roots.append(r)
        return roots


@dataclass
class QConstraint:
    """Image membership of one plausible family: the multiset of term values
    has its weight inside the allowed set.

    With a twin, the complemented family is plausible too, so the weight
    with the flip-marked terms complemented must also lie in the set.  Flip
    marking matters because zero-height padding tuples are appended fresh to
    both families rather than complemented.
    """

    terms: tuple  # ((term, multiplicity, flip_in_twin), ...)
    weights: frozenset
    twin: bool

    def admits(self, ones: int, twin_ones: int) -> bool:
        if ones not in self.weights:
            return False
        if self.twin and twin_ones not in self.weights:
            return False
        return True


def _constraint_survivors(con: QConstraint, dsu: ParityDSU, extra_terms=()):
    """Enumerate values of the free class roots; return (roots, survivors).

    Survivor tuples assign a bit to each root (ZERO pinned to 0).  Raises if
    too many roots are free.
    """
    all_terms = [t for t, _, _ in con.terms] + list(extra_terms)
    dsu.find(ZERO)
    roots = dsu.snapshot_roots(all_terms + [ZERO])
    zroot, zpar = dsu.find(ZERO)
    free = [r for r in roots if r != zroot]
    if len(free) > MAX_FREE_ROOTS:
        raise CertificateError("too many undetermined classes for a local check")
    survivors = []
    for bits in range(1 << len(free)):
        # pin the constant class so that ZERO itself evaluates to 0
        val = {zroot: zpar}
        for i, r in enumerate(free):
            val[r] = (bits >> i) & 1
        ones = twin_ones = 0
        for term, mult, flip in con.terms:
            root, par = dsu.find(term)
            v = val[root] ^ par
            ones += mult * v
            twin_ones += mult * ((1 - v) if flip else v)
        if con.admits(ones, twin_ones):
            survivors.append(val)
    return free, survivors


def _claim_holds(claim: dict, ctx: ProofContext, dsu: ParityDSU, val: dict) -> bool:
    def value(term):
        root, par = dsu.find(term)
        if root not in val:
            return None
        return val[root] ^ par

    for x, y, parity in _claim_edges(claim, ctx):
        vx, vy = value(x), value(y)
        if x == ZERO:
            vx = 0
        if y == ZERO:
            vy = 0
        if vx is None or vy is None:
            return False
        if (vx ^ vy) != parity:
            return False
    return True


def _deduce_claim(claim: dict, ctx: ProofContext, constraints, fact_edges) -> Optional[str]:
    """Check that the claim holds in every consistent assignment.

    fact_edges seed the union-find; constraints (usually one, or a twin pair
    folded into one) prune the free-root assignments.  Returns None when the
    claim is forced, else a reason string.
    """
    dsu = ParityDSU()
    dsu.find(ZERO)
    for x, y, parity in fact_edges:
        if dsu.union(x, y, parity) == "conflict":
            return "referenced facts are contradictory"
    claim_terms = [e[i] for e in _claim_edges(claim, ctx) for i in (0, 1)]
    if not constraints:
        # pure closure: the claim must already follow from the facts
        for x, y, parity in _claim_edges(claim, ctx):
            rel = dsu.relation(x, y)
            if rel is None:
                return "claim does not follow from the referenced facts"
            if rel != parity:
                return "claim contradicts the referenced facts"
        return None
    if len(constraints) != 1:
        raise CertificateError("local checks take a single folded constraint")
    con = constraints[0]
    free, survivors = _constraint_survivors(con, dsu, claim_terms)
    if not survivors:
        return "no consistent assignment survives (inconsistent node)"
    for val in survivors:
        if not _claim_holds(claim, ctx, dsu, val):
            return "claim is not forced by the constraint"
    return None


# ---------------------------------------------------------------------------
# chain generation
# ---------------------------------------------------------------------------

def _ktuple_constraint(ks, weights: frozenset, twin: bool) -> QConstraint:
    mult: Dict[tuple, int] = {}
    for k in ks:
        t = sigma_term(k)
        mult[t] = mult.get(t, 0) + 1
    terms = tuple((t, m, True) for t, m in sorted(mult.items()))
    return QConstraint(terms, weights, twin)


def _twin_available(ks, ctx: ProofContext) -> bool:
    """The complement rule applies only when the complemented family is
    itself plausible (automatic at exact budget when s = 2r)."""
    if not ctx.twins:
        return False
    return is_plausible_1d([ctx.n - k for k in ks], ctx)


class _ChainBuilder:
    """Emits nodes while tracking which node produced which parity edge, so
    later nodes can reference exactly the facts their check needs."""

    def __init__(self, ctx: ProofContext, q_weights: frozenset):
        self.ctx = ctx
        self.q_weights = q_weights
        self.nodes: List[Node] = []
        self.adj: Dict[tuple, list] = {}

    def _note_edges(self, node: Node):
        for x, y, parity in _claim_edges(node.claim, self.ctx):
            self.adj.setdefault(x, []).append((y, parity, node.id))
            self.adj.setdefault(y, []).append((x, parity, node.id))

    def explain(self, x, y) -> Optional[Tuple[int, List[int]]]:
        """Shortest fact path x..y: (parity, node ids along the way)."""
        if x == y:
            return 0, []
        from collections import deque
        seen = {x: (0, None, None)}
        queue = deque([x])
        while queue:
            cur = queue.popleft()
            for nxt, parity, nid in self.adj.get(cur, ()):
                if nxt in seen:
                    continue
                seen[nxt] = (seen[cur][0] ^ parity, cur, nid)
                if nxt == y:
                    ids = []
                    back = nxt
                    while back != x:
                        _, prev, nid2 = seen[back]
                        ids.append(nid2)
                        back = prev
                    return seen[y][0], sorted(set(ids))
                queue.append(nxt)
        return None

    def refs_for(self, pairs) -> List[int]:
        ids = set()
        for x, y in pairs:
            got = self.explain(x, y)
            if got is None:
                raise GenerationError(f"no established fact links {x} and {y}")
            ids.update(got[1])
        return sorted(ids)

    def emit(self, claim: dict, justify: dict, refs) -> int:
        node = Node(len(self.nodes), claim, justify, tuple(sorted(set(refs))))
        reason = _check_node(node, self.ctx, self.q_weights,
                             {n.id: n for n in self.nodes}, self.ctx.has_neq)
        if reason is not None:
            raise GenerationError(f"generated node failed its own check: {reason} "
                                  f"({claim} / {justify})")
        self.nodes.append(node)
        self._note_edges(node)
        return node.id


def _chain_case_2(cb: _ChainBuilder):
    ctx = cb.ctx
    abs_ids = {}
    for k in range(0, ctx.a + 1):
        ks = [k] * ctx.s
        nid = cb.emit(claim_absolute(k, 0),
                      {"tag": "plausible1d", "tuples": [ks],
                       "twin": _twin_available(ks, ctx)}, [])
        abs_ids[k] = nid
    for k in range(0, ctx.a + 1):
        cb.emit(claim_absolute(ctx.n - k, 1), {"tag": "negation", "k": k},
                [abs_ids[k]])


def _chain_case_1(cb: _ChainBuilder):
    ctx = cb.ctx
    r, s, n = ctx.r, ctx.s, ctx.n
    neg_ids = {}
    for k in range(ctx.a, -1, -1):
        ks = [k] * r + [n - k - 1] * r + [r] + [0] * (s - 2 * r - 1)
        refs = []
        if n - k - 1 != k:
            refs = [neg_ids[k + 1]]
        nid = cb.emit(claim_absolute(k, 0),
                      {"tag": "plausible1d", "tuples": [ks], "twin": False}, refs)
        neg_ids[k] = cb.emit(claim_absolute(n - k, 1), {"tag": "negation", "k": k},
                             [nid])


def _chain_case_4(cb: _ChainBuilder):
    """Shared by the not-all-equal cases and the exact r = s/2 case, which
    runs the same tuple lists with the complement rule folded in."""
    ctx = cb.ctx
    r, s, a = ctx.r, ctx.s, ctx.a
    u = sigma_term

    def emit_distinct(x, y, ks, known_pairs):
        refs = cb.refs_for([pq for pq in known_pairs if pq[0] != pq[1]])
        return cb.emit(claim_distinct(u(x), u(y)),
                       {"tag": "plausible1d", "tuples": [list(ks)],
                        "twin": _twin_available(ks, ctx)}, refs)

    emit_distinct(a, a + 1, [a] * (s - r) + [a + 1] * r, [])
    if ctx.case == "4b":
        emit_distinct(a, a + r, [a] * (s - 1) + [a + r], [])
        emit_distinct(a - 1, a + 1,
                      [a - 1] * ((s - 1) // 2) + [a + 1] * ((s - 1) // 2) + [a + r],
                      [(u(a + 1), u(a + r))])
    else:
        emit_distinct(a + 1, a - 1,
                      [a - 1] * ((s - r) // 2) + [a + 1] * ((s + r) // 2), [])
    for i in range(2, a + 1):
        if ctx.case == "4b":
            first = [a + i] * (r // 2) + [a] * (s - r) + [a - i + 2] * (r // 2)
            second = [a - i] * ((s - 1) // 2) + [a + i] * ((s - 1) // 2) + [a + r]
            above = a + r
        else:
            if ((s + r) // 2) % 2 == 0:
                first = ([a + i] * ((s + r) // 4) + [a - 1] * ((s - r) // 2)
                         + [a - i + 2] * ((s + r) // 4))
            else:
                first = ([a + i] * ((s + r + 2) // 4) + [a - 1] * ((s - r - 2) // 2)
                         + [a - i + 1] * 2 + [a - i + 2] * ((s + r - 6) // 4))
            second = [a - i] * ((s - r) // 2) + [a + i] * ((s - r) // 2) + [a + 1] * r
            above = a + 1
        low_needed = sorted((set(first) | {a - i + 1}) - {a + i, a})
        emit_distinct(a - i + 1, a + i, first, [(u(x), u(a)) for x in low_needed])
        emit_distinct(a + i, a - i, second,
                      [(u(a + i), u(a)), (u(above), u(a))])


def gen_stepone_chain(ctx: ProofContext) -> List[Node]:
    """The 1-D tameness chain: case-specific plausible tuples plus negation
    steps, every node locally checked at emission."""
    cb = _ChainBuilder(ctx, ctx.q_weights)
    if ctx.case == "2":
        _chain_case_2(cb)
    elif ctx.case == "1":
        _chain_case_1(cb)
    else:
        _chain_case_4(cb)
    return cb.nodes


@dataclass
class PropagationResult:
    status: str  # "ok", "incomplete", or "contradiction"
    forced: Dict[int, int]
    absolute: Dict[int, int]
    missing: tuple = ()

    def matches_tame_pattern(self, ctx: ProofContext) -> bool:
        if self.status != "ok":
            return False
        for k in range(0, 2 * ctx.a + 1):
            want = 0 if k <= ctx.a else 1
            if self.forced.get(k) != want:
                return False
        return True


def propagate(chain, q: BoolRelation, ctx: ProofContext) -> PropagationResult:
    """Run the fixpoint deduction engine over a chain's constraints.

    The chain's claims are ignored: only the justifications' tuples (and
    negation steps) feed the engine, so this independently re-derives what
    the chain asserts.  Deduction is per-constraint pruning over at most
    MAX_FREE_ROOTS undetermined classes, iterated to a fixpoint; the result
    is order-independent.
    """
    weights = frozenset(q.weights)
    constraints: List[QConstraint] = []
    dsu = ParityDSU()
    dsu.find(ZERO)
    contradiction = False
    for node in chain:
        tag = node.justify.get("tag")
        if tag == "plausible1d":
            for ks in node.justify["tuples"]:
                if not is_plausible_1d(ks, ctx):
                    raise CertificateError(f"chain tuple {ks} is not plausible")
                twin = bool(node.justify.get("twin", False))
                if twin and not (ctx.twins and _twin_available(ks, ctx)):
                    raise CertificateError("complement rule unavailable for this tuple")
                constraints.append(_ktuple_constraint(ks, weights, twin))
        elif tag == "negation":
            if not ctx.has_neq:
                raise CertificateError("negation step in a case without disequality")
            k = node.justify["k"]
            if dsu.union(sigma_term(k), sigma_term(ctx.n - k), 1) == "conflict":
                contradiction = True
        else:
            raise CertificateError(f"chain nodes cannot carry {tag!r}")

    changed = True
    while changed and not contradiction:
        changed = False
        for con in constraints:
            try:
                free, survivors = _constraint_survivors(con, dsu)
            except CertificateError:
                continue
            if not survivors:
                contradiction = True
                break
            zroot, _ = dsu.find(ZERO)
            roots = [zroot] + free
            for i in range(len(roots)):
                for j in range(i + 1, len(roots)):
                    rels = {val[roots[i]] ^ val[roots[j]] for val in survivors}
                    if len(rels) == 1:
                        got = dsu.union(roots[i], roots[j], rels.pop())
                        if got == "conflict":
                            contradiction = True
                        elif got == "new":
                            changed = True
            if contradiction:
                break

    if contradiction:
        return PropagationResult("contradiction", {}, {})
    forced, absolute, missing = {}, {}, []
    for k in range(0, ctx.n + 1):
        rel = dsu.relation(sigma_term(k), sigma_term(0))
        if rel is not None:
            forced[k] = rel
        abs_rel = dsu.relation(sigma_term(k), ZERO)
        if abs_rel is not None:
            absolute[k] = abs_rel
    for k in range(0, 2 * ctx.a + 1):
        if k not in forced:
            missing.append(k)
    if missing:
        return PropagationResult("incomplete", forced, absolute, tuple(missing))
    return PropagationResult("ok", forced, absolute)

# ---------------------------------------------------------------------------
# per-node verification
# ---------------------------------------------------------------------------

def _fact_edges_from_refs(node: Node, ctx: ProofContext, nodes_by_id) -> list:
    edges = []
    for rid in node.refs:
        edges.extend(_claim_edges(nodes_by_id[rid].claim, ctx))
    return edges


def _padded_2d_constraint(z_blocks, members, pad: int, q_weights, twin: bool,
                          z_mult: int) -> QConstraint:
    mult: Dict[tuple, int] = {rect_term(z_blocks): z_mult}
    for blocks in members:
        t = rect_term(blocks)
        mult[t] = mult.get(t, 0) + 1
    terms = [(t, m, True) for t, m in sorted(mult.items())]
    if pad:
        # padding tuples are appended fresh to the complemented family too
        terms.append((sigma_term(0), pad, False))
    return QConstraint(tuple(terms), q_weights, twin)


def _check_completion_payload(node: Node, ctx: ProofContext, want_m: int):
    """Shared structural checks for halving/completion nodes; returns
    (z blocks, l rectangle) or a reason string."""
    j = node.justify
    try:
        z = tuple(int(v) for v in j["blocks"])
        l = tuple(int(v) for v in j["l"])
        m = int(j["m"])
        pad = int(j["pad"])
        twin = bool(j["twin"])
    except (KeyError, TypeError, ValueError):
        return "malformed payload"
    if node.claim.get("kind") != "tame" or tuple(node.claim["blocks"]) != z:
        return "claim does not name the constructed rectangle"
    if m != want_m:
        return f"m={m} is not the admissible row count {want_m}"
    if pad != ctx.zero_pad:
        return "wrong zero padding for this case"
    if twin != ctx.has_neq:
        return "complement flag disagrees with the case"
    try:
        rows, l_ar = complete_plausible(z, m, ctx)
    except CertificateError as e:
        return f"completion rejected: {e}"
    if l_ar.blocks != l:
        return "stated completion disagrees with the construction"
    return z, l_ar, rows, twin, pad


def _check_node(node: Node, ctx: ProofContext, q_weights: frozenset,
                nodes_by_id, template_has_neq: bool) -> Optional[str]:
    """Re-derive one node's claim; None when sound, else the reason."""
    for rid in node.refs:
        if rid not in nodes_by_id or rid >= node.id:
            return f"reference {rid} is not an earlier node"
    try:
        facts = _fact_edges_from_refs(node, ctx, nodes_by_id)
    except CertificateError as e:
        return str(e)
    tag = node.justify.get("tag")

    if tag == "plausible1d":
        tuples = node.justify.get("tuples")
        if not isinstance(tuples, list) or len(tuples) != 1:
            return "plausible tuple nodes carry exactly one tuple"
        ks = [int(k) for k in tuples[0]]
        if not is_plausible_1d(ks, ctx):
            return f"tuple {ks} is not plausible"
        twin = bool(node.justify.get("twin", False))
        if twin:
            if not template_has_neq:
                return "complement rule needs a disequality pair"
            if not (ctx.twins and _twin_available(ks, ctx)):
                return "complement rule unavailable for this tuple"
        con = _ktuple_constraint(ks, q_weights, twin)
        return _deduce_claim(node.claim, ctx, [con], facts)

    if tag == "negation":
        if not template_has_neq:
            return "negation step needs a disequality pair"
        if "k" in node.justify:
            k = int(node.justify["k"])
            if not (0 <= k <= ctx.n):
                return "negation index out of range"
            edge = (sigma_term(k), sigma_term(ctx.n - k), 1)
        else:
            blocks = tuple(int(v) for v in node.justify["blocks"])
            if as_almost_rectangle(blocks) is None:
                return "negation of a non-rectangle"
            edge = (rect_term(blocks), rect_term(complement_blocks(blocks)), 1)
            if node.claim.get("kind") == "tame" and tuple(node.claim["blocks"]) != blocks:
                return "claim does not name the complemented rectangle"
        return _deduce_claim(node.claim, ctx, [], facts + [edge])

    if tag == "closure":
        return _deduce_claim(node.claim, ctx, [], facts)

    if tag == "double_cyclicity":
        try:
            blocks = tuple(int(v) for v in node.justify["blocks"])
            k = int(node.justify["k"])
            shift = int(node.justify["shift"])
        except (KeyError, TypeError, ValueError):
            return "malformed payload"
        ar = as_almost_rectangle(blocks)
        if ar is None or ar.step > 1:
            return "row-wise reading needs step size at most one"
        if sum(blocks) != k:
            return "stated index disagrees with the block sum"
        if shift != ar.shift:
            return "stated shift is not the canonical rotation offset"
        if node.claim.get("kind") != "tame" or tuple(node.claim["blocks"]) != blocks:
            return "claim does not name the flattened rectangle"
        edge = (rect_term(blocks), sigma_term(k), 0)
        return _deduce_claim(node.claim, ctx, [], facts + [edge])

    if tag == "halving":
        got = _check_completion_payload(node, ctx, ctx.m_half)
        if isinstance(got, str):
            return got
        z, l_ar, rows, twin, pad = got
        try:
            l1 = tuple(int(v) for v in node.justify["l1"])
            l2 = tuple(int(v) for v in node.justify["l2"])
        except (KeyError, TypeError, ValueError):
            return "malformed payload"
        try:
            h1, h2 = halve(l_ar.blocks)
        except CertificateError as e:
            return f"halving rejected: {e}"
        if (h1.blocks, h2.blocks) != (l1, l2):
            return "stated halves disagree with the construction"
        family = [z] + [r.blocks for r in rows[1:]] + [l1, l2]
        if not is_plausible_2d(family + [(0,) * ctx.p] * pad, ctx):
            return "assembled family is not plausible"
        if twin:
            if not template_has_neq:
                return "complement rule needs a disequality pair"
            comp = [complement_blocks(bl) for bl in family]
            if not is_plausible_2d(comp + [(0,) * ctx.p] * pad, ctx):
                return "complemented family is not plausible"
        con = _padded_2d_constraint(z, [l1, l2], pad, q_weights, twin, len(rows))
        return _deduce_claim(node.claim, ctx, [con], facts)

    if tag == "completion":
        got = _check_completion_payload(node, ctx, ctx.m_flip)
        if isinstance(got, str):
            return got
        z, l_ar, rows, twin, pad = got
        family = [z] + [r.blocks for r in rows[1:]] + [l_ar.blocks]
        if not is_plausible_2d(family + [(0,) * ctx.p] * pad, ctx):
            return "assembled family is not plausible"
        if twin:
            if not template_has_neq:
                return "complement rule needs a disequality pair"
            comp = [complement_blocks(bl) for bl in family]
            if not is_plausible_2d(comp + [(0,) * ctx.p] * pad, ctx):
                return "complemented family is not plausible"
        con = _padded_2d_constraint(z, [l_ar.blocks], pad, q_weights, twin, len(rows))
        return _deduce_claim(node.claim, ctx, [con], facts)

    if tag == "boundedness":
        try:
            z21 = int(node.justify["z21"])
            z22 = int(node.justify["z22"])
            z1h = int(node.justify["z1"])
            m = int(node.justify["m"])
        except (KeyError, TypeError, ValueError):
            return "malformed payload"
        p, b, theta = ctx.p, ctx.b, ctx.theta
        if m != (p - 1) // 2:
            return "wrong row split for the pigeonhole step"
        if not (theta * p - 2 * b < z21 < z22 < theta * p):
            return "pattern heights leave the pigeonhole interval"
        if not (0 <= z21 and z22 <= p and 0 <= z1h <= p):
            return "heights out of range"
        zb1 = tuple([z1h] * m + [z21] * (p - m))
        zb2 = tuple([z1h] * m + [z22] * (p - m))
        if area(zb1, p) >= theta:
            return "first rectangle is not below the threshold"
        if z1h < p and area(tuple([z1h + 1] * m + [z21] * (p - m)), p) < theta:
            return "first height is not maximal"
        if area(zb2, p) <= theta:
            return "second rectangle is not above the threshold"
        if not (theta * p < z1h < theta * p + 3 * b):
            return "first height outside the provable window"
        for zb in (zb1, zb2):
            ar = as_almost_rectangle(zb)
            if ar is None or ar.step >= 5 * b:
                return "not an almost rectangle of step below 5b"
            if not near_threshold(zb, ctx):
                return "finale rectangle is not near-threshold"
        want = claim_distinct(rect_term(zb1), rect_term(zb2))
        if node.claim != want:
            return "claim does not name the two finale rectangles"
        return _deduce_claim(node.claim, ctx, [], facts)

    return f"unknown justification {tag!r}"


# ---------------------------------------------------------------------------
# certificate generation
# ---------------------------------------------------------------------------

def _pigeonhole_interval(ctx: ProofContext) -> List[int]:
    lo, hi = ctx.theta * ctx.p - 2 * ctx.b, ctx.theta * ctx.p
    out = []
    k = int(lo) + 1
    while k < hi:
        if k > lo and 0 <= k:
            out.append(k)
        k += 1
    return out


class _CertBuilder(_ChainBuilder):
    def __init__(self, ctx: ProofContext):
        super().__init__(ctx, ctx.q_weights)
        self.forced_ids: Dict[int, int] = {}
        self.abs_zero_id: Optional[int] = None
        self.tame_ids: Dict[tuple, int] = {}

    def build_chain(self):
        if self.ctx.case == "2":
            _chain_case_2(self)
        elif self.ctx.case == "1":
            _chain_case_1(self)
        else:
            _chain_case_4(self)
        q_rel = BoolRelation(self.ctx.s, self.ctx.q_weights)
        res = propagate(list(self.nodes), q_rel, self.ctx)
        if not res.matches_tame_pattern(self.ctx):
            raise GenerationError(f"chain propagation failed: {res.status} "
                                  f"missing={res.missing}")
        for node in self.nodes:
            if node.claim == claim_absolute(0, 0):
                self.abs_zero_id = node.id
        a = self.ctx.a
        order = [0, a]
        for i in range(1, a + 1):
            order.extend([a + i, a - i])
        for k in order:
            if not (0 <= k <= 2 * a) or k in self.forced_ids:
                continue
            bit = 0 if k <= a else 1
            refs = self.refs_for([(sigma_term(k), sigma_term(0))])
            self.forced_ids[k] = self.emit(claim_forced(k, bit),
                                           {"tag": "closure"}, refs)

    # -- induction over almost rectangles --

    def _case_refs(self) -> List[int]:
        if self.ctx.case == "1":
            if self.abs_zero_id is None:
                raise GenerationError("missing the zero-value anchor")
            return [self.abs_zero_id]
        return []

    def ensure_tame(self, blocks, depth: int = 0) -> int:
        ctx = self.ctx
        blocks = tuple(blocks)
        if blocks in self.tame_ids:
            return self.tame_ids[blocks]
        if depth > MAX_FLIP_DEPTH:
            raise GenerationError("induction recursion exceeded its depth cap")
        ar = as_almost_rectangle(blocks)
        if ar is None:
            raise GenerationError(f"{blocks} is not an almost rectangle")
        lam = area(blocks, ctx.p)
        if lam == ctx.theta:
            raise GenerationError("rectangle sits exactly on the threshold")

        nid: Optional[int] = None
        if ar.step <= 1:
            k = sum(blocks)
            if k not in self.forced_ids:
                raise GenerationError(f"base chain does not cover index {k}")
            nid = self.emit(claim_tame(blocks),
                            {"tag": "double_cyclicity", "blocks": list(blocks),
                             "k": k, "shift": ar.shift},
                            [self.forced_ids[k]])
        else:
            too_close = abs(lam - ctx.theta) < Fraction(
                1, ctx.s ** (ctx.b + ctx.exponent("tooclose")))
            if not too_close:
                nid = self._try_halving(blocks, depth)
            if nid is None:
                nid = self._flip(blocks, depth)
        self.tame_ids[blocks] = nid
        return nid

    def _try_halving(self, blocks, depth: int) -> Optional[int]:
        ctx = self.ctx
        try:
            rows, l_ar = complete_plausible(blocks, ctx.m_half, ctx)
            h1, h2 = halve(l_ar.blocks)
        except CertificateError:
            return None
        lam = area(blocks, ctx.p)
        want = ctx.theta < lam  # children must sit on the other side
        for h in (h1, h2):
            side = area(h.blocks, ctx.p)
            if side == ctx.theta or (side < ctx.theta) != want:
                return None
        try:
            s1 = self.ensure_tame(h1.blocks, depth + 1)
            s2 = self.ensure_tame(h2.blocks, depth + 1)
            return self.emit(
                claim_tame(blocks),
                {"tag": "halving", "m": ctx.m_half, "blocks": list(blocks),
                 "l": list(l_ar.blocks), "l1": list(h1.blocks),
                 "l2": list(h2.blocks), "twin": ctx.has_neq, "pad": ctx.zero_pad},
                [s1, s2] + self._case_refs())
        except GenerationError:
            return None

    def _flip(self, blocks, depth: int) -> int:
        ctx = self.ctx
        try:
            rows, w_ar = complete_plausible(blocks, ctx.m_flip, ctx)
        except CertificateError as e:
            raise GenerationError(f"p too small: {e}")
        sub = self.ensure_tame(w_ar.blocks, depth + 1)
        return self.emit(
            claim_tame(blocks),
            {"tag": "completion", "m": ctx.m_flip, "blocks": list(blocks),
             "l": list(w_ar.blocks), "twin": ctx.has_neq, "pad": ctx.zero_pad},
            [sub] + self._case_refs())


def _finale_heights(ctx: ProofContext, z2: int) -> int:
    """The maximal first-block height keeping the area below the threshold."""
    p, m = ctx.p, (ctx.p - 1) // 2
    best = None
    for z1 in range(0, p + 1):
        if area(tuple([z1] * m + [z2] * (p - m)), p) < ctx.theta:
            best = z1
    if best is None:
        raise GenerationError("no height stays below the threshold")
    return best


def gen_certificate(ctx: ProofContext) -> "Certificate":
    """Generate the full certificate for the context.

    With b = 0 the result is the base tameness chain alone.  With b >= 1 it
    adds, for every pattern pair in the pigeonhole interval, tameness
    subproofs of the two composite rectangles and the distinctness node that
    contradicts boundedness.  Failures (an interval with too few integers, a
    rectangle the base chain cannot reach, completion running out of range)
    raise GenerationError: the parameters, usually p, are too small.
    """
    cb = _CertBuilder(ctx)
    cb.build_chain()
    if ctx.b == 0:
        cert = Certificate(ctx, tuple(cb.nodes), "tame_base")
    else:
        ints = _pigeonhole_interval(ctx)
        if len(ints) < ctx.b + 1:
            raise GenerationError(
                f"p too small for b: interval has {len(ints)} integers, "
                f"needs {ctx.b + 1}")
        m = (ctx.p - 1) // 2
        for i, z21 in enumerate(ints):
            for z22 in ints[i + 1:]:
                z1h = _finale_heights(ctx, z21)
                zb1 = tuple([z1h] * m + [z21] * (ctx.p - m))
                zb2 = tuple([z1h] * m + [z22] * (ctx.p - m))
                for zb in (zb1, zb2):
                    arz = as_almost_rectangle(zb)
                    if arz is None or arz.step >= 5 * ctx.b:
                        raise GenerationError("p too small for b: step too large")
                    if not near_threshold(zb, ctx):
                        raise GenerationError("p too small for b: rectangle "
                                              "not near-threshold")
                n1 = cb.ensure_tame(zb1)
                n2 = cb.ensure_tame(zb2)
                cb.emit(claim_distinct(rect_term(zb1), rect_term(zb2)),
                        {"tag": "boundedness", "z21": z21, "z22": z22,
                         "z1": z1h, "m": m},
                        [n1, n2])
        cert = Certificate(ctx, tuple(cb.nodes), "contradiction")
    check = verify_certificate(cert, ctx.canonical_template())
    if not check.ok:
        raise GenerationError(f"internal: generated certificate fails its own "
                              f"verification at node {check.failed_node}: {check.reason}")
    return cert


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    failed_node: Optional[int] = None
    reason: Optional[str] = None

    def __bool__(self):
        return self.ok


def _match_template(ctx: ProofContext, template: Template):
    """Find the orientation of the template matching the context's A side.

    Returns (B-side weights, template has disequality) or None.  The B side
    is taken from the template as given: the verifier's deductions must hold
    against the actual relaxed relation, whatever it is.
    """
    from .classifier import _split  # shared pair bookkeeping

    for t in (template, template.swap01()):
        neqs, others = _split(t)
        if others is None or len(others) != 1:
            continue
        a_rel, b_rel = others[0]
        if a_rel.arity != ctx.s:
            continue
        if ctx.case == "2":
            want = set(range(0, ctx.r + 1))
        else:
            want = {ctx.r}
        if set(a_rel.weights) != want:
            continue
        if ctx.has_neq and not neqs:
            continue
        return frozenset(b_rel.weights), bool(neqs)
    return None


def verify_certificate(cert: Certificate, template: Template) -> VerificationResult:
    """Re-check every node and the conclusion against the given template.

    All deduction steps take the relaxed relation from the template itself,
    so replaying a certificate against a template with a larger B side makes
    the propagation incomplete and the certificate is rejected.
    """
    ctx = cert.context
    matched = _match_template(ctx, template)
    if matched is None:
        return VerificationResult(False, None, "template does not match the context")
    q_weights, has_neq = matched

    nodes_by_id: Dict[int, Node] = {}
    for idx, node in enumerate(cert.nodes):
        if node.id != idx:
            return VerificationResult(False, node.id, "node ids must be sequential")
        try:
            reason = _check_node(node, ctx, q_weights, nodes_by_id, has_neq)
        except Exception as e:  # malformed payloads must reject, not crash
            reason = f"malformed node: {e}"
        if reason is not None:
            return VerificationResult(False, node.id, reason)
        nodes_by_id[node.id] = node

    if cert.conclusion == "tame_base":
        if ctx.b != 0:
            return VerificationResult(False, None,
                                      "base-only conclusion requires b = 0")
        dsu = ParityDSU()
        dsu.find(ZERO)
        for node in cert.nodes:
            for x, y, parity in _claim_edges(node.claim, ctx):
                if dsu.union(x, y, parity) == "conflict":
                    return VerificationResult(False, node.id,
                                              "claims are mutually inconsistent")
        for k in range(0, 2 * ctx.a + 1):
            want = 0 if k <= ctx.a else 1
            if dsu.relation(sigma_term(k), sigma_term(0)) != want:
                return VerificationResult(False, None,
                                          f"tameness coverage missing at {k}")
        return VerificationResult(True)

    if cert.conclusion == "contradiction":
        if ctx.b < 1:
            return VerificationResult(False, None, "contradiction needs b >= 1")
        ints = _pigeonhole_interval(ctx)
        if len(ints) < ctx.b + 1:
            return VerificationResult(
                False, None, "pigeonhole interval has too few integers")
        have = set()
        for node in cert.nodes:
            if node.justify.get("tag") == "boundedness":
                have.add((node.justify["z21"], node.justify["z22"]))
        for i, z21 in enumerate(ints):
            for z22 in ints[i + 1:]:
                if (z21, z22) not in have:
                    return VerificationResult(
                        False, None, f"pattern pair ({z21},{z22}) is not covered")
        return VerificationResult(True)

    return VerificationResult(False, None, f"unknown conclusion {cert.conclusion!r}")


def find_minimal_p(r: int, s: int, case: str, b: int, preset: str = "desk",
                   p_limit: int = 400):
    """Search primes congruent to 1 modulo s for the smallest workable p.

    Returns (p, certificate).  Raises GenerationError when no prime up to
    p_limit yields a certificate.
    """
    failures = []
    p = 2
    while p <= p_limit:
        if _is_prime(p) and p % s == 1:
            try:
                ctx = ProofContext(r, s, case, p, b, preset)
                return p, gen_certificate(ctx)
            except (CertificateError, GenerationError) as e:
                failures.append(f"p={p}: {e}")
        p += 1
    raise GenerationError("no workable prime up to "
                          f"{p_limit}; attempts: {'; '.join(failures[-3:])}")
