"""Relational structures, symmetric Boolean relations, instances, and homomorphisms.

Symmetric Boolean relations are stored as sets of admissible Hamming weights,
so membership is O(arity) and large arities stay cheap.  Tuple enumeration is
generated on demand.  Non-symmetric relations (disequality, user-supplied
ones) carry an explicit tuple list instead.

Homomorphism search is exact backtracking with arc-consistency pruning and a
fixed branching order, so witnesses are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Optional, Sequence


class StructureError(ValueError):
    """Malformed relation, template, or instance."""


FAMILY_KINDS = ("odd", "even", "exact", "atmost", "atleast", "nae", "neq", "full", "const")

# Enumerating all tuples of a weight-set relation is exponential in the arity;
# refuse above this unless the caller overrides.
MAX_ENUM_ARITY = 20


@dataclass(frozen=True)
class BoolRelation:
    """A Boolean relation, symmetric ones given by their admissible weights."""

    arity: int
    weights: frozenset
    symmetric: bool = True
    explicit_tuples: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        if self.arity < 1:
            raise StructureError("relation arity must be >= 1")
        bad = [w for w in self.weights if not (0 <= w <= self.arity)]
        if bad:
            raise StructureError(f"weights {bad} outside 0..{self.arity}")
        if self.explicit_tuples is not None:
            for t in self.explicit_tuples:
                if len(t) != self.arity or any(x not in (0, 1) for x in t):
                    raise StructureError(f"bad explicit tuple {t}")
            if self.symmetric:
                # both representations present: they must agree
                explicit = set(self.explicit_tuples)
                from_weights = {t for t in _tuples_of_weights(self.arity, self.weights)}
                if explicit != from_weights:
                    raise StructureError("explicit tuples disagree with weight set")

    def contains(self, tup: Sequence[int]) -> bool:
        if len(tup) != self.arity:
            raise StructureError(f"arity mismatch: {len(tup)} vs {self.arity}")
        if self.symmetric or self.explicit_tuples is None:
            return sum(tup) in self.weights
        return tuple(tup) in self.explicit_tuples

    def tuples(self, max_arity: int = MAX_ENUM_ARITY) -> Iterator[tuple]:
        """Enumerate member tuples (lexicographic order)."""
        if self.explicit_tuples is not None and not self.symmetric:
            yield from sorted(self.explicit_tuples)
            return
        if self.arity > max_arity:
            raise StructureError(f"refusing to enumerate arity {self.arity} relation")
        yield from _tuples_of_weights(self.arity, self.weights)

    def count_tuples(self) -> int:
        from math import comb

        if self.explicit_tuples is not None and not self.symmetric:
            return len(self.explicit_tuples)
        return sum(comb(self.arity, w) for w in self.weights)

    def is_neq(self) -> bool:
        return self.arity == 2 and self.weights == frozenset([1])

    def is_full(self) -> bool:
        return len(self.weights) == self.arity + 1

    def is_empty(self) -> bool:
        return not self.weights and not self.explicit_tuples

    def swap01(self) -> "BoolRelation":
        """The relation with 0 and 1 exchanged (weight w becomes arity-w)."""
        weights = frozenset(self.arity - w for w in self.weights)
        explicit = None
        if self.explicit_tuples is not None:
            explicit = tuple(sorted(tuple(1 - x for x in t) for t in self.explicit_tuples))
        return BoolRelation(self.arity, weights, self.symmetric, explicit,
                            name=f"swap({self.name})" if self.name else "")

    def __str__(self):
        return self.name or f"weights{sorted(self.weights)}/{self.arity}"


def _tuples_of_weights(arity: int, weights: frozenset) -> Iterator[tuple]:
    for w in sorted(weights):
        for ones in combinations(range(arity), w):
            t = [0] * arity
            for i in ones:
                t[i] = 1
            yield tuple(t)


def build_family(kind: str, *args: int) -> BoolRelation:
    """Build one of the standard symmetric relation families.

    exact/atmost/atleast take (r, s); odd/even/nae/full/const take (s,);
    neq takes no arguments and has arity 2.
    """
    if kind not in FAMILY_KINDS:
        raise StructureError(f"unknown family kind {kind!r}")
    if kind == "neq":
        if args:
            raise StructureError("neq takes no parameters")
        return BoolRelation(2, frozenset([1]), symmetric=True,
                            explicit_tuples=((0, 1), (1, 0)), name="neq")
    if kind in ("exact", "atmost", "atleast"):
        if len(args) != 2:
            raise StructureError(f"{kind} needs (r, s)")
        r, s = args
    else:
        if len(args) != 1:
            raise StructureError(f"{kind} needs (s,)")
        r, s = None, args[0]
    if s < 1:
        raise StructureError("arity s must be >= 1")
    if r is not None and not (0 <= r <= s):
        raise StructureError(f"r={r} outside 0..{s}")

    if kind == "odd":
        weights, name = frozenset(w for w in range(s + 1) if w % 2 == 1), f"odd {s}"
    elif kind == "even":
        weights, name = frozenset(w for w in range(s + 1) if w % 2 == 0), f"even {s}"
    elif kind == "exact":
        weights, name = frozenset([r]), f"rin {r} {s}"
    elif kind == "atmost":
        weights, name = frozenset(range(0, r + 1)), f"atmost {r} {s}"
    elif kind == "atleast":
        weights, name = frozenset(range(r, s + 1)), f"atleast {r} {s}"
    elif kind == "nae":
        weights, name = frozenset(range(1, s)), f"nae {s}"
    elif kind == "full":
        weights, name = frozenset(range(0, s + 1)), f"full {s}"
    else:  # const
        weights, name = frozenset([0, s]), f"const {s}"
    return BoolRelation(s, weights, name=name)


def contains(rel: BoolRelation, tup: Sequence[int]) -> bool:
    return rel.contains(tup)


@dataclass(frozen=True)
class Structure:
    """A finite relational structure: a domain plus indexed relations."""

    domain: tuple
    relations: tuple  # tuple of frozensets of tuples
    arities: Optional[tuple] = None  # needed when a relation is empty

    def __post_init__(self):
        dom = set(self.domain)
        for rel in self.relations:
            for t in rel:
                if any(x not in dom for x in t):
                    raise StructureError(f"tuple {t} uses elements outside the domain")
        if self.arities is None:
            inferred = []
            for rel in self.relations:
                if not rel:
                    raise StructureError("empty relation needs explicit arities")
                inferred.append(len(next(iter(rel))))
            object.__setattr__(self, "arities", tuple(inferred))
        elif len(self.arities) != len(self.relations):
            raise StructureError("arities/relations length mismatch")


@dataclass(frozen=True)
class Instance:
    """A constraint instance: variables 0..var_count-1 and indexed constraints."""

    var_count: int
    constraints: tuple  # tuple of (relation_index, variable tuple)

    def __post_init__(self):
        if self.var_count < 0:
            raise StructureError("var_count must be >= 0")
        for idx, tup in self.constraints:
            if any(not (0 <= v < self.var_count) for v in tup):
                raise StructureError(f"variable out of range in constraint {(idx, tup)}")


@dataclass(frozen=True)
class Template:
    """A promise template: a list of (A-side, B-side) relation pairs.

    Construction checks that the A-side structure maps homomorphically into
    the B-side one, so every value of this type is a genuine template.  Pass
    check_promise=False to hold a pair list that is not a template (useful
    when probing relaxation relations between arbitrary pair lists).
    """

    pairs: tuple
    check_promise: bool = True

    def __post_init__(self):
        for a, b in self.pairs:
            if a.arity != b.arity:
                raise StructureError(f"pair arity mismatch: {a} vs {b}")
        if (self.check_promise and self.pairs
                and hom_exists(self.side_structure("A"), self.side_structure("B")) is None):
            raise StructureError("no homomorphism from the A side to the B side")

    def side_structure(self, side: str) -> Structure:
        idx = 0 if side == "A" else 1
        rels = tuple(frozenset(pair[idx].tuples()) for pair in self.pairs)
        arities = tuple(pair[idx].arity for pair in self.pairs)
        return Structure(domain=(1, 0), relations=rels, arities=arities)

    def swap01(self) -> "Template":
        return Template(tuple((a.swap01(), b.swap01()) for a, b in self.pairs),
                        check_promise=self.check_promise)

    def arity_of(self, pair_index: int) -> int:
        return self.pairs[pair_index][0].arity


def structure_to_instance(s: Structure):
    """View a structure as an instance over its own elements.

    Returns (instance, element list); variable i stands for element i.
    """
    index = {e: i for i, e in enumerate(s.domain)}
    constraints = []
    for ri, rel in enumerate(s.relations):
        for t in sorted(rel):
            constraints.append((ri, tuple(index[x] for x in t)))
    return Instance(len(s.domain), tuple(constraints)), list(s.domain)


def hom_exists(x, target: Structure) -> Optional[dict]:
    """Search for a homomorphism from `x` (Instance or Structure) to `target`.

    Returns a dict variable -> target element, or None.  Branching is over
    variables in index order; values are tried in the order of
    `target.domain`, so the witness is deterministic.
    """
    if isinstance(x, Structure):
        inst, elements = structure_to_instance(x)
        sol = hom_exists(inst, target)
        if sol is None:
            return None
        return {elements[v]: val for v, val in sol.items()}
    inst = x
    if len({ri for ri, _ in inst.constraints} - set(range(len(target.relations)))) > 0:
        raise StructureError("instance refers to relations the structure lacks")
    for ri, tup in inst.constraints:
        if len(tup) != target.arities[ri]:
            raise StructureError("constraint arity does not match target relation")

    domains = [list(target.domain) for _ in range(inst.var_count)]
    cons = [(list(target.relations[ri]), tup) for ri, tup in inst.constraints]

    def prune(doms) -> bool:
        # arc consistency on unary projections, to a fixpoint
        changed = True
        while changed:
            changed = False
            for rel, tup in cons:
                support = [set() for _ in tup]
                for t in rel:
                    if all(t[i] in doms[v] for i, v in enumerate(tup)):
                        for i in range(len(tup)):
                            support[i].add(t[i])
                for i, v in enumerate(tup):
                    newdom = [val for val in doms[v] if val in support[i]]
                    if len(newdom) < len(doms[v]):
                        doms[v] = newdom
                        changed = True
                    if not doms[v]:
                        return False
        return True

    def search(doms, var):
        if var == inst.var_count:
            return {}
        for val in list(doms[var]):
            trial = [list(d) for d in doms]
            trial[var] = [val]
            if prune(trial):
                rest = search(trial, var + 1)
                if rest is not None:
                    rest[var] = val
                    return rest
        return None

    if not prune(domains):
        return None
    sol = search(domains, 0)
    if sol is None:
        return None
    return {v: sol[v] for v in range(inst.var_count)}


def is_relaxation(t_prime: Template, t: Template) -> bool:
    """True iff t_prime relaxes t: A' -> A and B -> B' (as indexed structures)."""
    if len(t_prime.pairs) != len(t.pairs):
        raise StructureError("templates have different signatures")
    for (a1, b1), (a2, b2) in zip(t_prime.pairs, t.pairs):
        if a1.arity != a2.arity:
            raise StructureError("templates have different signatures")
    fwd = hom_exists(t_prime.side_structure("A"), t.side_structure("A"))
    if fwd is None:
        return False
    back = hom_exists(t.side_structure("B"), t_prime.side_structure("B"))
    return back is not None


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

_SPEC_ARG_COUNT = {"neq": 0, "odd": 1, "even": 1, "nae": 1, "full": 1,
                   "rin": 2, "atmost": 2, "atleast": 2, "explicit": 2}

_SPEC_TO_KIND = {"rin": "exact"}


class ParseError(StructureError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _parse_relation_spec(tokens: list, pos: int, lineno: int):
    if pos >= len(tokens):
        raise ParseError(lineno, "missing relation spec")
    head = tokens[pos]
    if head not in _SPEC_ARG_COUNT:
        raise ParseError(lineno, f"unknown relation spec {head!r}")
    argc = _SPEC_ARG_COUNT[head]
    args = tokens[pos + 1: pos + 1 + argc]
    if len(args) != argc:
        raise ParseError(lineno, f"{head} expects {argc} parameter(s)")
    if head == "explicit":
        try:
            s = int(args[0])
        except ValueError:
            raise ParseError(lineno, f"bad arity {args[0]!r}")
        tups = []
        for part in args[1].split(";"):
            bits = tuple(int(c) for c in part.split(","))
            tups.append(bits)
        try:
            rel = BoolRelation(s, frozenset(), symmetric=False,
                               explicit_tuples=tuple(tups), name=f"explicit {s}")
        except StructureError as e:
            raise ParseError(lineno, str(e))
        return rel, pos + 1 + argc
    try:
        nums = [int(a) for a in args]
    except ValueError:
        raise ParseError(lineno, f"bad integer in {args}")
    kind = _SPEC_TO_KIND.get(head, head)
    try:
        rel = build_family(kind, *nums)
    except StructureError as e:
        raise ParseError(lineno, str(e))
    return rel, pos + 1 + argc


def parse_template(text: str) -> Template:
    """Parse the line-oriented template format (see `format_template`)."""
    lines = text.splitlines()
    pairs = []
    state = "expect_header"
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if state == "expect_header":
            if tokens != ["template"]:
                raise ParseError(lineno, "expected 'template' header")
            state = "body"
        elif state == "body":
            if tokens == ["end"]:
                state = "done"
                continue
            if tokens[0] != "pair":
                raise ParseError(lineno, f"expected 'pair' or 'end', got {tokens[0]!r}")
            rel_a, pos = _parse_relation_spec(tokens, 1, lineno)
            rel_b, pos = _parse_relation_spec(tokens, pos, lineno)
            if pos != len(tokens):
                raise ParseError(lineno, f"trailing tokens {tokens[pos:]}")
            if rel_a.arity != rel_b.arity:
                raise ParseError(lineno, "pair arities differ")
            pairs.append((rel_a, rel_b))
        else:
            raise ParseError(lineno, "content after 'end'")
    if state != "done":
        raise ParseError(len(lines) or 1, "missing 'end'")
    try:
        return Template(tuple(pairs))
    except StructureError as e:
        raise ParseError(len(lines), str(e))


def format_template(t: Template) -> str:
    out = ["template"]
    for a, b in t.pairs:
        out.append(f"pair {_format_relation(a)} {_format_relation(b)}")
    out.append("end")
    return "\n".join(out) + "\n"


def _format_relation(rel: BoolRelation) -> str:
    if rel.is_neq():
        return "neq"
    if rel.name and not rel.name.startswith("swap("):
        return rel.name
    if not rel.symmetric and rel.explicit_tuples is not None:
        body = ";".join(",".join(str(x) for x in t) for t in sorted(rel.explicit_tuples))
        return f"explicit {rel.arity} {body}"
    s, w = rel.arity, set(rel.weights)
    if w == set(range(0, s + 1)):
        return f"full {s}"
    if w == {x for x in range(s + 1) if x % 2 == 1}:
        return f"odd {s}"
    if w == {x for x in range(s + 1) if x % 2 == 0}:
        return f"even {s}"
    if w == set(range(1, s)):
        return f"nae {s}"
    if len(w) == 1:
        return f"rin {next(iter(w))} {s}"
    if w and w == set(range(0, max(w) + 1)):
        return f"atmost {max(w)} {s}"
    if w and w == set(range(min(w), s + 1)):
        return f"atleast {min(w)} {s}"
    body = ";".join(",".join(str(x) for x in t) for t in rel.tuples())
    return f"explicit {s} {body}"


def parse_instance(text: str) -> Instance:
    """Parse the instance format: `vars <n>` then `c <pair> <v1> ... <vk>` lines."""
    var_count = None
    constraints = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if var_count is None:
            if tokens[0] != "vars" or len(tokens) != 2:
                raise ParseError(lineno, "expected 'vars <n>'")
            try:
                var_count = int(tokens[1])
            except ValueError:
                raise ParseError(lineno, f"bad variable count {tokens[1]!r}")
            continue
        if tokens[0] != "c":
            raise ParseError(lineno, f"expected constraint line, got {tokens[0]!r}")
        try:
            nums = [int(x) for x in tokens[1:]]
        except ValueError:
            raise ParseError(lineno, "bad integer in constraint")
        if len(nums) < 2:
            raise ParseError(lineno, "constraint needs a pair index and variables")
        constraints.append((nums[0], tuple(nums[1:])))
    if var_count is None:
        raise ParseError(1, "missing 'vars' line")
    try:
        inst = Instance(var_count, tuple(constraints))
    except StructureError as e:
        raise ParseError(1, str(e))
    return inst


def format_instance(inst: Instance) -> str:
    out = [f"vars {inst.var_count}"]
    for ri, tup in inst.constraints:
        out.append("c " + str(ri) + " " + " ".join(str(v) for v in tup))
    return "\n".join(out) + "\n"


def check_instance_against(inst: Instance, t: Template) -> None:
    """Raise unless every constraint references a valid pair at the right arity."""
    for ri, tup in inst.constraints:
        if not (0 <= ri < len(t.pairs)):
            raise StructureError(f"constraint pair index {ri} out of range")
        if len(tup) != t.arity_of(ri):
            raise StructureError(f"constraint on pair {ri} has arity {len(tup)}, "
                                 f"expected {t.arity_of(ri)}")
