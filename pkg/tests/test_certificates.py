import json
import random
from fractions import Fraction

import pytest

from pcsp.certificates import (CertificateError, EvalTuple,
                               GenerationError, ProofContext, area,
                               as_almost_rectangle, build_shift_matrix_1d,
                               build_shift_matrix_2d, certificate_from_json,
                               certificate_to_json, complement_blocks,
                               complete_plausible, find_minimal_p,
                               gen_certificate, gen_stepone_chain, halve,
                               is_plausible_1d, is_plausible_2d, near_threshold,
                               propagate, verify_certificate)
from pcsp.structures import build_family
from conftest import template


def B(*args):
    return build_family(*args)


CTX137 = ProofContext(1, 3, "4a", 7, 0)
CTX245 = ProofContext(2, 4, "4a", 5, 0)

T13 = template((B("exact", 1, 3), B("nae", 3)))
T24 = template((B("exact", 2, 4), B("nae", 4)))


def canonical_template(ctx):
    return ctx.canonical_template()


# -- contexts, tuples, areas ----------------------------------------------------

def test_context_invariants():
    assert CTX137.theta == Fraction(1, 3)
    assert CTX137.a == 16 and CTX137.n == 49
    assert CTX245.theta == Fraction(1, 2) and CTX245.a == 12
    with pytest.raises(CertificateError):
        ProofContext(1, 3, "4a", 8, 0)   # not prime
    with pytest.raises(CertificateError):
        ProofContext(1, 3, "4a", 5, 0)   # 5 != 1 mod 3
    with pytest.raises(CertificateError):
        ProofContext(3, 5, "4a", 11, 0)  # not normalized (2r > s)
    with pytest.raises(CertificateError):
        ProofContext(1, 3, "1", 7, 0)    # case 1 needs 1 < r < s/2


def test_area_examples():
    p = 7
    assert area((p,) * p, p) == 1
    assert area((0,) * p, p) == 0
    assert area(EvalTuple.flat(16, 7), 7) == Fraction(16, 49)
    assert EvalTuple.flat(16, 7).blocks == (7, 7, 2, 0, 0, 0, 0)


def test_almost_rectangle_recognition():
    ar = as_almost_rectangle((3, 3, 3, 2, 2, 2, 2))
    assert (ar.z1, ar.z2, ar.count1, ar.step, ar.shift) == (3, 2, 3, 1, 0)
    shifted = as_almost_rectangle((2, 2, 3, 3, 3, 2, 2))
    assert shifted is not None and shifted.step == 1
    assert as_almost_rectangle((1, 2, 3, 1, 1, 1, 1)) is None
    assert as_almost_rectangle((3, 2, 3, 2, 3, 2, 2)) is None  # not contiguous
    const = as_almost_rectangle((4, 4, 4, 4, 4, 4, 4))
    assert const.step == 0


# -- plausibility ----------------------------------------------------------------

def test_plausible_1d_examples():
    assert is_plausible_1d([16, 16, 17], CTX137)
    assert not is_plausible_1d([16, 16, 16], CTX137)
    ctx2 = ProofContext(2, 4, "2", 5, 0)
    assert is_plausible_1d([0, 0, 0, 0], ctx2)
    assert is_plausible_1d([12, 12, 12, 12], ctx2)
    with pytest.raises(CertificateError):
        is_plausible_1d([16, 16], CTX137)


def test_shift_matrix_1d_columns():
    matrix, ok = build_shift_matrix_1d([16, 16, 17], CTX137)
    assert ok and len(matrix) == 3 and len(matrix[0]) == 49
    for j in range(49):
        assert sum(row[j] for row in matrix) == 1


def test_shift_matrix_1d_uniform_budget():
    # exact-budget contexts never split evenly (r*n is 1 mod s), so the
    # equal-entry family lives in the at-most case
    ctx = ProofContext(2, 4, "2", 5, 0)
    matrix, ok = build_shift_matrix_1d([12, 12, 12, 12], ctx)
    assert ok
    for j in range(25):
        assert sum(row[j] for row in matrix) <= 2


def test_shift_matrix_1d_rejects_implausible():
    with pytest.raises(CertificateError):
        build_shift_matrix_1d([16, 16, 16], CTX137)


def test_shift_matrix_2d_from_completion():
    rows, l = complete_plausible((3, 3, 3, 2, 2, 2, 2), 2, CTX137)
    family = [r.blocks for r in rows] + [l.blocks]
    matrix, ok = build_shift_matrix_2d(family, CTX137)
    assert ok and len(matrix) == 3 and len(matrix[0]) == 49
    for j in range(49):
        assert sum(row[j] for row in matrix) == 1


def random_plausible_2d(ctx, rng):
    """Random s block vectors with every column summing to r*p."""
    cols = []
    for _ in range(ctx.p):
        while True:
            cuts = sorted(rng.randint(0, ctx.r * ctx.p) for _ in range(ctx.s - 1))
            parts = [b - a for a, b in zip([0] + cuts, cuts + [ctx.r * ctx.p])]
            if all(v <= ctx.p for v in parts):
                cols.append(parts)
                break
    return [tuple(col[j] for col in cols) for j in range(ctx.s)]


def test_shift_matrix_2d_random(rng):
    ctx = ProofContext(2, 4, "4a", 5, 0)
    for _ in range(25):
        fam = random_plausible_2d(ctx, rng)
        assert is_plausible_2d(fam, ctx)
        matrix, ok = build_shift_matrix_2d(fam, ctx)
        assert ok
        for j in range(ctx.n):
            assert sum(row[j] for row in matrix) == 2


# -- completion and halving ------------------------------------------------------

def test_complete_plausible_exact_rectangle():
    rows, l = complete_plausible((2,) * 7, 1, CTX137)
    assert l.step == 0 and l.blocks == (5,) * 7


def test_complete_plausible_example():
    rows, l = complete_plausible((3, 3, 3, 2, 2, 2, 2), 1, CTX137)
    assert rows[0].blocks == (3, 3, 3, 2, 2, 2, 2)
    assert l.blocks == (4, 4, 4, 5, 5, 5, 5)
    for i in range(7):
        assert rows[0].blocks[i] + l.blocks[i] == 7


def test_complete_plausible_areas_sum():
    ctx = ProofContext(2, 4, "4a", 5, 0)
    z = (3, 3, 3, 2, 2)
    rows, l = complete_plausible(z, 3, ctx)
    total = sum(area(r.blocks, 5) for r in rows) + area(l.blocks, 5)
    assert total == 2  # the whole family is worth r
    for r in rows:
        assert area(r.blocks, 5) == area(z, 5)


def test_complete_plausible_rejects_bad_m():
    with pytest.raises(CertificateError):
        complete_plausible((3, 3, 3, 2, 2, 2, 2), 3, CTX137)


def test_halve_examples(rng):
    l1, l2 = halve((8,) * 6 + (10,) * 7)
    assert area(l1.blocks, 13) + area(l2.blocks, 13) == area((8,) * 6 + (10,) * 7, 13)
    with pytest.raises(CertificateError):
        halve((3, 3, 3, 2, 2, 2, 2))
    for _ in range(100):
        p = rng.choice([7, 13])
        step = rng.randint(2, 4)
        z2 = rng.randint(0, p - step)
        c = rng.randint(1, p - 1)
        shift = rng.randint(0, p - 1)
        blocks = tuple([z2 + step] * c + [z2] * (p - c))
        blocks = blocks[-shift:] + blocks[:-shift]
        h1, h2 = halve(blocks)
        assert h1.step < step and h2.step < step


# -- step-one chains -------------------------------------------------------------

def test_chain_137_tuples_spec_values():
    chain = gen_stepone_chain(CTX137)
    tuples = [tuple(n.justify["tuples"][0]) for n in chain]
    assert tuples[0] == (16, 16, 17)
    assert tuples[1] == (15, 17, 17)
    # families indexed by i = 2..a: first (16+i, 15, 18-i), then (16-i, 16+i, 17)
    for i in range(2, 17):
        assert tuples[2 * i - 2] == (16 + i, 15, 18 - i)
        assert tuples[2 * i - 1] == (16 - i, 16 + i, 17)
    for t in tuples:
        assert sum(t) == 49 and is_plausible_1d(list(t), CTX137)


def test_chain_245_first_step():
    chain = gen_stepone_chain(CTX245)
    assert tuple(chain[0].justify["tuples"][0]) == (12, 12, 13, 13)
    for n in chain:
        assert is_plausible_1d(n.justify["tuples"][0], CTX245)


def test_chain_case2_constant_tuples():
    ctx = ProofContext(2, 4, "2", 5, 0)
    chain = gen_stepone_chain(ctx)
    plaus = [n for n in chain if n.justify["tag"] == "plausible1d"]
    for k, node in enumerate(plaus[: ctx.a + 1]):
        assert node.justify["tuples"][0] == [k] * 4


def test_chain_case1_shape():
    ctx = ProofContext(2, 5, "1", 11, 0)
    chain = gen_stepone_chain(ctx)
    first = chain[0].justify["tuples"][0]
    assert sorted(first) == sorted([60] * 4 + [2])
    assert sum(first) == 2 * 121


# -- propagation -----------------------------------------------------------------

def test_propagate_forces_tame_pattern_137():
    chain = gen_stepone_chain(CTX137)
    res = propagate(chain, B("nae", 3), CTX137)
    assert res.status == "ok"
    for k in range(0, 17):
        assert res.forced[k] == 0
    for k in range(17, 33):
        assert res.forced[k] == 1


def test_propagate_forces_tame_pattern_245():
    chain = gen_stepone_chain(CTX245)
    res = propagate(chain, B("nae", 4), CTX245)
    assert res.status == "ok" and res.matches_tame_pattern(CTX245)
    assert res.forced[12] == 0 and res.forced[13] == 1


def test_propagate_case1_absolute_zero():
    ctx = ProofContext(2, 5, "1", 11, 0)
    chain = gen_stepone_chain(ctx)
    res = propagate(chain, B("atmost", 3, 5), ctx)
    assert res.status == "ok" and res.absolute[0] == 0 and res.absolute[121] == 1


def test_propagate_incomplete_when_node_deleted():
    chain = gen_stepone_chain(CTX137)
    res = propagate(chain[:-1], B("nae", 3), CTX137)
    assert res.status == "incomplete"
    assert res.missing  # reported, not a bogus contradiction


def test_propagate_vacuous_against_full_relation():
    chain = gen_stepone_chain(CTX137)
    res = propagate(chain, B("full", 3), CTX137)
    assert res.status == "incomplete"


def test_propagate_order_independent(rng):
    chain = gen_stepone_chain(CTX137)
    baseline = propagate(chain, B("nae", 3), CTX137)
    for _ in range(5):
        shuffled = chain[:]
        rng.shuffle(shuffled)
        res = propagate(shuffled, B("nae", 3), CTX137)
        assert res.status == "ok" and res.forced == baseline.forced


# -- certificates ----------------------------------------------------------------

def test_certificate_roundtrip_b0():
    cert = gen_certificate(CTX137)
    assert cert.conclusion == "tame_base"
    assert verify_certificate(cert, T13).ok
    text = certificate_to_json(cert)
    again = certificate_from_json(text)
    assert certificate_to_json(again) == text
    assert verify_certificate(again, T13).ok


def test_certificate_b0_245():
    cert = gen_certificate(CTX245)
    assert verify_certificate(cert, T24).ok


def test_certificate_rejects_wrong_template():
    cert = gen_certificate(CTX137)
    wrong = template((B("exact", 1, 3), B("full", 3)))
    result = verify_certificate(cert, wrong)
    assert not result.ok and result.failed_node is not None


def test_certificate_tamper_block_height():
    cert = gen_certificate(ProofContext(1, 3, "4a", 13, 1))
    obj = json.loads(certificate_to_json(cert))
    for node in obj["nodes"]:
        if node["claim"].get("kind") == "tame":
            node["claim"]["blocks"][0] = (node["claim"]["blocks"][0] + 1) % 14
            node["justify"]["blocks"][0] = node["claim"]["blocks"][0]
            break
    bad = certificate_from_json(json.dumps(obj))
    result = verify_certificate(bad, T13)
    assert not result.ok and result.failed_node is not None


def test_full_certificate_one_in_three():
    p, cert = find_minimal_p(1, 3, "4a", 1)
    assert p == 13
    assert cert.conclusion == "contradiction"
    assert verify_certificate(cert, T13).ok
    # the swapped template is covered by the same certificate
    swapped = template((B("exact", 2, 3), B("nae", 3)))
    assert verify_certificate(cert, swapped).ok


def test_full_certificates_other_cases():
    configs = [("2", 2, 4, 29), ("3", 2, 4, 29), ("1", 2, 5, 31), ("4b", 2, 5, 31)]
    for case, r, s, p in configs:
        ctx = ProofContext(r, s, case, p, 1)
        cert = gen_certificate(ctx)
        assert cert.conclusion == "contradiction"
        assert verify_certificate(cert, canonical_template(ctx)).ok, (case, r, s)


def test_generation_reports_small_p():
    with pytest.raises(GenerationError):
        gen_certificate(ProofContext(1, 3, "4a", 7, 1))


def test_complement_blocks():
    assert complement_blocks((3, 3, 3, 2, 2, 2, 2)) == (4, 4, 4, 5, 5, 5, 5)


def test_near_threshold_flag():
    ctx = ProofContext(1, 3, "4a", 13, 1)
    zb1 = (5,) * 6 + (3,) * 7
    zb2 = (5,) * 6 + (4,) * 7
    assert near_threshold(zb1, ctx) and near_threshold(zb2, ctx)
    assert not near_threshold((13,) * 6 + (0,) * 7, ctx)


# -- coherence with concrete functions at p = 3 -----------------------------------
#
# No bounded doubly cyclic polymorphism exists at p = 3 for these templates,
# so the engine's conclusions cannot be compared to real polymorphisms.  The
# construction steps, however, are statements about arbitrary cyclic or
# doubly cyclic functions, and those exist in abundance.

def _random_cyclic_bool(rng, n):
    from pcsp.polymorphisms import function_from_callable

    values = {}

    def val(xs):
        orbit = min(tuple(xs[i:] + xs[:i]) for i in range(n))
        if orbit not in values:
            values[orbit] = rng.randrange(2)
        return values[orbit]

    return function_from_callable(n, lambda xs: val(tuple(xs)))


def test_stagger_rows_are_shifts_for_cyclic_functions(rng):
    """Row i of the one-dimensional stagger has the same value as the plain
    k_i-run under any cyclic function: the symbolic engine's row/value
    identification checked on twenty concrete functions."""
    ctx = ProofContext(1, 3, "4a", 3, 0)  # p=3 keeps tables materializable
    for _ in range(20):
        f = _random_cyclic_bool(rng, 9)
        ks = _pick_plausible(ctx, rng)
        matrix, _ = build_shift_matrix_1d(ks, ctx)
        for row, k in zip(matrix, ks):
            run = tuple([1] * k + [0] * (ctx.n - k))
            assert f(row) == f(run)


def _pick_plausible(ctx, rng):
    while True:
        a = rng.randint(0, ctx.n)
        b = rng.randint(0, ctx.n - a if ctx.n - a >= 0 else 0)
        c = ctx.r * ctx.n - a - b
        if 0 <= c <= ctx.n:
            return [a, b, c]


def test_glued_rows_are_blockwise_shifts_for_doubly_cyclic(rng):
    """Rows of the two-dimensional stagger agree with the original block
    tuples under any doubly cyclic function."""
    from pcsp.polymorphisms import function_from_callable

    ctx = ProofContext(1, 3, "4a", 3, 0)
    p = 3

    def materialize(blocks):
        return tuple(v for k in blocks for v in [1] * k + [0] * (p - k))

    for _ in range(20):
        # doubly cyclic: constant on orbits of in-block and block rotations
        values = {}

        def orbit(xs):
            blocks = [tuple(xs[j * p:(j + 1) * p]) for j in range(p)]
            best = None
            for shift in range(p):
                rot = blocks[shift:] + blocks[:shift]
                for inner in range(p ** p):
                    cand = []
                    q = inner
                    for blk in rot:
                        i = q % p
                        q //= p
                        cand.extend(blk[i:] + blk[:i])
                    cand = tuple(cand)
                    if best is None or cand < best:
                        best = cand
            return best

        def val(xs):
            key = orbit(tuple(xs))
            if key not in values:
                values[key] = rng.randrange(2)
            return values[key]

        t = function_from_callable(9, lambda xs: val(tuple(xs)))
        fam = random_plausible_2d(ctx, rng)
        matrix, _ = build_shift_matrix_2d(fam, ctx)
        for row, blocks in zip(matrix, fam):
            assert t(row) == t(materialize(blocks))


def test_generation_honest_under_paper_preset():
    """The paper's own window constants put certificates out of desk reach;
    the generator must say so rather than emit something weaker."""
    with pytest.raises(GenerationError):
        find_minimal_p(1, 3, "4a", 1, preset="paper", p_limit=60)
