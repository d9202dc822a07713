import itertools
import random
from fractions import Fraction

import pytest

from pcsp.classifier import UnsupportedTemplateError
from pcsp.solvers import (GF2System, IntLinearSystem, RationalInequalitySystem,
                          brute_force_promise, solve_diophantine, solve_gf2,
                          solve_lp_feasible, solve_pcsp)
from pcsp.structures import Instance, StructureError, Template, build_family
from conftest import random_instance, template, with_neq


def B(*args):
    return build_family(*args)


# -- GF(2) ---------------------------------------------------------------------

def test_gf2_inconsistent_triangle():
    sys = GF2System(3, (0b011, 0b110, 0b101), (1, 1, 1))
    assert solve_gf2(sys) is None


def test_gf2_deterministic_witness():
    assert solve_gf2(GF2System(3, (0b111,), (1,))) == [1, 0, 0]


def test_gf2_against_exhaustive(rng):
    for _ in range(500):
        n = rng.randint(1, 10)
        m = rng.randint(1, 12)
        rows = tuple(rng.getrandbits(n) for _ in range(m))
        rhs = tuple(rng.getrandbits(1) for _ in range(m))
        got = solve_gf2(GF2System(n, rows, rhs))
        brute = any(
            all(bin(bits & mask).count("1") % 2 == b for mask, b in zip(rows, rhs))
            for bits in range(1 << n))
        assert (got is not None) == brute
        if got is not None:
            x = sum(v << i for i, v in enumerate(got))
            assert all(bin(x & mask).count("1") % 2 == b
                       for mask, b in zip(rows, rhs))


# -- integers ------------------------------------------------------------------

def test_diophantine_divisibility():
    assert solve_diophantine(IntLinearSystem(1, ((3,),), (1,))) is None


def test_diophantine_witness():
    sys = IntLinearSystem(4, ((1, 1, 1, 0), (1, 1, 0, 1)), (1, 1))
    assert solve_diophantine(sys) == [1, 0, 0, 0]


def test_diophantine_against_bounded_search(rng):
    for _ in range(150):
        n = rng.randint(1, 4)
        m = rng.randint(1, 3)
        rows = tuple(tuple(rng.randint(-3, 3) for _ in range(n)) for _ in range(m))
        # plant a small solution half the time, else use a random rhs
        if rng.random() < 0.5:
            x0 = [rng.randint(-2, 2) for _ in range(n)]
            rhs = tuple(sum(r * x for r, x in zip(row, x0)) for row in rows)
        else:
            rhs = tuple(rng.randint(-4, 4) for _ in range(m))
        got = solve_diophantine(IntLinearSystem(n, rows, rhs))
        box = any(
            all(sum(r * x for r, x in zip(row, cand)) == b
                for row, b in zip(rows, rhs))
            for cand in itertools.product(range(-5, 6), repeat=n))
        if got is not None:
            assert all(sum(r * x for r, x in zip(row, got)) == b
                       for row, b in zip(rows, rhs))
        elif box:
            raise AssertionError(f"missed solvable system {rows} = {rhs}")


def test_diophantine_big_numbers():
    sys = IntLinearSystem(2, ((10 ** 20, -1),), (7,))
    x = solve_diophantine(sys)
    assert x is not None and 10 ** 20 * x[0] - x[1] == 7


# -- rational feasibility --------------------------------------------------------

def test_lp_feasible_example():
    sys = RationalInequalitySystem(
        3, (((1, 1, 1), "<=", 1), ((1, 1, 0), "=", 1), ((1, 0, 1), "=", 1)))
    x = solve_lp_feasible(sys)
    assert x is not None
    assert x[0] + x[1] == 1 and x[0] + x[2] == 1 and sum(x) <= 1


def test_lp_infeasible_example():
    sys = RationalInequalitySystem(2, (((1, 1), "<=", 0), ((1, 1), "=", 1)))
    assert solve_lp_feasible(sys) is None


def _vertex_oracle(sys: RationalInequalitySystem) -> bool:
    """Feasibility by enumerating candidate vertices of the boxed system."""
    n = sys.n_vars
    planes = []
    for coeffs, sense, rhs in sys.rows:
        planes.append((tuple(Fraction(c) for c in coeffs), Fraction(rhs)))
    for i in range(n):
        unit = tuple(Fraction(1 if j == i else 0) for j in range(n))
        planes.append((unit, Fraction(0)))
        planes.append((unit, Fraction(1)))

    def satisfies(x):
        for coeffs, sense, rhs in sys.rows:
            val = sum(Fraction(c) * xi for c, xi in zip(coeffs, x))
            if sense == "<=" and val > rhs:
                return False
            if sense == ">=" and val < rhs:
                return False
            if sense == "=" and val != rhs:
                return False
        return all(0 <= xi <= 1 for xi in x)

    for subset in itertools.combinations(range(len(planes)), n):
        mat = [list(planes[i][0]) + [planes[i][1]] for i in subset]
        # exact Gaussian elimination
        x = _solve_square(mat, n)
        if x is not None and satisfies(x):
            return True
    return False


def _solve_square(mat, n):
    mat = [row[:] for row in mat]
    for col in range(n):
        piv = next((r for r in range(col, n) if mat[r][col] != 0), None)
        if piv is None:
            return None
        mat[col], mat[piv] = mat[piv], mat[col]
        inv = Fraction(1) / mat[col][col]
        mat[col] = [v * inv for v in mat[col]]
        for r in range(n):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [v - f * w for v, w in zip(mat[r], mat[col])]
    return [mat[i][n] for i in range(n)]


def test_lp_against_vertex_enumeration(rng):
    for _ in range(120):
        n = rng.randint(1, 4)
        m = rng.randint(1, 4)
        rows = []
        for _ in range(m):
            coeffs = tuple(rng.randint(-2, 2) for _ in range(n))
            sense = rng.choice(["<=", ">=", "="])
            rhs = Fraction(rng.randint(-2, 4), rng.randint(1, 3))
            rows.append((coeffs, sense, rhs))
        sys = RationalInequalitySystem(n, tuple(rows))
        assert (solve_lp_feasible(sys) is not None) == _vertex_oracle(sys)


# -- promise solving -------------------------------------------------------------

ONE_IN_THREE = template((B("exact", 1, 3), B("nae", 3)))


def test_solve_forced_no():
    ans = solve_pcsp(ONE_IN_THREE, Instance(1, ((0, (0, 0, 0)),)))
    assert not ans.yes


def test_solve_yes_with_witness():
    inst = Instance(4, ((0, (0, 1, 2)), (0, (0, 1, 3))))
    ans = solve_pcsp(ONE_IN_THREE, inst)
    assert ans.yes
    z = ans.witness
    assert z[0] + z[1] + z[2] == 1 and z[0] + z[1] + z[3] == 1
    bits = [1 if v >= 1 else 0 for v in z]
    for ri, tup in inst.constraints:
        assert ONE_IN_THREE.pairs[ri][1].contains(tuple(bits[v] for v in tup))


def test_solve_unsupported_template_raises():
    t = with_neq(B("nae", 3), B("nae", 3))
    with pytest.raises(UnsupportedTemplateError):
        solve_pcsp(t, Instance(2, ((0, (0, 1, 1)),)))


def test_solve_point_absorbing_template():
    t = template((B("exact", 1, 3), B("full", 3)))
    ans = solve_pcsp(t, Instance(2, ((0, (0, 1, 1)),)))
    assert ans.yes


def test_brute_force_examples():
    assert brute_force_promise(ONE_IN_THREE, Instance(1, ((0, (0, 0, 0)),))) == \
        (False, False)
    assert brute_force_promise(ONE_IN_THREE, Instance(3, ((0, (0, 1, 2)),))) == \
        (True, True)
    inst = Instance(3, ((0, (0, 1, 2)), (0, (1, 2, 0))))
    assert brute_force_promise(ONE_IN_THREE, inst) == (True, True)


def test_brute_force_cap(monkeypatch):
    monkeypatch.setenv("PCSP_MAX_BRUTE", "4")
    with pytest.raises(StructureError):
        brute_force_promise(ONE_IN_THREE, Instance(5, ()))
    assert brute_force_promise(ONE_IN_THREE, Instance(3, ()), cap=8) == (True, True)


CATALOG = {
    "parity3": with_neq(B("odd", 3), B("odd", 3)),
    "two_sat": with_neq(B("atmost", 1, 3), B("atmost", 1, 3)),
    "majority24": with_neq(B("atmost", 2, 4), B("atmost", 3, 4)),
    "majority_mirror": with_neq(B("atleast", 2, 3), B("atleast", 2, 3)),
    "one_in_three": ONE_IN_THREE,
    "two_in_four": template((B("exact", 2, 4), B("nae", 4))),
    "two_in_three": template((B("exact", 2, 3), B("nae", 3))),
    "exact_item1": with_neq(B("exact", 2, 5), B("atmost", 3, 5)),
}


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_promise_soundness_with_repeats(name, rng):
    """Promise contract under adversarial variable repetition."""
    t = CATALOG[name]
    for _ in range(60):
        inst = random_instance(t, rng, max_vars=6, max_cons=8, allow_repeats=True)
        a_sat, b_sat = brute_force_promise(t, inst)
        ans = solve_pcsp(t, inst)
        assert not (a_sat and not ans.yes), (name, inst)
        assert not (not b_sat and ans.yes), (name, inst)


def test_neq_self_loop_answers_no():
    t = with_neq(B("atmost", 2, 4), B("atmost", 3, 4))
    inst = Instance(2, ((1, (0, 0)),))
    assert not solve_pcsp(t, inst).yes


def test_odd_neq_cycle_answers_no():
    t = with_neq(B("atmost", 2, 4), B("atmost", 3, 4))
    inst = Instance(3, ((1, (0, 1)), (1, (1, 2)), (1, (2, 0)),
                        (0, (0, 1, 2, 0))))
    a_sat, b_sat = brute_force_promise(t, inst)
    assert not b_sat
    assert not solve_pcsp(t, inst).yes


def test_gf2_witness_is_a_homomorphism(rng):
    t = with_neq(B("odd", 3), B("odd", 3))
    for _ in range(40):
        inst = random_instance(t, rng, allow_repeats=True)
        ans = solve_pcsp(t, inst)
        if ans.yes:
            w = ans.witness
            for ri, tup in inst.constraints:
                assert t.pairs[ri][0].contains(tuple(w[v] for v in tup))
