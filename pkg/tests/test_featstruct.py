"""Unification algebra tests, including the disjunct-expansion oracle."""

import itertools
import random

import pytest

from hybridmt.featstruct import (
    Assign,
    Constraint,
    Exists,
    FeatStruct,
    OrBlock,
    PathRef,
    UnboundVariableError,
    XorBlock,
    apply_equations,
    canonical,
    evaluate_test,
    parse_equation,
    parse_equations,
    parse_featstruct,
    subsumes,
    unify,
)
from hybridmt.sexpr import parse_all

EMPTY = FeatStruct.empty()


# ---------------------------------------------------------------------
# Random structures and the ground-expansion oracle
# ---------------------------------------------------------------------

FEATS = "abcdefgh"
ATOMS = ["v1", "v2", "v3", "v4", "v5"]


def random_fs(rng, depth=0, max_depth=4):
    roll = rng.random()
    if depth >= max_depth or roll < 0.25 + 0.15 * depth:
        if rng.random() < 0.3:
            k = rng.randint(2, 3)
            return FeatStruct.disjunction(rng.sample(ATOMS, k))
        return FeatStruct.atom(rng.choice(ATOMS))
    nfeats = rng.randint(1, 3)
    feats = {}
    for feat in rng.sample(FEATS, nfeats):
        feats[feat] = random_fs(rng, depth + 1, max_depth)
    return FeatStruct.complex(feats)


def expand(fs):
    """All disjunction-free ground instances, as hashable trees."""
    if fs.is_atomic:
        return [("atom", a) for a in sorted(fs.allowed)]
    if fs.is_complex:
        names = sorted(fs.features)
        choices = [expand(fs.features[f]) for f in names]
        return [
            ("fs", tuple(zip(names, combo)))
            for combo in itertools.product(*choices)
        ]
    return [("empty",)]


def ground_unify(x, y):
    """Textbook unification of disjunction-free ground trees."""
    if x == ("empty",):
        return y
    if y == ("empty",):
        return x
    if x[0] == "atom" or y[0] == "atom":
        return x if x == y else None
    fx, fy = dict(x[1]), dict(y[1])
    merged = {}
    for feat in set(fx) | set(fy):
        if feat in fx and feat in fy:
            sub = ground_unify(fx[feat], fy[feat])
            if sub is None:
                return None
            merged[feat] = sub
        else:
            merged[feat] = fx.get(feat, fy.get(feat))
    return ("fs", tuple(sorted(merged.items())))


def oracle_set(a, b):
    out = set()
    for ga in expand(a):
        for gb in expand(b):
            g = ground_unify(ga, gb)
            if g is not None:
                out.add(g)
    return out


def test_unify_identity_element():
    f = parse_featstruct("((syn ((infl ta-form) (comp plus))))")
    assert unify(EMPTY, f) == f
    assert unify(f, EMPTY) == f


def test_unify_disjunction_intersection():
    a = parse_featstruct("((infl ta-form))")
    b = parse_featstruct("((infl (*OR* kihon ta-form rentai)))")
    assert unify(a, b) == a


def test_unify_distinct_atoms_fail():
    assert unify(parse_featstruct("((a x))"), parse_featstruct("((a y))")) is None


def test_unify_atom_vs_structure_fails():
    assert unify(parse_featstruct("((a x))"), parse_featstruct("((a ((b y))))")) is None


def test_unify_negation():
    neg = parse_featstruct("((form (*NOT* rentaidome)))")
    assert unify(neg, parse_featstruct("((form rentaidome))")) is None
    ok = unify(neg, parse_featstruct("((form kihon))"))
    assert ok.get(("form",)).atom_value == "kihon"


def test_negative_residue_survives_until_specialized():
    neg = parse_featstruct("((form (*NOT* rentaidome)))")
    other = parse_featstruct("((mood plain))")
    merged = unify(neg, other)
    assert merged is not None
    assert unify(merged, parse_featstruct("((form rentaidome))")) is None


def test_unify_preserves_reentrancy():
    a = parse_featstruct("((subj #1=((num sg))) (obj #1#))")
    b = parse_featstruct("((subj ((per 3))))")
    out = unify(a, b)
    # the constraint flows through the shared node to the other path
    assert out.get(("obj", "per")).atom_value == "3"
    assert out.get(("subj",)) is out.get(("obj",))


def test_unify_does_not_mutate_inputs():
    a = parse_featstruct("((x ((y q))))")
    b = parse_featstruct("((x ((z r))) (w s))")
    ca, cb = canonical(a), canonical(b)
    unify(a, b)
    assert canonical(a) == ca and canonical(b) == cb


def test_unify_oracle_1000_random_pairs():
    rng = random.Random(20260823)
    for _ in range(1000):
        a = random_fs(rng)
        b = random_fs(rng)
        result = unify(a, b)
        expected = oracle_set(a, b)
        if result is None:
            assert expected == set()
        else:
            assert set(expand(result)) == expected


def test_unify_algebraic_properties():
    rng = random.Random(7)
    for _ in range(300):
        a, b, c = random_fs(rng), random_fs(rng), random_fs(rng)
        assert unify(a, a) == a
        ab, ba = unify(a, b), unify(b, a)
        assert (ab is None) == (ba is None)
        if ab is not None:
            assert ab == ba
        left = unify(a, b)
        left = unify(left, c) if left is not None else None
        right = unify(b, c)
        right = unify(a, right) if right is not None else None
        assert (left is None) == (right is None)
        if left is not None:
            assert left == right


# ---------------------------------------------------------------------
# Subsumption
# ---------------------------------------------------------------------

def test_subsumes_trivial():
    f = parse_featstruct("((a x) (b ((c y))))")
    assert subsumes(EMPTY, f)
    assert subsumes(f, f)
    assert not subsumes(f, EMPTY)


def test_subsumes_reentrancy():
    shared = parse_featstruct("((p #1=((n s))) (q #1#))")
    unshared = parse_featstruct("((p ((n s))) (q ((n s))))")
    assert subsumes(unshared, shared)
    assert not subsumes(shared, unshared)


def test_subsumes_agrees_with_unification():
    rng = random.Random(99)
    for _ in range(500):
        a, b = random_fs(rng), random_fs(rng)
        via_unify = unify(a, b) == b
        assert subsumes(a, b) == via_unify


# ---------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------

# as printed, with its paren typo corrected (op3 is a sister of op1/op2
# under gloss; the printed form closes the gloss list one paren early and
# carries one extra trailing paren)
GLOSS_SAMPLE = """
((gloss ((op1 "John")
         (op2 ((op1 (*or* "wants" "want"))
              (op2 ((op1 "to")
                   (op2 "eat")))))
        (op3 "now"))))
"""


def test_gloss_sample_parses():
    fs = parse_featstruct(GLOSS_SAMPLE)
    assert fs.get(("gloss", "op1")).atom_value == "John"
    assert fs.get(("gloss", "op2", "op1")).allowed == frozenset(["wants", "want"])
    assert fs.get(("gloss", "op2", "op2", "op1")).atom_value == "to"
    assert fs.get(("gloss", "op2", "op2", "op2")).atom_value == "eat"
    assert fs.get(("gloss", "op3")).atom_value == "now"


def test_serialize_roundtrip():
    rng = random.Random(5)
    for _ in range(200):
        fs = random_fs(rng)
        assert parse_featstruct(canonical(fs)) == fs


def test_roundtrip_with_reentrancy_tags():
    fs = parse_featstruct("((subj #1=((num sg) (per 3))) (obj #1#) (x y))")
    again = parse_featstruct(canonical(fs))
    assert again == fs
    assert again.get(("subj",)) is again.get(("obj",))


def test_pipe_atoms():
    fs = parse_featstruct("((instance |have as a goal|))")
    assert fs.get(("instance",)).atom_value == "have as a goal"
    assert parse_featstruct(canonical(fs)) == fs


# ---------------------------------------------------------------------
# Equations
# ---------------------------------------------------------------------

NP_RULE_EQS = """
((X1 syn infl) = (*OR* kihon ta-form rentai))
((X0 syn) = (X2 syn))
((X0 syn comp) = plus)
((X0 syn s-mod) = (X1 syn))
"""


def eqs_from(text):
    return parse_equations(parse_all(text))


def test_paper_np_rule_application():
    eqs = eqs_from(NP_RULE_EQS)
    bindings = {
        "X0": EMPTY,
        "X1": parse_featstruct("((syn ((infl ta-form))))"),
        "X2": parse_featstruct("((syn ((head noun))))"),
    }
    sols = apply_equations(bindings, eqs)
    assert len(sols) == 1
    x0 = sols[0]["X0"]
    assert x0.get(("syn", "head")).atom_value == "noun"
    assert x0.get(("syn", "comp")).atom_value == "plus"
    assert x0.get(("syn", "s-mod", "infl")).atom_value == "ta-form"


def test_paper_np_rule_infl_mismatch_fails():
    eqs = eqs_from(NP_RULE_EQS)
    bindings = {
        "X0": EMPTY,
        "X1": parse_featstruct("((syn ((infl meirei))))"),
        "X2": parse_featstruct("((syn ((head noun))))"),
    }
    assert apply_equations(bindings, eqs) == []


def test_empty_equation_list_vacuous():
    bindings = {"X0": EMPTY, "X1": parse_featstruct("((a b))")}
    sols = apply_equations(bindings, [])
    assert len(sols) == 1
    assert sols[0]["X1"] == bindings["X1"]


def test_unbound_variable_is_an_error():
    with pytest.raises(UnboundVariableError):
        apply_equations({"X0": EMPTY}, eqs_from("((X0 a) = (X7 b))"))


def test_or_block_multiplies_solutions():
    block = eqs_from("(*OR* (((X0 v) = p)) (((X0 v) = q)) (((X0 v) = r)))")
    sols = apply_equations({"X0": EMPTY}, block)
    got = {s["X0"].get(("v",)).atom_value for s in sols}
    assert got == {"p", "q", "r"}
    # block-expansion oracle: same solutions as three separate rule copies
    separate = set()
    for alt in ("p", "q", "r"):
        for s in apply_equations({"X0": EMPTY}, eqs_from("((X0 v) = %s)" % alt)):
            separate.add(canonical(s["X0"]))
    assert {canonical(s["X0"]) for s in sols} == separate


def test_or_block_drops_failing_groups():
    eqs = eqs_from("((X0 v) = p) (*OR* (((X0 v) = p)) (((X0 v) = q)))")
    sols = apply_equations({"X0": EMPTY}, eqs)
    assert len(sols) == 1


def test_solutions_deduplicated_and_capped():
    eqs = eqs_from("(*OR* (((X0 v) = p)) (((X0 v) = p)))")
    assert len(apply_equations({"X0": EMPTY}, eqs)) == 1
    big = eqs_from(
        "(*OR* %s)" % " ".join("(((X0 v) = a%d))" % i for i in range(100))
    )
    assert len(apply_equations({"X0": EMPTY}, big, solution_cap=10)) == 10


def test_xor_exactly_one_group():
    one_sat = eqs_from(
        "((X0 v) = p) (*XOR* (((X0 v) = p)) (((X0 v) = q)))"
    )
    assert len(apply_equations({"X0": EMPTY}, one_sat)) == 1
    both_sat = eqs_from("(*XOR* (((X0 v) = p)) (((X0 w) = q)))")
    assert apply_equations({"X0": EMPTY}, both_sat) == []
    none_sat = eqs_from(
        "((X0 v) = p) (*XOR* (((X0 v) = q)) (((X0 v) = r)))"
    )
    assert apply_equations({"X0": EMPTY}, none_sat) == []


def test_xor_randomized_k_groups():
    rng = random.Random(41)
    for _ in range(100):
        k = rng.randint(0, 3)
        groups, sat = [], 0
        for i in range(3):
            if sat < k and rng.random() < 0.6 or k - sat >= 3 - i:
                groups.append("(((X0 g%d) = yes))" % i)
                sat += 1
            else:
                groups.append("(((X0 blocked) = other%d))" % i)
        eqs = eqs_from("((X0 blocked) = fixed) (*XOR* %s)" % " ".join(groups))
        sols = apply_equations({"X0": EMPTY}, eqs)
        assert bool(sols) == (sat == 1)


def test_apply_equations_does_not_mutate_bindings():
    x1 = parse_featstruct("((syn ((infl ta-form))))")
    before = canonical(x1)
    apply_equations({"X0": EMPTY, "X1": x1}, eqs_from("((X0 syn) = (X1 syn))"))
    assert canonical(x1) == before


def test_negation_equation_in_rule():
    eqs = eqs_from("((X2 syn form) = (*NOT* rentaidome))")
    bad = {"X2": parse_featstruct("((syn ((form rentaidome))))")}
    good = {"X2": parse_featstruct("((syn ((form kihon))))")}
    assert apply_equations(bad, eqs) == []
    assert len(apply_equations(good, eqs)) == 1


def test_shared_paths_specialize_together():
    eqs = eqs_from("((X0 syn) = (X2 syn)) ((X0 syn comp) = plus)")
    sols = apply_equations(
        {"X0": EMPTY, "X2": parse_featstruct("((syn ((head n))))")}, eqs
    )
    assert sols[0]["X2"].get(("syn", "comp")).atom_value == "plus"
    assert sols[0]["X0"].get(("syn",)) is sols[0]["X2"].get(("syn",))


# ---------------------------------------------------------------------
# Test-only equations
# ---------------------------------------------------------------------

def test_evaluate_negation():
    test = parse_equation(parse_all("((X2 syn form) = (*NOT* rentaidome))")[0])
    assert not evaluate_test(
        {"X2": parse_featstruct("((syn ((form rentaidome))))")}, test
    )
    assert evaluate_test({"X2": parse_featstruct("((syn ((form kihon))))")}, test)
    assert evaluate_test({"X2": parse_featstruct("((syn ()))")}, test)


def test_evaluate_existence():
    test = parse_equation(parse_all("(is (X1 syn head))")[0])
    assert evaluate_test({"X1": parse_featstruct("((syn ((head noun))))")}, test)
    assert not evaluate_test({"X1": parse_featstruct("((syn ((infl x))))")}, test)


def test_constraint_equation():
    # ((X1 map subject-role) =c X2) passes iff subject-role is already
    # filled and compatible
    test = parse_equation(parse_all("((X1 map subject-role) =c X2)")[0])
    filled = parse_featstruct("((map ((subject-role ((sem ((instance person))))))))")
    compatible = parse_featstruct("((sem ((instance person))))")
    incompatible = parse_featstruct("((sem ((instance rock))))")
    richer = parse_featstruct("((sem ((instance person))) (extra yes))")
    assert evaluate_test({"X1": filled, "X2": compatible}, test)
    assert not evaluate_test({"X1": filled, "X2": incompatible}, test)
    # compatible but would add structure: fails
    assert not evaluate_test({"X1": filled, "X2": richer}, test)
    unfilled = parse_featstruct("((map ()))")
    assert not evaluate_test({"X1": unfilled, "X2": compatible}, test)


def test_constraint_node_count_oracle():
    # =c never changes the bound structures: node counts are identical
    # before and after
    def node_count(fs, seen=None):
        if seen is None:
            seen = set()
        if id(fs) in seen:
            return 0
        seen.add(id(fs))
        return 1 + sum(node_count(c, seen) for c in fs.features.values())

    test = parse_equation(parse_all("((X1 map subject-role) =c X2)")[0])
    x1 = parse_featstruct("((map ((subject-role ((a b))))))")
    x2 = parse_featstruct("((a b))")
    n1, n2 = node_count(x1), node_count(x2)
    assert evaluate_test({"X1": x1, "X2": x2}, test)
    assert node_count(x1) == n1 and node_count(x2) == n2


def test_constraint_runs_after_structure_building():
    # the =c appears before the equation that fills the slot; it must
    # still pass because check-only equations are evaluated last
    eqs = eqs_from("((X1 has it) =c X0) ((X1 has it) = ok) ((X0) = ok)")
    assert len(apply_equations({"X0": EMPTY, "X1": EMPTY}, eqs)) == 1
    # but if the slot is never filled, the deferred check fails
    eqs2 = eqs_from("((X1 has it) =c X0) ((X0) = ok)")
    assert apply_equations({"X0": EMPTY, "X1": EMPTY}, eqs2) == []
