import pytest

from omegadp.automata import (
    TOP,
    Alphabet,
    Automaton,
    LassoWord,
    canonical_order,
    instantiate,
    intersect_nba,
    is_empty,
    is_strongly_limit_deterministic,
    lasso_member_nba,
    lasso_member_uca,
    nonempty_states,
    renumber,
)
from conftest import all_lassos, random_nba


def cycle_relation_member(A, w):
    """Independent lasso membership check via boolean cycle relations.

    Computes the one-cycle step relations (with and without an accepting
    edge), closes them under composition, and looks for an accepting loop
    reachable from the states after the prefix.
    """
    current = {(A.initial)}
    for a in w.prefix:
        current = {t for q in current for t in A.successors(q, a)}
    n = A.n_states
    # step[q][t] = 0 (no path), 1 (path), 2 (path with accepting edge)
    step = [[0] * n for _ in range(n)]
    for q in range(n):
        frontier = {q: 0}
        for i, a in enumerate(w.cycle):
            nxt = {}
            for s, flag in frontier.items():
                for t in A.successors(s, a):
                    f = flag | (2 if (s, a, t) in A.gamma else 0) | 1
                    nxt[t] = nxt.get(t, 0) | f
            frontier = nxt
        for t, f in frontier.items():
            step[q][t] = f
    # transitive closure over repeated cycles
    closure = [row[:] for row in step]
    changed = True
    while changed:
        changed = False
        for q in range(n):
            for m in range(n):
                if not closure[q][m]:
                    continue
                for t in range(n):
                    if closure[m][t]:
                        f = (closure[q][m] | closure[m][t]) & 2 | 1
                        if closure[q][t] | f != closure[q][t]:
                            closure[q][t] |= f
                            changed = True
    for q in current:
        for m in range(n):
            if (closure[q][m] or q == m) and closure[m][m] & 2:
                return True
    return False


def test_lasso_member_matches_cycle_relations(rng):
    lassos = all_lassos(2, 2, 3)
    for _ in range(30):
        A = random_nba(rng, rng.randint(1, 4))
        for w in lassos:
            assert lasso_member_nba(A, w) == cycle_relation_member(A, w)


def test_uca_membership_is_nba_complement_of_runs():
    ab = Alphabet(("b",))
    delta = {(0, 0): (0, 1), (0, 1): (0,), (1, 0): (1,)}
    gamma = {(1, 0, 1)}
    U = Automaton("UCA", ab, 2, 0, delta, gamma)
    # accepts exactly the words with infinitely many b's
    assert lasso_member_uca(U, LassoWord((), (1,)))
    assert lasso_member_uca(U, LassoWord((0, 0), (0, 1)))
    assert not lasso_member_uca(U, LassoWord((1,), (0,)))
    assert not lasso_member_uca(U, LassoWord((), (0,)))


def test_dead_runs_neither_accept_nor_reject():
    ab = Alphabet(("a",))
    # only transition: 0 -a-> 0 accepting; reading !a kills the run
    A = Automaton("NBA", ab, 1, 0, {(0, 1): (0,)}, {(0, 1, 0)})
    assert lasso_member_nba(A, LassoWord((), (1,)))
    assert not lasso_member_nba(A, LassoWord((), (0,)))
    assert not lasso_member_nba(A, LassoWord((1,), (0, 1)))
    U = A.reinterpret("UCA")
    # as a UCA the marked loop is rejecting, and dead runs do not reject
    assert not lasso_member_uca(U, LassoWord((), (1,)))
    assert lasso_member_uca(U, LassoWord((), (0,)))


def test_nonempty_states_and_is_empty():
    ab = Alphabet(("a",))
    delta = {(0, 0): (1,), (1, 0): (1,), (2, 0): (2,)}
    gamma = {(2, 0, 2)}
    A = Automaton("NBA", ab, 3, 0, delta, gamma)
    assert nonempty_states(A) == {2}
    assert is_empty(A)
    B = Automaton("NBA", ab, 3, 2, delta, gamma)
    assert not is_empty(B)


def test_intersection_emptiness(rng):
    lassos = all_lassos(2, 2, 2)
    for _ in range(20):
        A = random_nba(rng, rng.randint(1, 3))
        B = random_nba(rng, rng.randint(1, 3))
        P = intersect_nba(A, B)
        both = [w for w in lassos
                if lasso_member_nba(A, w) and lasso_member_nba(B, w)]
        for w in both:
            assert lasso_member_nba(P, w)
        if both:
            assert not is_empty(P)


def test_strongly_limit_deterministic_partition():
    ab = Alphabet(("a",))
    # nondeterministic first part, deterministic accepting second part
    delta = {(0, 0): (0, 1), (0, 1): (0,), (1, 0): (1,), (1, 1): (1,)}
    gamma = {(1, 0, 1), (1, 1, 1)}
    A = Automaton("NBA", ab, 2, 0, delta, gamma)
    flag, (q1, q2) = is_strongly_limit_deterministic(A)
    assert flag
    assert 1 in q2 and 0 in q1

    # two accepting successors on one letter cannot sit in a deterministic part
    delta2 = {(0, 0): (1, 2), (1, 0): (1,), (2, 0): (2,)}
    gamma2 = {(0, 0, 1), (0, 0, 2), (1, 0, 1), (2, 0, 2)}
    B = Automaton("NBA", ab, 3, 0, delta2, gamma2)
    assert not is_strongly_limit_deterministic(B)[0]


def test_schema_instantiation():
    ab = Alphabet(("a",))
    schema = Automaton("UCA", ab, 2, None, {(0, 0): (1,), (1, 1): (0,)}, ())
    assert schema.is_schema
    inst = instantiate(schema, 1)
    assert inst.initial == 1
    with pytest.raises(ValueError):
        instantiate(inst, 0)
    with pytest.raises(ValueError):
        instantiate(schema, 5)


def test_renumber_preserves_language(rng):
    lassos = all_lassos(2, 2, 2)
    for _ in range(10):
        A = random_nba(rng, rng.randint(2, 4))
        B = renumber(A, canonical_order(A))
        for w in lassos:
            assert lasso_member_nba(A, w) == lasso_member_nba(B, w)


def test_promise_alphabet_letters():
    ab = Alphabet(("a",), (TOP, 0, 1))
    assert ab.size == 6
    letters = ab.letters()
    assert (0, TOP) in letters and (1, 1) in letters
    assert ab.base_of((1, 0)) == 1
    assert ab.letter_of(["a"]) == 1


def test_validation_rejects_bad_structures():
    ab = Alphabet(("a",))
    with pytest.raises(ValueError):
        Automaton("NBA", ab, 1, 0, {(0, 0): (3,)})
    with pytest.raises(ValueError):
        Automaton("NBA", ab, 1, 0, {(0, 0): (0,)}, {(0, 1, 0)})
    with pytest.raises(ValueError):
        Automaton("DBA", ab, 2, 0, {(0, 0): (0, 1)})
    with pytest.raises(ValueError):
        Automaton("FOO", ab, 1, 0, {})
