import itertools
import json

import pytest

from omegadp.automata import Alphabet, Automaton
from omegadp.complement import ComplementOptions, complement_uca
from omegadp.mdp import (
    Mdp,
    NoValidStrategy,
    RewardMachine,
    accepting_mecs,
    almost_sure_buchi_region,
    discounted_vi,
    lexicographic_solve,
    max_reach_prob,
    mdp_from_json,
    mdp_to_json,
    mec_decomposition,
    product_with_nba,
    product_with_reward_machine,
    strategy_to_json,
    strategy_value_check,
    switch_horizon,
)


def coin_gadget():
    return Mdp(3, 0, {0: ("flip",), 1: ("stay",), 2: ("stay",)},
               {(0, "flip"): ((1, .5), (2, .5)),
                (1, "stay"): ((1, 1.0),),
                (2, "stay"): ((2, 1.0),)})


def free_letter_mdp():
    """Choose the next letter from {a, b}; reward 1 for a, 0 for b."""
    ab = Alphabet(("b",))
    return Mdp(2, 0,
               {0: ("a", "b"), 1: ("a", "b")},
               {(0, "a"): ((0, 1.0),), (0, "b"): ((1, 1.0),),
                (1, "a"): ((0, 1.0),), (1, "b"): ((1, 1.0),)},
               alphabet=ab, labels=(0, 1),
               rewards={(0, "a", 0): 1.0, (1, "a", 0): 1.0})


def infinitely_many_b_nba():
    ab = Alphabet(("b",))
    U = Automaton("UCA", ab, 2, 0,
                  {(0, 0): (0, 1), (0, 1): (0,), (1, 0): (1,)},
                  {(1, 0, 1)})
    return complement_uca(U, ComplementOptions(special="off"))


def test_validation():
    with pytest.raises(ValueError):
        Mdp(1, 0, {0: ()}, {})
    with pytest.raises(ValueError):
        Mdp(1, 0, {0: ("a",)}, {(0, "a"): ((0, 0.5),)})
    with pytest.raises(ValueError):
        Mdp(1, 0, {0: ("a",)}, {(0, "a"): ((3, 1.0),)})


def test_reachability_values():
    M = coin_gadget()
    v, sigma = max_reach_prob(M, {1})
    assert v == pytest.approx([0.5, 1.0, 0.0])
    assert sigma.choices[0] == "flip"
    v, _ = max_reach_prob(M, {0, 1, 2})
    assert v == pytest.approx([1.0, 1.0, 1.0])
    v, _ = max_reach_prob(M, set())
    assert v == pytest.approx([0.0, 0.0, 0.0])


def brute_force_mecs(M):
    components = []
    for r in range(1, M.n_states + 1):
        for states in itertools.combinations(range(M.n_states), r):
            S = set(states)
            inner = {(s, a) for s in S for a in M.actions[s]
                     if all(t in S for t, _ in M.trans[(s, a)])}
            if not all(any(x == s for x, _ in inner) for s in S):
                continue
            adj = {s: set() for s in S}
            for s, a in inner:
                adj[s] |= {t for t, _ in M.trans[(s, a)]}
            connected = True
            for s in S:
                seen, stack = {s}, [s]
                while stack:
                    x = stack.pop()
                    for y in adj[x]:
                        if y not in seen:
                            seen.add(y)
                            stack.append(y)
                if not S <= seen:
                    connected = False
                    break
            if connected:
                components.append(frozenset(S))
    return sorted((S for S in components
                   if not any(S < T for T in components)), key=min)


def random_mdp(rng, n, n_actions=2, alphabet=None):
    actions, trans, labels = {}, {}, []
    for s in range(n):
        if alphabet is not None:
            labels.append(rng.choice(alphabet.letters()))
        names = tuple(f"a{k}" for k in range(rng.randint(1, n_actions)))
        actions[s] = names
        for a in names:
            support = rng.sample(range(n), rng.randint(1, min(2, n)))
            trans[(s, a)] = tuple((t, 1.0 / len(support)) for t in support)
    return Mdp(n, 0, actions, trans, alphabet=alphabet,
               labels=labels if alphabet is not None else None)


def test_mec_decomposition_matches_brute_force(rng):
    for _ in range(60):
        M = random_mdp(rng, rng.randint(1, 5))
        got = sorted((frozenset(s) for s, _ in mec_decomposition(M)), key=min)
        assert got == brute_force_mecs(M)


def test_mec_disjoint_and_closed(rng):
    M = random_mdp(rng, 8)
    seen = set()
    for states, inner in mec_decomposition(M):
        assert not (states & seen)
        seen |= states
        for s, a in inner:
            assert s in states
            assert all(t in states for t, _ in M.trans[(s, a)])


def test_product_with_deterministic_automaton():
    M = free_letter_mdp()
    dba = Automaton("NBA", M.alphabet, 1, 0, {(0, 0): (0,), (0, 1): (0,)},
                    {(0, 1, 0)})
    P = product_with_nba(M, dba)
    for s in range(P.n_states):
        assert len(P.actions[s]) == 2
    v, _ = max_reach_prob(P, accepting_mecs(P))
    assert v[P.initial] == pytest.approx(1.0)


def test_product_transition_soundness():
    M = free_letter_mdp()
    C = infinitely_many_b_nba()
    P = product_with_nba(M, C)
    for (src, (a, q2)), dist in P.trans.items():
        s, q = P.pairs[src]
        assert q2 in C.successors(q, M.labels[s])
        for dst, p in dist:
            t, qt = P.pairs[dst]
            assert qt == q2
            assert dict(M.trans[(s, a)])[t] == p


def test_reward_machine_constant():
    M = free_letter_mdp()
    R = RewardMachine(1, 0, {(0, 0): 0, (0, 1): 0}, {(0, 0): 3.0, (0, 1): 3.0})
    prod = product_with_reward_machine(M, R)
    v, _ = discounted_vi(prod, 0.5)
    # the machine pays 3 every step regardless of the action rewards
    assert v[0] == pytest.approx(3.0 / 0.5 + 2.0, abs=1e-6)


def test_reward_machine_pays_after_b():
    # pay 1 exactly when the previous state was labeled b
    ab = Alphabet(("b",))
    M = Mdp(2, 0, {0: ("go",), 1: ("go",)},
            {(0, "go"): ((1, 1.0),), (1, "go"): ((0, 1.0),)},
            alphabet=ab, labels=(0, 1))
    R = RewardMachine(2, 0, {(0, 0): 0, (0, 1): 1, (1, 0): 0, (1, 1): 1},
                      {(1, 0): 1.0, (1, 1): 1.0})
    prod = product_with_reward_machine(M, R)
    lam = 0.5
    v, _ = discounted_vi(prod, lam)
    # the machine learns about b one step late, so it first pays on the
    # third transition and then on every second one
    expect = lam * lam / (1 - lam * lam)
    assert v[0] == pytest.approx(expect, abs=1e-6)


def test_discounted_vi_basics():
    M = Mdp(1, 0, {0: ("a",)}, {(0, "a"): ((0, 1.0),)},
            rewards={(0, "a", 0): 1.0})
    v, _ = discounted_vi(M, 0.5)
    assert v[0] == pytest.approx(2.0, abs=1e-7)
    M0 = Mdp(1, 0, {0: ("a",)}, {(0, "a"): ((0, 1.0),)})
    v, _ = discounted_vi(M0, 0.9)
    assert v[0] == 0.0
    with pytest.raises(ValueError):
        discounted_vi(M, 1.0)


def test_almost_sure_region_trivial_cases():
    M = free_letter_mdp()
    C = infinitely_many_b_nba()
    P = product_with_nba(M, C)
    region, _ = almost_sure_buchi_region(P)
    assert P.initial in region
    # without accepting marks nothing is winning
    stripped = product_with_nba(
        M, Automaton("NBA", M.alphabet, 1, 0,
                     {(0, 0): (0,), (0, 1): (0,)}, ()))
    region, _ = almost_sure_buchi_region(stripped)
    assert region == set()


def test_lexicographic_free_letter_example():
    M = free_letter_mdp()
    P = product_with_nba(M, infinitely_many_b_nba())
    lam, eps = 0.5, 0.01
    sat, value, sigma = lexicographic_solve(P, lam, eps)
    assert sat == 1.0
    assert value == pytest.approx(1.0 / (1 - lam), abs=1e-6)
    assert sigma.kind == "switching"
    sat2, value2 = strategy_value_check(P, sigma, lam)
    assert sat2 == pytest.approx(1.0)
    assert value2 >= value - eps


def test_lexicographic_trivial_promise_is_plain_vi():
    M = free_letter_mdp()
    universal = Automaton("NBA", M.alphabet, 1, 0,
                          {(0, 0): (0,), (0, 1): (0,)},
                          {(0, 0, 0), (0, 1, 0)})
    P = product_with_nba(M, universal)
    sat, value, _ = lexicographic_solve(P, 0.5, 0.01)
    v, _ = discounted_vi(P, 0.5)
    assert sat == 1.0
    assert value == pytest.approx(v[P.initial])


def test_no_valid_strategy():
    # the only accepting transitions lie behind a coin that may exile us
    ab = Alphabet(("b",))
    M = Mdp(3, 0, {0: ("try",), 1: ("loop",), 2: ("loop",)},
            {(0, "try"): ((1, .5), (2, .5)),
             (1, "loop"): ((1, 1.0),), (2, "loop"): ((2, 1.0),)},
            alphabet=ab, labels=(1, 1, 0))
    C = infinitely_many_b_nba()
    P = product_with_nba(M, C)
    with pytest.raises(NoValidStrategy) as exc:
        lexicographic_solve(P, 0.5, 0.01)
    assert exc.value.sat_prob == pytest.approx(0.5)


def test_risky_reward_action_is_deleted():
    # action "risk" pays well but may fall out of the winning region
    ab = Alphabet(("b",))
    M = Mdp(2, 0, {0: ("safe", "risk"), 1: ("stay",)},
            {(0, "safe"): ((0, 1.0),),
             (0, "risk"): ((0, .5), (1, .5)),
             (1, "stay"): ((1, 1.0),)},
            alphabet=ab, labels=(1, 0),
            rewards={(0, "risk", 0): 10.0, (0, "risk", 1): 10.0,
                     (0, "safe", 0): 1.0})
    C = infinitely_many_b_nba()
    P = product_with_nba(M, C)
    lam = 0.5
    sat, value, _ = lexicographic_solve(P, lam, 0.01)
    assert sat == 1.0
    # only "safe" remains: geometric value of constant reward 1
    assert value == pytest.approx(1.0 / (1 - lam), abs=1e-6)


def test_switch_horizon_guarantee():
    assert switch_horizon(0.5, 0.01, 1.0) == 9
    assert switch_horizon(0.0, 0.01, 1.0) == 0
    assert switch_horizon(0.9, 0.01, 0.0) == 0


def test_json_round_trip():
    M = free_letter_mdp()
    N = mdp_from_json(mdp_to_json(M))
    assert N.n_states == M.n_states
    assert N.initial == M.initial
    assert N.actions == M.actions
    assert N.trans == M.trans
    assert N.labels == M.labels
    assert N.rewards == M.rewards
    assert N.alphabet.ap == M.alphabet.ap


def test_strategy_json():
    M = free_letter_mdp()
    P = product_with_nba(M, infinitely_many_b_nba())
    _, _, sigma = lexicographic_solve(P, 0.5, 0.01)
    doc = json.loads(strategy_to_json(sigma))
    assert doc["kind"] == "switching"
    assert doc["switch_step"] == sigma.switch_step
    assert doc["first"]["kind"] == "positional"
    assert doc["second"]["kind"] == "finite-memory"
    assert all("memory" in c for c in doc["second"]["choices"])
