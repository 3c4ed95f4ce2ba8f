import pytest

from omegadp.automata import Alphabet
from omegadp.mdp import discounted_vi, product_with_nba, strategy_value_check
from omegadp.odp import Odp, remove_lookahead, remove_lookback
from omegadp.qlearn import lex_q_learn, policy_arrows, render_policy

from conftest import example2_odp


def compile_product(D):
    M, N = remove_lookahead(remove_lookback(D))
    return product_with_nba(M, N)


def chain_odp():
    """Two rooms, no promises; staying right pays better."""
    ab = Alphabet(("b",))
    left, right = (None, "left", None), (None, "right", None)
    acts = {s: (left, right) for s in (0, 1)}
    trans = {(s, left): ((0, 1.0),) for s in (0, 1)}
    trans.update({(s, right): ((1, 1.0),) for s in (0, 1)})
    rewards = {(s, right, 1): 1.0 for s in (0, 1)}
    return Odp(2, 0, acts, trans, ab, (0, 1), rewards=rewards)


def test_hyperparameter_validation():
    P = compile_product(chain_odp())
    with pytest.raises(ValueError):
        lex_q_learn(P, episodes=1, lam=1.0)
    with pytest.raises(ValueError):
        lex_q_learn(P, episodes=1, zeta=0.0)
    with pytest.raises(ValueError):
        lex_q_learn(P, episodes=0)


def test_trivial_promises_degenerate_to_q_learning():
    D = chain_odp()
    P = compile_product(D)
    tab, sigma = lex_q_learn(P, episodes=500, steps=200, lam=0.9, zeta=0.5,
                             seed=3)
    # with no promises every transition checks out, so q_sat goes flat
    values = list(tab.q_sat.values())
    assert max(values) - min(values) < 0.05
    sat, disc = strategy_value_check(P, sigma, 0.9)
    v, _ = discounted_vi(P, 0.9)
    assert sat == pytest.approx(1.0)
    assert disc == pytest.approx(v[P.initial], abs=0.05)


def test_example2_learning():
    lam = 0.99
    P = compile_product(example2_odp())
    tab, sigma = lex_q_learn(P, episodes=400, steps=250, lam=lam, zeta=0.8,
                             seed=7)
    sat, disc = strategy_value_check(P, sigma, lam)
    assert sat == pytest.approx(1.0)
    assert disc >= 1.0 / (1.0 - lam) - 0.05


def test_divergence_guard():
    P = compile_product(example2_odp())
    with pytest.raises(RuntimeError, match="diverged"):
        lex_q_learn(P, episodes=5, steps=100, value_cap=1e-9)


def test_full_exploration_covers_reachable_states():
    P = compile_product(example2_odp())
    tab, _ = lex_q_learn(P, episodes=200, steps=100, explore=1.0, seed=1)
    reachable = {P.initial}
    stack = [P.initial]
    while stack:
        s = stack.pop()
        for a in P.actions.get(s, ()):
            for t, p in P.trans[(s, a)]:
                if p > 0 and t not in reachable:
                    reachable.add(t)
                    stack.append(t)
    visited = {s for s, _ in tab.visits}
    assert visited == {s for s in reachable if P.actions.get(s)}


def test_render_policy_bare_and_arrows():
    from omegadp.biolab import default_grid
    grid = default_grid()
    bare = render_policy(grid, {})
    assert bare == render_policy(grid, {})
    assert "H" in bare and "C" in bare and "D" in bare and "z" in bare
    assert "~" in bare and "^" not in bare
    arrows = {0: {(1, 1): "N", (1, 2): "E"}, 1: {(1, 1): "S"}}
    out = render_policy(grid, arrows)
    assert out.count("mode") == 2
    assert "^" in out and ">" in out and "v" in out
    assert "H" not in out  # the home cell is covered by arrows in both modes


def test_policy_arrows_groups_by_automaton_state():
    D = chain_odp()
    P = compile_product(D)
    choices = {}
    for s in range(P.n_states):
        acts = P.actions.get(s, ())
        if acts:
            choices[s] = acts[0]
    cells = {0: (0, 0), 1: (1, 0)}
    arrows = policy_arrows(P, choices, lambda x: cells[P.pairs[x][0]])
    assert arrows
    for mode, grid in arrows.items():
        for cell, direction in grid.items():
            assert cell in ((0, 0), (1, 0))
            assert direction in ("left", "right")
