"""Tabular lexicographic Q-learning on automaton-product MDPs.

Three action-value tables are trained from simulated episodes.  The
satisfaction table rewards accepting transitions with 1 - zeta and discounts
only there, so its fixed point estimates the probability of seeing accepting
transitions forever rather than a time-discounted proxy that would trade
probability for speed.  The reward table learns the environment's discounted
return, bootstrapped through the lexicographically greedy action.  A
recurrence table (zeta-discounted proximity of the next accepting
transition) breaks ties in the satisfaction phase, so the final policy keeps
making progress toward accepting transitions instead of stalling on a
value-equivalent loop.

The returned strategy is switching: follow the reward-greedy policy for a
computed horizon, then the satisfaction-greedy policy forever, mirroring the
structure of the exact solver.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .mdp import ProductMdp, Strategy, switch_horizon

_ARROW = {"N": "^", "S": "v", "E": ">", "W": "<"}


@dataclass
class LexQTables:
    """Learned action-value tables keyed by (product state, action)."""

    q_sat: dict = field(default_factory=dict)
    q_rec: dict = field(default_factory=dict)
    q_disc: dict = field(default_factory=dict)
    visits: dict = field(default_factory=dict)
    zeta: float = 0.99
    lam: float = 0.99
    tau_lex: float = 0.01
    sat_init: float = 0.0

    def sat(self, s, a):
        return self.q_sat.get((s, a), self.sat_init)

    def rec(self, s, a):
        return self.q_rec.get((s, a), 0.0)

    def disc(self, s, a):
        return self.q_disc.get((s, a), 0.0)

    def sat_max(self, P, s):
        return max(self.sat(s, a) for a in P.actions[s])

    def lex_greedy(self, P, s):
        """Best reward among actions whose satisfaction value is within
        tau_lex of the state's best; None at a dead end."""
        acts = P.actions.get(s, ())
        if not acts:
            return None
        top = self.sat_max(P, s)
        best, pick = None, None
        for a in acts:
            if self.sat(s, a) < top - self.tau_lex:
                continue
            v = self.disc(s, a)
            if best is None or v > best + 1e-12:
                best, pick = v, a
        return pick

    def sat_greedy(self, P, s):
        """Satisfaction-first choice: near-maximal q_sat, recurrence
        tie-break.  The filter reuses tau_lex so that an action whose value
        still carries optimistic initialization does not crowd out a
        well-explored one that actually makes progress."""
        acts = P.actions.get(s, ())
        if not acts:
            return None
        top = self.sat_max(P, s)
        best, pick = None, None
        for a in acts:
            if self.sat(s, a) < top - self.tau_lex:
                continue
            v = self.rec(s, a)
            if best is None or v > best + 1e-12:
                best, pick = v, a
        return pick


def lex_q_learn(P: ProductMdp, episodes, steps=1000, lam=0.99, zeta=0.99,
                tau_lex=0.01, eps=0.01, explore=(1.0, 0.05), alpha_power=0.7,
                alpha_floor=0.2, optimism=0.0, seed=0, value_cap=None,
                tables=None):
    """Train lexicographic Q-tables by episodic simulation of the product.

    Episodes restart at the product's initial state and run for ``steps``
    steps or until a dead end.  The behavior policy alternates by episode
    between the satisfaction-greedy and the lexicographically greedy choice,
    so both the accepting tour and the reward-chasing route get followed and
    corrected on-policy; whenever the greedy action has no learned route to
    an accepting transition (recurrence value zero) the agent wanders
    randomly instead of stalling, which grows the known tour outward from
    every accepting transition it stumbles on.  ``explore`` is the epsilon
    of the epsilon-greedy wrapper, either a constant or a (start, end) pair
    interpolated linearly over the episodes.  Learning rates adapt per
    state-action pair: while a pair has only ever produced one successor it
    is treated as deterministic and updated with rate 1 (asynchronous value
    iteration); once a second successor shows up the satisfaction and
    recurrence tables fall back to a decaying rate (robust to stochastic
    outcomes such as the zapper) and the reward table keeps at least
    ``alpha_floor`` so large discounted values still relax.  Untried
    actions carry a satisfaction value of ``optimism``; the pessimistic
    default is important because the satisfaction update passes values
    through non-accepting transitions unchanged, so an optimistic init
    would survive forever on any non-accepting loop (a crash sink would
    keep looking safe no matter how often it is observed).  Passing a previous run's ``tables`` continues training from them, which
    allows staged schedules (broad exploration first, polish after).
    Returns (tables, strategy)
    where the strategy switches from reward-greedy to satisfaction-greedy
    after switch_horizon(lam, eps, r_max) steps.

    Raises RuntimeError when any table value escapes ``value_cap`` (by
    default a bound no legitimate fixed point can exceed), with the episode,
    step, and table values in the message.
    """
    if not (0 <= lam < 1):
        raise ValueError("discount factor must lie in [0, 1)")
    if not (0 < zeta < 1):
        raise ValueError("satisfaction discount must lie in (0, 1)")
    if tau_lex < 0 or eps <= 0 or episodes < 1 or steps < 1:
        raise ValueError("bad hyperparameters")
    if isinstance(explore, (int, float)):
        explore = (float(explore), float(explore))
    if value_cap is None:
        value_cap = 2.0 + P.r_max / (1 - lam)
    rng = random.Random(seed)
    if tables is not None:
        tab = tables
        tab.zeta, tab.lam, tab.tau_lex = zeta, lam, tau_lex
    else:
        tab = LexQTables(zeta=zeta, lam=lam, tau_lex=tau_lex,
                         sat_init=optimism)
    first_succ = {}
    stochastic = set()

    def sample(s, a):
        u = rng.random()
        t = None
        for t, p in P.trans[(s, a)]:
            u -= p
            if u <= 0:
                break
        return t

    for ep in range(episodes):
        frac = ep / (episodes - 1) if episodes > 1 else 1.0
        eps_explore = explore[0] + (explore[1] - explore[0]) * frac
        greedy = tab.sat_greedy if ep % 2 == 0 else tab.lex_greedy
        s = P.initial
        for step in range(steps):
            acts = P.actions.get(s, ())
            if not acts:
                break
            a = None
            if rng.random() >= eps_explore:
                a = greedy(P, s)
                if tab.rec(s, a) <= 0.0:
                    # no known route to an accepting transition from here,
                    # so greedy would stall; wander until one is found
                    a = None
            if a is None:
                a = acts[rng.randrange(len(acts))]
            t = sample(s, a)
            r = P.reward(s, a, t)
            acc = (s, a) in P.acc
            n = tab.visits[(s, a)] = tab.visits.get((s, a), 0) + 1
            if first_succ.setdefault((s, a), t) != t:
                stochastic.add((s, a))
            if (s, a) in stochastic:
                alpha = n ** -alpha_power
                alpha_d = max(alpha, alpha_floor)
            else:
                alpha = alpha_d = 1.0
            if P.actions.get(t):
                boot_sat = tab.sat_max(P, t)
                a_rec = tab.sat_greedy(P, t)
                boot_rec = tab.rec(t, a_rec)
                a_lex = tab.lex_greedy(P, t)
                boot_disc = tab.disc(t, a_lex)
            else:
                boot_sat = boot_rec = boot_disc = 0.0
            tgt_sat = (1 - zeta) + zeta * boot_sat if acc else boot_sat
            tgt_rec = 1.0 if acc else zeta * boot_rec
            tgt_disc = r + lam * boot_disc
            vs = tab.q_sat[(s, a)] = tab.sat(s, a) + alpha * (
                tgt_sat - tab.sat(s, a))
            vr = tab.q_rec[(s, a)] = tab.rec(s, a) + alpha * (
                tgt_rec - tab.rec(s, a))
            vd = tab.q_disc[(s, a)] = tab.disc(s, a) + alpha_d * (
                tgt_disc - tab.disc(s, a))
            if not (abs(vs) <= value_cap and abs(vr) <= value_cap
                    and abs(vd) <= value_cap) or not (
                    math.isfinite(vs) and math.isfinite(vr)
                    and math.isfinite(vd)):
                raise RuntimeError(
                    f"q-learning diverged at episode {ep}, step {step}, "
                    f"state {s}, action {a!r}: q_sat={vs}, q_rec={vr}, "
                    f"q_disc={vd} exceed cap {value_cap}")
            s = t
    first, second_choices, second_update = {}, {}, {}
    for s in range(P.n_states):
        if not P.actions.get(s):
            continue
        first[s] = tab.lex_greedy(P, s)
        second_choices[(s, 0)] = tab.sat_greedy(P, s)
        second_update[(s, 0)] = 0
    strategy = Strategy(
        "switching",
        first=Strategy("positional", choices=first),
        second=Strategy("finite-memory", choices=second_choices,
                        update=second_update, memory_size=1),
        switch_step=switch_horizon(lam, eps, P.r_max))
    return tab, strategy


def policy_arrows(P: ProductMdp, choices, cell_of):
    """Group a product-state action map into per-mode arrow grids.

    ``choices`` maps product states to product actions, ``cell_of`` maps a
    product state to a grid cell (or None to skip it), and the automaton
    component of the state becomes the memory-mode label.
    """
    arrows = {}
    for x, pa in choices.items():
        cell = cell_of(x)
        if cell is None:
            continue
        mode = P.pairs[x][1]
        arrows.setdefault(mode, {})[cell] = pa[0][1]
    return arrows


def render_policy(grid, arrows):
    """ASCII rendering of a grid policy, one map per memory mode.

    ``arrows`` maps a memory-mode label to a cell -> direction dict; an
    empty mapping renders the bare map.  Walls are drawn from the grid
    geometry, the zapper door as 'z', features by their letters, and policy
    moves as ^ v < > overriding the cell character.
    """
    features = {grid.home: "H", grid.clean_lab: "C", grid.dirty_lab: "D",
                grid.decon1: "1", grid.decon2: "2"}
    h, w = grid.height, grid.width
    modes = sorted(arrows, key=str) if arrows else [None]
    blocks = []
    for mode in modes:
        cellmap = arrows.get(mode, {}) if arrows else {}
        lines = []
        for r in range(2 * h + 1):
            line = []
            for c in range(2 * w + 1):
                if r % 2 == 0 and c % 2 == 0:
                    line.append("+")
                elif r % 2 == 0:
                    x, yb = (c - 1) // 2, h - r // 2
                    edge = frozenset({(x, yb - 1), (x, yb)})
                    if yb in (0, h):
                        line.append("-")
                    elif edge == grid.zapper:
                        line.append("z")
                    else:
                        line.append("-" if edge in grid.walls else " ")
                elif c % 2 == 0:
                    xb, y = c // 2, h - 1 - (r - 1) // 2
                    edge = frozenset({(xb - 1, y), (xb, y)})
                    if xb in (0, w):
                        line.append("|")
                    elif edge == grid.zapper:
                        line.append("z")
                    else:
                        line.append("|" if edge in grid.walls else " ")
                else:
                    cell = ((c - 1) // 2, h - 1 - (r - 1) // 2)
                    if cell in cellmap:
                        line.append(_ARROW[cellmap[cell]])
                    elif cell in features:
                        line.append(features[cell])
                    elif cell in grid.dirty_area:
                        line.append("~")
                    else:
                        line.append(" ")
            lines.append("".join(line).rstrip())
        block = "\n".join(lines)
        if mode is not None:
            block = f"mode {mode}\n{block}"
        blocks.append(block)
    return "\n\n".join(blocks)
