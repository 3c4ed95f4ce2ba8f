"""Markov decision processes, automaton products, and lexicographic solving.

The central pipeline target: label-generating MDPs are multiplied with a
good-for-MDPs Buchi automaton, the almost-sure winning region for the Buchi
objective is computed qualitatively, and discounted rewards are optimized
inside that region.  The returned strategy follows the discounted optimum for
a computed number of steps and then switches to an almost-sure strategy, so
it satisfies the acceptance condition with probability one while losing at
most epsilon of discounted value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .automata import Automaton, _strongly_connected_components


class NoValidStrategy(Exception):
    """No strategy satisfies the acceptance condition almost surely."""

    def __init__(self, sat_prob):
        super().__init__(f"best satisfaction probability is {sat_prob}")
        self.sat_prob = sat_prob


class Mdp:
    """Finite MDP with an optional state labeling and optional rewards.

    ``actions`` maps a state to its ordered action-name tuple and ``trans``
    maps (state, action) to a tuple of (target, probability) pairs.  Ties in
    all solvers are broken toward the action that comes first in the state's
    action tuple.
    """

    def __init__(self, n_states, initial, actions, trans, alphabet=None,
                 labels=None, rewards=None, check=True):
        self.n_states = n_states
        self.initial = initial
        self.actions = {s: tuple(a) for s, a in actions.items()}
        self.trans = {k: tuple(v) for k, v in trans.items()}
        self.alphabet = alphabet
        self.labels = tuple(labels) if labels is not None else None
        self.rewards = dict(rewards) if rewards else {}
        if check:
            self._validate()

    def _validate(self):
        for s in range(self.n_states):
            if not self.actions.get(s):
                raise ValueError(f"state {s} has no actions")
            for a in self.actions[s]:
                dist = self.trans.get((s, a))
                if not dist:
                    raise ValueError(f"missing distribution for ({s}, {a})")
                total = sum(p for _, p in dist)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"distribution of ({s}, {a}) sums to {total}")
                for t, p in dist:
                    if not (0 <= t < self.n_states) or p < 0:
                        raise ValueError(f"bad transition ({s}, {a}) -> {t}")
        if self.labels is not None and len(self.labels) != self.n_states:
            raise ValueError("label vector length mismatch")

    @property
    def r_max(self):
        return max((abs(r) for r in self.rewards.values()), default=0.0)

    def reward(self, s, a, t):
        return self.rewards.get((s, a, t), 0.0)


@dataclass
class RewardMachine:
    """Mealy machine over letters that emits rewards on its transitions."""

    n_states: int
    initial: int
    delta: dict  # (u, letter) -> u'
    rho: dict    # (u, letter) -> reward

    def step(self, u, letter):
        if (u, letter) not in self.delta:
            raise ValueError(f"reward machine has no move for ({u}, {letter})")
        return self.delta[(u, letter)], self.rho.get((u, letter), 0.0)


class ProductMdp(Mdp):
    """MDP times automaton; the automaton move is folded into the action.

    States are reachable (mdp state, automaton state) pairs and an action is
    an (mdp action, automaton successor) pair.  ``acc`` holds the
    (state, action) pairs whose underlying automaton transition is accepting.
    A pair state where the automaton has no move on the state's letter keeps
    an empty action set; such dead ends never satisfy the objective.
    """

    def __init__(self, n_states, initial, actions, trans, acc, pairs,
                 alphabet=None, labels=None, rewards=None):
        super().__init__(n_states, initial, actions, trans, alphabet,
                         labels, rewards, check=False)
        self.acc = frozenset(acc)
        self.pairs = tuple(pairs)


def product_with_nba(M: Mdp, C: Automaton) -> ProductMdp:
    """Synchronous product; letters are read off the source MDP state."""
    if M.labels is None:
        raise ValueError("the MDP must be labeled")
    if M.alphabet is not None and C.alphabet.ap != M.alphabet.ap:
        raise ValueError("alphabet mismatch between MDP and automaton")
    ids = {}
    pairs = []

    def intern(s, q):
        if (s, q) not in ids:
            ids[(s, q)] = len(ids)
            pairs.append((s, q))
        return ids[(s, q)]

    intern(M.initial, C.initial)
    actions, trans, rewards = {}, {}, {}
    acc = set()
    i = 0
    while i < len(pairs):
        s, q = pairs[i]
        src = ids[(s, q)]
        i += 1
        letter = M.labels[s]
        acts = []
        for a in M.actions[s]:
            for q2 in C.successors(q, letter):
                pa = (a, q2)
                acts.append(pa)
                dist = []
                for t, p in M.trans[(s, a)]:
                    dst = intern(t, q2)
                    dist.append((dst, p))
                    r = M.reward(s, a, t)
                    if r:
                        rewards[(src, pa, dst)] = r
                trans[(src, pa)] = tuple(dist)
                if (q, letter, q2) in C.gamma:
                    acc.add((src, pa))
        actions[src] = tuple(acts)
    return ProductMdp(len(pairs), 0, actions, trans, acc, pairs,
                      alphabet=M.alphabet,
                      labels=tuple(M.labels[s] for s, _ in pairs),
                      rewards=rewards)


def product_with_reward_machine(M: Mdp, R: RewardMachine) -> Mdp:
    """Rewardful MDP whose reward is emitted by the machine reading labels."""
    if M.labels is None:
        raise ValueError("the MDP must be labeled")
    ids = {}
    pairs = []

    def intern(s, u):
        if (s, u) not in ids:
            ids[(s, u)] = len(ids)
            pairs.append((s, u))
        return ids[(s, u)]

    intern(M.initial, R.initial)
    actions, trans, rewards = {}, {}, {}
    i = 0
    while i < len(pairs):
        s, u = pairs[i]
        src = ids[(s, u)]
        i += 1
        u2, r = R.step(u, M.labels[s])
        actions[src] = M.actions[s]
        for a in M.actions[s]:
            dist = []
            for t, p in M.trans[(s, a)]:
                dst = intern(t, u2)
                dist.append((dst, p))
                total = r + M.reward(s, a, t)
                if total:
                    rewards[(src, a, dst)] = total
            trans[(src, a)] = tuple(dist)
    return Mdp(len(pairs), 0, actions, trans, alphabet=M.alphabet,
               labels=tuple(M.labels[s] for s, _ in pairs), rewards=rewards,
               check=False)


def _action_pairs(M):
    for s in range(M.n_states):
        for a in M.actions.get(s, ()):
            yield s, a


class _Tableau:
    """Sparse one-row-per-action form of an MDP for vectorized sweeps.

    Rows are ordered by state and, within a state, by the state's action
    tuple, so segment-wise reductions respect the first-action tie-breaking
    convention.
    """

    def __init__(self, M: Mdp):
        rows = []
        data, indices, indptr = [], [], [0]
        expect_r = []
        counts = np.zeros(M.n_states + 1, dtype=np.int64)
        for s in range(M.n_states):
            for a in M.actions.get(s, ()):
                rows.append((s, a))
                counts[s + 1] += 1
                r = 0.0
                for t, p in M.trans[(s, a)]:
                    indices.append(t)
                    data.append(p)
                    r += p * M.reward(s, a, t)
                indptr.append(len(indices))
                expect_r.append(r)
        self.rows = rows
        self.n_states = M.n_states
        self.P = sparse.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int64),
             np.array(indptr, dtype=np.int64)),
            shape=(len(rows), M.n_states))
        self.ones = sparse.csr_matrix(
            (np.ones(len(data)), self.P.indices, self.P.indptr),
            shape=self.P.shape)
        self.nnz_row = np.diff(self.P.indptr)
        self.R = np.array(expect_r)
        self.row_state = np.array([s for s, _ in rows], dtype=np.int64)
        self.offsets = np.cumsum(counts)
        self.nonempty = np.nonzero(np.diff(self.offsets))[0]

    def state_max(self, q, default=0.0):
        """Per-state maximum over the action rows; ``default`` where a state
        has no actions."""
        out = np.full(self.n_states, default)
        if len(self.nonempty):
            out[self.nonempty] = np.maximum.reduceat(
                q, self.offsets[self.nonempty])
        return out

    def state_any(self, row_mask):
        out = np.zeros(self.n_states, dtype=bool)
        if len(self.nonempty):
            out[self.nonempty] = np.logical_or.reduceat(
                row_mask, self.offsets[self.nonempty])
        return out

    def greedy(self, q, tol=1e-12):
        """First action per state that no later action beats by ``tol``."""
        choices = {}
        for s in self.nonempty:
            lo, hi = self.offsets[s], self.offsets[s + 1]
            best, pick = q[lo], lo
            for k in range(lo + 1, hi):
                if q[k] > best + tol:
                    best, pick = q[k], k
            choices[int(s)] = self.rows[pick][1]
        return choices


def mec_decomposition(M: Mdp, within=None):
    """Maximal end components as (state set, set of (state, action)) pairs.

    Iteratively restricts to strongly connected sub-MDPs: actions that may
    leave the candidate set are deleted, states without actions are deleted,
    and the candidates are re-split along SCCs until nothing changes.
    """
    candidates = [set(range(M.n_states)) if within is None else set(within)]
    result = []
    while candidates:
        states = candidates.pop()
        enabled = {}
        for s in sorted(states):
            acts = [a for a in M.actions.get(s, ())
                    if all(t in states for t, _ in M.trans[(s, a)])]
            if acts:
                enabled[s] = acts
        if not enabled:
            continue
        order = sorted(enabled)
        index = {s: i for i, s in enumerate(order)}

        def succ(i):
            s = order[i]
            out = set()
            for a in enabled[s]:
                for t, _ in M.trans[(s, a)]:
                    if t in index:
                        out.add(index[t])
            return sorted(out)

        comp, n_comp = _strongly_connected_components(len(order), succ)
        groups = [set() for _ in range(n_comp)]
        for i, s in enumerate(order):
            groups[comp[i]].add(s)
        for group in groups:
            inner = {(s, a) for s in group for a in enabled[s]
                     if all(t in group for t, _ in M.trans[(s, a)])}
            if not inner:
                continue
            if group == states and len(inner) == sum(
                    len(enabled[s]) for s in group):
                result.append((group, inner))
            else:
                candidates.append(group)
    return sorted(result, key=lambda pair: min(pair[0]))


def accepting_mecs(P: ProductMdp):
    """Union of states of MECs that contain an accepting action."""
    out = set()
    for states, inner in mec_decomposition(P):
        if any((s, a) in P.acc for (s, a) in inner):
            out |= states
    return out


def _bool_vector(n, members):
    out = np.zeros(n, dtype=bool)
    for s in members:
        out[s] = True
    return out


def _prob1_region(M: Mdp, target, tab=None):
    """States that can reach ``target`` with probability one (max)."""
    if tab is None:
        tab = _Tableau(M)
    W = np.ones(M.n_states, dtype=bool)
    tgt = _bool_vector(M.n_states, target)
    while True:
        # backward closure inside W: some action stays in W and makes progress
        stays = (tab.ones @ W.astype(float)) >= tab.nnz_row - 0.5
        R = tgt & W
        while True:
            hits = (tab.ones @ R.astype(float)) > 0.5
            new = R | tab.state_any(stays & hits)
            if np.array_equal(new, R):
                break
            R = new
        if np.array_equal(R, W):
            return set(int(s) for s in np.nonzero(W)[0])
        W = R


def max_reach_prob(M: Mdp, target):
    """Value vector and positional strategy maximizing P(reach target)."""
    tab = _Tableau(M)
    n = M.n_states
    tgt = _bool_vector(n, target)
    # qualitative precomputation
    can_reach = tgt.copy()
    while True:
        hits = (tab.ones @ can_reach.astype(float)) > 0.5
        new = can_reach | tab.state_any(hits)
        if np.array_equal(new, can_reach):
            break
        can_reach = new
    sure_set = _prob1_region(M, target, tab)
    sure = _bool_vector(n, sure_set)
    free = can_reach & ~sure & ~tgt
    v = sure.astype(float)
    while True:
        new = np.where(free, tab.state_max(tab.P @ v, 0.0), v)
        residual = float(np.max(np.abs(new - v))) if n else 0.0
        v = new
        if residual <= 1e-12:
            break
    strategy = {}
    # inside the sure region a value-greedy choice can cycle without ever
    # progressing, so pick actions along the qualitative backward closure
    stays = (tab.ones @ sure.astype(float)) >= tab.nnz_row - 0.5
    covered = tgt & sure
    pending = sure & ~covered
    while True:
        hits = (tab.ones @ covered.astype(float)) > 0.5
        cand = np.nonzero(stays & hits & pending[tab.row_state])[0]
        if cand.size == 0:
            break
        for k in cand:
            s = int(tab.row_state[k])
            if not pending[s]:
                continue
            strategy[s] = tab.rows[k][1]
            pending[s] = False
            covered[s] = True
    q = tab.P @ v
    for s in tab.nonempty:
        s = int(s)
        if s in strategy:
            continue
        lo, hi = tab.offsets[s], tab.offsets[s + 1]
        best, pick = q[lo], lo
        for k in range(lo + 1, hi):
            if q[k] > best + 1e-12:
                best, pick = q[k], k
        strategy[s] = tab.rows[pick][1]
    return v.tolist(), Strategy("positional", choices=strategy)


@dataclass
class Strategy:
    """Positional, finite-memory, or switching decision rule.

    Positional: ``choices`` maps state -> action.  Finite-memory: ``choices``
    maps (state, memory) -> action and ``update`` maps (state, memory) ->
    next memory.  Switching: follow ``first`` for ``switch_step`` steps, then
    ``second`` forever.
    """

    kind: str
    choices: dict = field(default_factory=dict)
    update: dict = field(default_factory=dict)
    memory_size: int = 1
    first: "Strategy" = None
    second: "Strategy" = None
    switch_step: int = 0


def _attractor_strategy(M, inner, goal):
    """Within an end component, positional moves that reach ``goal`` a.s."""
    allowed, preds = {}, {}
    for s, a in inner:
        allowed.setdefault(s, []).append(a)
        for t, _ in M.trans[(s, a)]:
            preds.setdefault(t, []).append(s)
    for s in allowed:
        allowed[s].sort(key=M.actions[s].index)
    reached = set(goal)
    moves = {}
    queue = list(goal)
    while queue:
        t = queue.pop()
        for s in preds.get(t, ()):
            if s in reached or s not in allowed:
                continue
            for a in allowed[s]:
                if any(x in reached for x, _ in M.trans[(s, a)]):
                    moves[s] = a
                    reached.add(s)
                    queue.append(s)
                    break
    return moves


def almost_sure_buchi_region(P: ProductMdp):
    """Winning region and strategy for "accepting action infinitely often".

    The strategy reaches an accepting MEC with probability one; inside the
    MEC it steers toward a state owning an accepting inner action and plays
    that action there.  The attractor keeps the play in the component, so the
    accepting transition recurs almost surely.
    """
    mecs = [(states, inner) for states, inner in mec_decomposition(P)
            if any((s, a) in P.acc for (s, a) in inner)]
    goal = set()
    for states, _ in mecs:
        goal |= states
    region = _prob1_region(P, goal)
    _, reach = max_reach_prob(P, goal)
    choices, update = {}, {}
    for states, inner in mecs:
        acc_action = {}
        for s, a in sorted(inner,
                           key=lambda x: (x[0], P.actions[x[0]].index(x[1]))):
            if (s, a) in P.acc and s not in acc_action:
                acc_action[s] = a
        moves = _attractor_strategy(P, inner, set(acc_action))
        for s in states:
            choices[(s, 0)] = acc_action[s] if s in acc_action else moves[s]
            update[(s, 0)] = 0
    for s in region:
        if (s, 0) not in choices:
            choices[(s, 0)] = reach.choices[s]
            update[(s, 0)] = 0
    strategy = Strategy("finite-memory", choices=choices, update=update,
                        memory_size=1)
    return region, strategy


def discounted_vi(M: Mdp, lam, eps_vi=1e-8):
    """Discounted value iteration with a residual-based stopping rule."""
    if not (0 <= lam < 1):
        raise ValueError("discount factor must lie in [0, 1)")
    stop = eps_vi if lam == 0 else eps_vi * (1 - lam) / (2 * lam)
    tab = _Tableau(M)
    v = np.zeros(M.n_states)
    while True:
        new = tab.state_max(tab.R + lam * (tab.P @ v), 0.0)
        residual = float(np.max(np.abs(new - v))) if M.n_states else 0.0
        v = new
        if residual <= stop or lam == 0:
            break
    strategy = tab.greedy(tab.R + lam * (tab.P @ v))
    return v.tolist(), Strategy("positional", choices=strategy)


def _restrict_to_region(P: ProductMdp, region):
    order = sorted(region)
    remap = {s: i for i, s in enumerate(order)}
    actions, trans, rewards = {}, {}, {}
    acc = set()
    for s in order:
        acts = []
        for a in P.actions.get(s, ()):
            if all(t in region for t, _ in P.trans[(s, a)]):
                acts.append(a)
                trans[(remap[s], a)] = tuple(
                    (remap[t], p) for t, p in P.trans[(s, a)])
                if (s, a) in P.acc:
                    acc.add((remap[s], a))
        actions[remap[s]] = tuple(acts)
    for (s, a, t), r in P.rewards.items():
        if s in region and t in region and a in actions[remap[s]]:
            rewards[(remap[s], a, remap[t])] = r
    sub = ProductMdp(len(order), remap[P.initial], actions, trans, acc,
                     [P.pairs[s] for s in order],
                     alphabet=P.alphabet,
                     labels=tuple(P.labels[s] for s in order)
                     if P.labels else None,
                     rewards=rewards)
    return sub, remap


def switch_horizon(lam, eps, r_max):
    """Steps after which abandoning the reward costs at most eps."""
    if lam == 0 or r_max == 0:
        return 0
    return max(0, math.ceil(math.log(eps * (1 - lam) / (2 * r_max), lam)))


def lexicographic_solve(P: ProductMdp, lam, eps):
    """Maximize discounted reward among almost-surely accepting strategies.

    Raises NoValidStrategy (with the best satisfaction probability attached)
    when the initial state lies outside the almost-sure winning region.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    region, sure = almost_sure_buchi_region(P)
    if P.initial not in region:
        v, _ = max_reach_prob(P, accepting_mecs(P))
        raise NoValidStrategy(v[P.initial])
    sub, remap = _restrict_to_region(P, region)
    values, greedy = discounted_vi(sub, lam)
    d_star = values[sub.initial]
    t_switch = switch_horizon(lam, eps, P.r_max)
    # lift the restricted positional strategy back to original state ids
    inv = {v: k for k, v in remap.items()}
    lifted = Strategy("positional", choices={
        inv[s]: a for s, a in greedy.choices.items()})
    strategy = Strategy("switching", first=lifted, second=sure,
                        switch_step=t_switch)
    return 1.0, d_star, strategy


def strategy_value_check(P: ProductMdp, strategy: Strategy, lam,
                         max_chain=500_000):
    """Satisfaction probability and discounted value of the induced chain."""
    ids = {}
    nodes = []

    def key_init():
        if strategy.kind == "positional":
            return (P.initial,)
        if strategy.kind == "finite-memory":
            return (P.initial, 0)
        return (P.initial, 0, 0)

    def step(node):
        if strategy.kind == "positional":
            (s,) = node
            a = strategy.choices[s]
            return a, lambda t: (t,)
        if strategy.kind == "finite-memory":
            s, m = node
            a = strategy.choices[(s, m)]
            m2 = strategy.update[(s, m)]
            return a, lambda t: (t, m2)
        s, k, m = node
        if k < strategy.switch_step:
            a = strategy.first.choices[s]
            return a, lambda t: (t, k + 1, 0)
        a = strategy.second.choices[(s, m)]
        m2 = strategy.second.update[(s, m)]
        return a, lambda t: (t, strategy.switch_step, m2)

    def intern(node):
        if node not in ids:
            if len(ids) >= max_chain:
                raise ValueError("induced chain exceeds the state budget")
            ids[node] = len(ids)
            nodes.append(node)
        return ids[node]

    intern(key_init())
    edges = {}
    accepting_edge = set()
    reward_of = {}
    i = 0
    while i < len(nodes):
        node = nodes[i]
        src = ids[node]
        i += 1
        s = node[0]
        a, advance = step(node)
        dist = []
        for t, p in P.trans[(s, a)]:
            dst = intern(advance(t))
            dist.append((dst, p))
            reward_of[(src, dst)] = P.reward(s, a, t)
        edges[src] = tuple(dist)
        if (s, a) in P.acc:
            accepting_edge.add(src)
    n = len(nodes)
    comp, n_comp = _strongly_connected_components(
        n, lambda x: [t for t, _ in edges[x]])
    is_bottom = [True] * n_comp
    has_acc = [False] * n_comp
    recurrent = [False] * n_comp
    for x in range(n):
        for t, _ in edges[x]:
            if comp[t] != comp[x]:
                is_bottom[comp[x]] = False
    members = {}
    for x in range(n):
        members.setdefault(comp[x], []).append(x)
    for c, xs in members.items():
        if len(xs) > 1 or any(t == xs[0] for t, _ in edges[xs[0]]):
            recurrent[c] = True
        if any(x in accepting_edge for x in xs):
            has_acc[c] = True
    target = {x for x in range(n)
              if is_bottom[comp[x]] and recurrent[comp[x]] and has_acc[comp[x]]}
    sat = [1.0 if x in target else 0.0 for x in range(n)]
    while True:
        residual = 0.0
        for x in range(n):
            if x in target:
                continue
            val = sum(p * sat[t] for t, p in edges[x])
            residual = max(residual, abs(val - sat[x]))
            sat[x] = val
        if residual <= 1e-12:
            break
    v = [0.0] * n
    while True:
        residual = 0.0
        for x in range(n):
            val = sum(p * (reward_of[(x, t)] + lam * v[t])
                      for t, p in edges[x])
            residual = max(residual, abs(val - v[x]))
            v[x] = val
        if residual <= 1e-12 * max(1.0, P.r_max) or lam == 0:
            break
    return sat[0], v[0]


def mdp_to_json(M: Mdp) -> str:
    ap = list(M.alphabet.ap) if M.alphabet is not None else []
    states = []
    for s in range(M.n_states):
        entry = {"id": s}
        if M.labels is not None:
            letter = M.labels[s]
            entry["label"] = [ap[i] for i in range(len(ap))
                              if letter & (1 << i)]
        states.append(entry)
    actions = []
    for s in range(M.n_states):
        for a in M.actions.get(s, ()):
            entry = {"state": s, "name": a,
                     "successors": [{"target": t, "prob": p}
                                    for t, p in M.trans[(s, a)]]}
            rs = {t: M.reward(s, a, t) for t, _ in M.trans[(s, a)]
                  if M.reward(s, a, t)}
            if rs:
                entry["reward"] = {str(t): r for t, r in rs.items()}
            actions.append(entry)
    doc = {"ap": ap, "states": states, "initial": M.initial,
           "actions": actions}
    return json.dumps(doc, indent=2)


def mdp_from_json(text: str) -> Mdp:
    from .automata import Alphabet
    doc = json.loads(text)
    ap = doc.get("ap")
    if ap is None:
        seen = set()
        for st in doc["states"]:
            seen |= set(st.get("label", []))
        ap = sorted(seen)
    alphabet = Alphabet(tuple(ap)) if ap else None
    n = len(doc["states"])
    labels = None
    if any("label" in st for st in doc["states"]):
        labels = [0] * n
        for st in doc["states"]:
            letter = 0
            for name in st.get("label", []):
                letter |= 1 << ap.index(name)
            labels[st["id"]] = letter
    actions, trans, rewards = {}, {}, {}
    for entry in doc["actions"]:
        s, a = entry["state"], entry["name"]
        actions.setdefault(s, []).append(a)
        trans[(s, a)] = tuple((x["target"], x["prob"])
                              for x in entry["successors"])
        for t, r in entry.get("reward", {}).items():
            rewards[(s, a, int(t))] = r
    return Mdp(n, doc["initial"], actions, trans, alphabet=alphabet,
               labels=labels, rewards=rewards)


def strategy_to_json(strategy: Strategy) -> str:
    doc = {"kind": strategy.kind}
    if strategy.kind == "positional":
        doc["choices"] = [{"state": s, "action": a}
                          for s, a in sorted(strategy.choices.items())]
    elif strategy.kind == "finite-memory":
        doc["choices"] = [{"state": s, "memory": m, "action": a}
                          for (s, m), a in sorted(strategy.choices.items())]
    else:
        doc["switch_step"] = strategy.switch_step
        doc["first"] = json.loads(strategy_to_json(strategy.first))
        doc["second"] = json.loads(strategy_to_json(strategy.second))
    return json.dumps(doc, indent=2)
