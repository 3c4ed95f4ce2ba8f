"""Decision processes with regular lookbacks and omega-regular lookaheads.

An ODP action is a triple (guard, name, promise): the guard is a state of a
lookback DFA schema and enables the action exactly when the label prefix read
so far, including the current state's label, is accepted from that state; the
promise is a state of a lookahead UCA schema that the suffix emitted from the
action's target onward must satisfy.  ``None`` encodes the trivial guard or
promise.

Solving proceeds in three steps: lookbacks are eliminated by tracking the
reachable guard-automaton states along the prefix, promises are eliminated by
emitting them as part of the letters and checking them all at once with the
complement of a collection automaton, and the resulting product is handed to
the lexicographic solver.  The product strategy is translated back into a
strategy over the original process.
"""

from __future__ import annotations

import json

from .automata import TOP, Alphabet, Automaton, LassoWord, instantiate, \
    lasso_member_uca
from .collect import build_collection
from .complement import CapacityError, complement_uca
from .mdp import Mdp, lexicographic_solve, product_with_nba


class Odp:
    """Finite decision process with guarded, promising actions.

    ``actions`` maps a state to an ordered tuple of (guard, name, promise)
    triples and ``trans`` maps (state, triple) to a (target, probability)
    tuple; ``rewards`` maps (state, triple, target) to a real.  ``lookback``
    is a DFA schema with a final-state set, ``lookahead`` a UCA schema;
    either may be ``None`` when the process never uses it.
    """

    def __init__(self, n_states, initial, actions, trans, alphabet, labels,
                 lookback=None, lookahead=None, rewards=None, check=True):
        self.n_states = n_states
        self.initial = initial
        self.actions = {s: tuple(a) for s, a in actions.items()}
        self.trans = {k: tuple(v) for k, v in trans.items()}
        self.alphabet = alphabet
        self.labels = tuple(labels)
        self.lookback = lookback
        self.lookahead = lookahead
        self.rewards = dict(rewards) if rewards else {}
        if check:
            self._validate()

    def _validate(self):
        if not (0 <= self.initial < self.n_states):
            raise ValueError(f"initial state {self.initial} out of range")
        if len(self.labels) != self.n_states:
            raise ValueError("label vector length mismatch")
        for schema, kind in ((self.lookback, "DFA"), (self.lookahead, "UCA")):
            if schema is None:
                continue
            if schema.kind != kind or not schema.is_schema:
                raise ValueError(f"expected a {kind} schema")
            if schema.alphabet.ap != self.alphabet.ap:
                raise ValueError("schema alphabet mismatch")
        if self.lookback is not None and not self.lookback.final_states:
            raise ValueError("lookback schema has no final states")
        for s in range(self.n_states):
            if not self.actions.get(s):
                raise ValueError(f"state {s} has no actions")
            for act in self.actions[s]:
                beta, _, alpha = act
                if beta is not None:
                    if self.lookback is None or \
                            not (0 <= beta < self.lookback.n_states):
                        raise ValueError(f"bad guard state {beta}")
                if alpha is not None:
                    if self.lookahead is None or \
                            not (0 <= alpha < self.lookahead.n_states):
                        raise ValueError(f"bad promise state {alpha}")
                dist = self.trans.get((s, act))
                if not dist:
                    raise ValueError(f"missing distribution for ({s}, {act})")
                total = sum(p for _, p in dist)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(
                        f"distribution of ({s}, {act}) sums to {total}")
                for t, p in dist:
                    if not (0 <= t < self.n_states) or p < 0:
                        raise ValueError(f"bad transition ({s}, {act}) -> {t}")

    def reward(self, s, act, t):
        return self.rewards.get((s, act, t), 0.0)


def _tracker_step(B: Automaton, tracker, letter):
    return tuple(frozenset(t for q in tracker[p]
                           for t in B.successors(q, letter))
                 for p in range(B.n_states))


def remove_lookback(D: Odp, max_trackers: int = 100_000) -> Odp:
    """Compile the guards away by annotating states with guard trackers.

    A tracker records, for every lookback schema state, the set of states the
    schema can reach on the label prefix read so far (the current state's
    label included); an action is enabled exactly when the tracker of its
    guard state intersects the final set.  A reachable state where no action
    is enabled is a modeling error and raises ValueError.
    """
    if D.lookback is None:
        return D
    B = D.lookback
    final = B.final_states
    t0 = _tracker_step(B, tuple(frozenset((p,)) for p in range(B.n_states)),
                       D.labels[D.initial])
    ids = {}
    pairs = []

    def intern(s, tracker):
        if (s, tracker) not in ids:
            if len(ids) >= max_trackers:
                raise CapacityError("tracker state budget exceeded", len(ids))
            ids[(s, tracker)] = len(ids)
            pairs.append((s, tracker))
        return ids[(s, tracker)]

    intern(D.initial, t0)
    actions, trans, rewards, labels = {}, {}, {}, []
    i = 0
    while i < len(pairs):
        s, tracker = pairs[i]
        src = ids[(s, tracker)]
        i += 1
        labels.append(D.labels[s])
        enabled = []
        for act in D.actions[s]:
            beta = act[0]
            if beta is not None and not (tracker[beta] & final):
                continue
            enabled.append(act)
            dist = []
            for t, p in D.trans[(s, act)]:
                dst = intern(t, _tracker_step(B, tracker, D.labels[t]))
                dist.append((dst, p))
                r = D.reward(s, act, t)
                if r:
                    rewards[(src, act, dst)] = r
            trans[(src, act)] = tuple(dist)
        if not enabled:
            raise ValueError(
                f"state {s} is deadlocked: no guard holds on some prefix")
        actions[src] = tuple(enabled)
    out = Odp(len(pairs), 0, actions, trans, D.alphabet, labels,
              lookback=None, lookahead=D.lookahead, rewards=rewards,
              check=False)
    out.pairs = pairs
    return out


class PromiseMdp(Mdp):
    """MDP over the promise alphabet; ``pairs[i]`` is (odp state, pending).

    The pending component is the promise made by the action that entered the
    state (the trivial promise at the initial state), so the letter emitted
    at a state covers exactly the suffix the promise speaks about.
    """

    def __init__(self, *args, pairs=(), **kwargs):
        super().__init__(*args, **kwargs)
        self.pairs = tuple(pairs)


def _trivial_lookahead(ap) -> Automaton:
    base = Alphabet(ap)
    delta = {(0, a): (0,) for a in base.letters()}
    return Automaton("UCA", base, 1, None, delta, ())


def remove_lookahead(D: Odp, promise_vocab: str = "used",
                     reduce: bool = True, nba: Automaton | None = None):
    """Turn promises into letters; returns (PromiseMdp, checking NBA).

    The process must have trivial lookback.  Each step emits the state label
    paired with the promise that entered the state, the collection automaton
    of the lookahead schema accepts exactly the traces whose every promise
    holds, and its complement (a good-for-MDPs NBA for the same language,
    with entry rankings pinned at the collecting state) is returned for the
    downstream product.

    With ``promise_vocab="used"`` the letter alphabet is restricted to the
    promises the process actually makes; since the product only ever emits
    those letters, this changes nothing downstream but can shrink the
    complement dramatically.  ``"all"`` keeps the full schema vocabulary.

    A previously computed checking NBA for the same schema and vocabulary
    can be passed as ``nba`` to skip the complementation.
    """
    if D.lookback is not None:
        raise ValueError("remove the lookbacks first")
    schema = D.lookahead if D.lookahead is not None \
        else _trivial_lookahead(D.alphabet.ap)
    if nba is not None:
        N = nba
    else:
        if promise_vocab == "used":
            used = {act[2] for s in range(D.n_states)
                    for act in D.actions[s]}
            used.discard(None)
            vocab = (TOP,) + tuple(sorted(used))
        elif promise_vocab == "all":
            vocab = None
        else:
            raise ValueError(
                f"unknown promise vocabulary {promise_vocab!r}")
        C = build_collection(schema, "at-most-one", promises=vocab)
        N = complement_uca(C)
        if reduce:
            from .reduction import lump_all, lump_final, merge_lang_final, \
                prune_empty
            N = lump_all(merge_lang_final(lump_final(prune_empty(N))))
    ids = {}
    pairs = []

    def intern(s, pending):
        if (s, pending) not in ids:
            ids[(s, pending)] = len(ids)
            pairs.append((s, pending))
        return ids[(s, pending)]

    intern(D.initial, TOP)
    actions, trans, rewards, labels = {}, {}, {}, []
    i = 0
    while i < len(pairs):
        s, pending = pairs[i]
        src = ids[(s, pending)]
        i += 1
        labels.append((D.labels[s], pending))
        actions[src] = D.actions[s]
        for act in D.actions[s]:
            alpha = TOP if act[2] is None else act[2]
            dist = []
            for t, p in D.trans[(s, act)]:
                dst = intern(t, alpha)
                dist.append((dst, p))
                r = D.reward(s, act, t)
                if r:
                    rewards[(src, act, dst)] = r
            trans[(src, act)] = tuple(dist)
    M = PromiseMdp(len(pairs), 0, actions, trans, alphabet=N.alphabet,
                   labels=labels, rewards=rewards, pairs=pairs, check=False)
    return M, N


def as_mdp(D: Odp) -> Mdp:
    """View a process with trivial lookback and no promises as a plain MDP."""
    if D.lookback is not None:
        raise ValueError("remove the lookbacks first")
    if any(act[2] is not None for s in range(D.n_states)
           for act in D.actions[s]):
        raise ValueError("the process makes promises")
    return Mdp(D.n_states, D.initial, D.actions, D.trans,
               alphabet=Alphabet(D.alphabet.ap), labels=D.labels,
               rewards=D.rewards, check=False)


class OdpStrategy:
    """Product strategy translated back to the original decision process.

    Memory is a (product state, step count, second-phase memory) triple; the
    step count saturates at the switching point.  ``choose`` yields the ODP
    action triple to play and ``advance`` moves the memory deterministically
    given the successor ODP state.
    """

    def __init__(self, product, inner, odp_state_of):
        self.product = product
        self.inner = inner
        self.odp_state_of = tuple(odp_state_of)

    def initial_memory(self):
        return (self.product.initial, 0, 0)

    def _product_action(self, memory):
        x, k, m = memory
        if k < self.inner.switch_step:
            return self.inner.first.choices[x]
        return self.inner.second.choices[(x, m)]

    def choose(self, memory):
        act, _ = self._product_action(memory)
        return act

    def advance(self, memory, next_state):
        x, k, m = memory
        pa = self._product_action(memory)
        for dst, _ in self.product.trans[(x, pa)]:
            if self.odp_state_of[dst] == next_state:
                if k < self.inner.switch_step:
                    return (dst, k + 1, 0)
                return (dst, self.inner.switch_step,
                        self.inner.second.update[(x, m)])
        raise ValueError(f"state {next_state} is not a successor under {pa}")


def solve_odp(D: Odp, lam, eps, nba=None):
    """Optimal discounted value among almost-surely promise-keeping
    strategies, with an eps-optimal strategy over the original process.

    Raises NoValidStrategy when no strategy keeps all promises almost
    surely, and CapacityError when a compilation budget is exceeded.
    ``nba`` forwards a precomputed checking automaton to the lookahead
    elimination.
    """
    compiled = remove_lookback(D)
    M, N = remove_lookahead(compiled, nba=nba)
    P = product_with_nba(M, N)
    _, value, sigma = lexicographic_solve(P, lam, eps)
    lookback_pairs = getattr(compiled, "pairs", None)
    odp_state_of = []
    for m_id, _ in P.pairs:
        s, _ = M.pairs[m_id]
        odp_state_of.append(s if lookback_pairs is None
                            else lookback_pairs[s][0])
    return value, OdpStrategy(P, sigma, odp_state_of)


def validate_run(D: Odp, states, actions, loop):
    """Check a lasso-shaped run: states[loop:] repeats after states[-1].

    Every guard must accept its prefix (checked by replaying the guard
    tracker around the loop until it cycles) and every promise must accept
    the label suffix from its action's target onward.  Raises ValueError on
    a malformed run, returns the validity verdict otherwise.
    """
    n = len(states)
    if n == 0 or len(actions) != n or not (0 <= loop < n):
        raise ValueError("malformed lasso run")
    for j in range(n):
        s, act = states[j], actions[j]
        if act not in D.actions.get(s, ()):
            raise ValueError(f"action {act} not available at state {s}")
        target = states[j + 1] if j + 1 < n else states[loop]
        if not any(t == target and p > 0 for t, p in D.trans[(s, act)]):
            raise ValueError(f"impossible step ({s}, {act}) -> {target}")
    labels = [D.labels[s] for s in states]

    if D.lookback is not None:
        B = D.lookback
        final = B.final_states
        tracker = _tracker_step(
            B, tuple(frozenset((p,)) for p in range(B.n_states)), labels[0])
        j = 0
        seen = set()
        while (j, tracker) not in seen:
            seen.add((j, tracker))
            beta = actions[j][0]
            if beta is not None and not (tracker[beta] & final):
                return False
            nxt = j + 1 if j + 1 < n else loop
            tracker = _tracker_step(B, tracker, labels[nxt])
            j = nxt

    for j in range(n):
        alpha = actions[j][2]
        if alpha is None:
            continue
        start = j + 1 if j + 1 < n else loop
        w = LassoWord(tuple(labels[start:]), tuple(labels[loop:]))
        if not lasso_member_uca(instantiate(D.lookahead, alpha), w):
            return False
    return True


def _schema_to_doc(A: Automaton, ap):
    names = list(ap)
    entries = []
    for (q, letter), targets in sorted(A.delta.items()):
        marked = [t for t in targets if (q, letter, t) in A.gamma]
        entry = {"from": q,
                 "letter": [names[i] for i in range(len(names))
                            if letter & (1 << i)],
                 "to": list(targets)}
        if marked:
            entry["marked"] = marked
        entries.append(entry)
    doc = {"kind": A.kind, "states": A.n_states, "transitions": entries}
    if A.final_states:
        doc["final"] = sorted(A.final_states)
    return doc


def _schema_from_doc(doc, ap):
    base = Alphabet(tuple(ap))
    delta, gamma = {}, set()
    for entry in doc["transitions"]:
        letter = base.letter_of(entry["letter"])
        q = entry["from"]
        delta[(q, letter)] = tuple(entry["to"])
        for t in entry.get("marked", ()):
            gamma.add((q, letter, t))
    return Automaton(doc["kind"], base, doc["states"], None, delta, gamma,
                     final_states=doc.get("final", ()))


def odp_to_json(D: Odp) -> str:
    ap = list(D.alphabet.ap)
    states = []
    for s in range(D.n_states):
        letter = D.labels[s]
        states.append({"id": s,
                       "label": [ap[i] for i in range(len(ap))
                                 if letter & (1 << i)]})
    actions = []
    for s in range(D.n_states):
        for act in D.actions[s]:
            beta, name, alpha = act
            entry = {"state": s, "name": name, "guard": beta,
                     "promise": alpha,
                     "successors": [{"target": t, "prob": p}
                                    for t, p in D.trans[(s, act)]]}
            rs = {str(t): D.reward(s, act, t) for t, _ in D.trans[(s, act)]
                  if D.reward(s, act, t)}
            if rs:
                entry["reward"] = rs
            actions.append(entry)
    doc = {"ap": ap, "states": states, "initial": D.initial,
           "actions": actions}
    if D.lookback is not None:
        doc["lookback"] = _schema_to_doc(D.lookback, ap)
    if D.lookahead is not None:
        doc["lookahead"] = _schema_to_doc(D.lookahead, ap)
    return json.dumps(doc, indent=2)


def odp_from_json(text: str) -> Odp:
    doc = json.loads(text)
    ap = doc["ap"]
    base = Alphabet(tuple(ap))
    n = len(doc["states"])
    labels = [0] * n
    for st in doc["states"]:
        letter = 0
        for name in st.get("label", []):
            letter |= 1 << ap.index(name)
        labels[st["id"]] = letter
    lookback = _schema_from_doc(doc["lookback"], ap) \
        if "lookback" in doc else None
    lookahead = _schema_from_doc(doc["lookahead"], ap) \
        if "lookahead" in doc else None
    actions, trans, rewards = {}, {}, {}
    for entry in doc["actions"]:
        s = entry["state"]
        act = (entry.get("guard"), entry["name"], entry.get("promise"))
        actions.setdefault(s, []).append(act)
        trans[(s, act)] = tuple((x["target"], x["prob"])
                                for x in entry["successors"])
        for t, r in entry.get("reward", {}).items():
            rewards[(s, act, int(t))] = r
    return Odp(n, doc["initial"], actions, trans, base, labels,
               lookback=lookback, lookahead=lookahead, rewards=rewards)
