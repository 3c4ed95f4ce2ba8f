"""Omega-automata with transition-based acceptance.

Letters of a plain alphabet are bit patterns over the atomic propositions
(an ``int`` in ``range(2**len(ap))``).  Promise alphabets pair each base
letter with a promise identifier: a schema state id, a frozenset of schema
state ids, or the trivial promise ``TOP``.

Acceptance marks sit on transitions.  For an NBA/DBA a marked transition is
accepting; for a UCA it is rejecting.  A DFA carries a final-state set
instead.  Automata need not be complete: a run that cannot continue is
neither accepting (NBA) nor rejecting (UCA).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class TrivialPromise:
    """Singleton identifier for the trivial (always satisfied) promise."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TOP"

    def __reduce__(self):
        return (TrivialPromise, ())


TOP = TrivialPromise()

MAX_LETTERS = 1 << 16


def promise_sort_key(p):
    """Total order on promise identifiers for canonical letter ordering."""
    if p is TOP or isinstance(p, TrivialPromise):
        return (0,)
    if isinstance(p, int):
        return (1, p)
    return (2, tuple(sorted(p)))


def letter_sort_key(letter):
    if isinstance(letter, int):
        return (letter,)
    base, promise = letter
    return (base,) + promise_sort_key(promise)


@dataclass(frozen=True)
class Alphabet:
    """Atomic propositions plus an optional promise component.

    ``promises`` is the ordered vocabulary of promise identifiers; ``None``
    means a plain alphabet whose letters are the ints ``0 .. 2**|ap|-1``.
    """

    ap: tuple
    promises: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "ap", tuple(self.ap))
        if self.promises is not None:
            object.__setattr__(self, "promises", tuple(self.promises))
        if self.size > MAX_LETTERS:
            raise ValueError(
                f"alphabet has {self.size} letters, exceeding the cap of {MAX_LETTERS}"
            )

    @property
    def base_count(self) -> int:
        return 1 << len(self.ap)

    @property
    def size(self) -> int:
        n = self.base_count
        if self.promises is not None:
            n *= len(self.promises)
        return n

    def letters(self) -> list:
        base = range(self.base_count)
        if self.promises is None:
            return list(base)
        return [(b, p) for b in base for p in sorted(self.promises, key=promise_sort_key)]

    def base_of(self, letter) -> int:
        return letter if self.promises is None else letter[0]

    def letter_of(self, assignment: Iterable[str]) -> int:
        """Encode a set of true atomic propositions as a base letter."""
        bits = 0
        for name in assignment:
            bits |= 1 << self.ap.index(name)
        return bits


@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word ``prefix . cycle^omega``."""

    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise ValueError("lasso cycle must be nonempty")

    def letter_at(self, i: int):
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]


class Automaton:
    """Shared representation for NBA / UCA / DFA / DBA automata.

    ``initial is None`` marks an automaton schema (instantiate at any state).
    ``delta`` maps ``(state, letter)`` to a sorted tuple of successors and
    ``gamma`` is the set of marked ``(state, letter, target)`` transitions.
    ``tags`` carries construction metadata (e.g. the fresh initial state of a
    collection automaton, or the phase partition of a complement output).
    """

    KINDS = ("NBA", "UCA", "DFA", "DBA")

    __slots__ = ("kind", "alphabet", "n_states", "initial", "delta", "gamma",
                 "final_states", "tags")

    def __init__(self, kind, alphabet, n_states, initial, delta, gamma=(),
                 final_states=(), tags=None, check=True):
        if kind not in self.KINDS:
            raise ValueError(f"unknown automaton kind {kind!r}")
        self.kind = kind
        self.alphabet = alphabet
        self.n_states = n_states
        self.initial = initial
        self.delta = {k: tuple(sorted(v)) for k, v in delta.items() if v}
        self.gamma = frozenset(gamma)
        self.final_states = frozenset(final_states)
        self.tags = dict(tags) if tags else {}
        if check:
            self._validate()

    def _validate(self):
        if self.initial is not None and not (0 <= self.initial < self.n_states):
            raise ValueError(f"initial state {self.initial} out of range")
        for (q, a), targets in self.delta.items():
            if not (0 <= q < self.n_states):
                raise ValueError(f"transition source {q} out of range")
            if any(not (0 <= t < self.n_states) for t in targets):
                raise ValueError(f"transition target out of range at ({q}, {a!r})")
            if self.kind in ("DFA", "DBA") and len(targets) > 1:
                raise ValueError(
                    f"{self.kind} state {q} has {len(targets)} successors on {a!r}")
        for (q, a, t) in self.gamma:
            if t not in self.delta.get((q, a), ()):
                raise ValueError(f"marked transition ({q}, {a!r}, {t}) is not a transition")
        if any(not (0 <= q < self.n_states) for q in self.final_states):
            raise ValueError("final state out of range")

    @property
    def is_schema(self) -> bool:
        return self.initial is None

    def successors(self, q, letter):
        return self.delta.get((q, letter), ())

    def transitions(self):
        for (q, a), targets in self.delta.items():
            for t in targets:
                yield (q, a, t)

    def reinterpret(self, kind) -> "Automaton":
        """Same structure read under a different acceptance semantics."""
        return Automaton(kind, self.alphabet, self.n_states, self.initial,
                         self.delta, self.gamma, self.final_states, self.tags,
                         check=False)

    def with_tags(self, **tags) -> "Automaton":
        merged = dict(self.tags)
        merged.update(tags)
        return Automaton(self.kind, self.alphabet, self.n_states, self.initial,
                         self.delta, self.gamma, self.final_states, merged,
                         check=False)

    def __repr__(self):
        return (f"Automaton({self.kind}, states={self.n_states}, "
                f"initial={self.initial}, transitions={sum(len(v) for v in self.delta.values())})")


def instantiate(schema: Automaton, q: int) -> Automaton:
    """Pick an initial state for an automaton schema."""
    if not schema.is_schema:
        raise ValueError("automaton already has an initial state")
    if not (0 <= q < schema.n_states):
        raise ValueError(f"unknown state id {q}")
    return Automaton(schema.kind, schema.alphabet, schema.n_states, q,
                     schema.delta, schema.gamma, schema.final_states,
                     schema.tags, check=False)


def _strongly_connected_components(n_nodes, succ):
    """Iterative Tarjan.  ``succ`` maps a node index to an iterable of nodes.

    Returns a list mapping node -> component id; components are numbered in
    reverse topological order (a component's successors have lower ids).
    """
    index = [None] * n_nodes
    low = [0] * n_nodes
    on_stack = [False] * n_nodes
    comp = [None] * n_nodes
    stack = []
    next_index = 0
    n_comps = 0
    for root in range(n_nodes):
        if index[root] is not None:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = next_index
        next_index += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if index[nxt] is None:
                    index[nxt] = low[nxt] = next_index
                    next_index += 1
                    stack.append(nxt)
                    on_stack[nxt] = True
                    work.append((nxt, iter(succ(nxt))))
                    advanced = True
                    break
                elif on_stack[nxt]:
                    if index[nxt] < low[node]:
                        low[node] = index[nxt]
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[node] < low[parent]:
                    low[parent] = low[node]
            if low[node] == index[node]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = n_comps
                    if w == node:
                        break
                n_comps += 1
    return comp, n_comps


def reachable_states(A: Automaton, start=None) -> set:
    if start is None:
        if A.is_schema:
            raise ValueError("schema has no initial state")
        start = A.initial
    seen = {start}
    frontier = [start]
    letters = A.alphabet.letters()
    while frontier:
        q = frontier.pop()
        for a in letters:
            for t in A.successors(q, a):
                if t not in seen:
                    seen.add(t)
                    frontier.append(t)
    return seen


def lasso_member_nba(A: Automaton, w: LassoWord) -> bool:
    """Does some run of the NBA/DBA on ``prefix . cycle^omega`` visit an
    accepting transition infinitely often?"""
    if A.is_schema:
        raise ValueError("schema has no initial state")
    current = {A.initial}
    for a in w.prefix:
        nxt = set()
        for q in current:
            nxt.update(A.successors(q, a))
        current = nxt
        if not current:
            return False
    k = len(w.cycle)
    # Nodes of the cycle layer are (state, position); find a marked edge on a
    # cycle reachable from the entry set.
    nodes = {}

    def node_id(q, j):
        key = (q, j)
        if key not in nodes:
            nodes[key] = len(nodes)
        return nodes[key]

    succ_lists = []
    edge_marks = []  # (src_id, dst_id) marked
    frontier = [(q, 0) for q in current]
    for q, j in frontier:
        node_id(q, j)
    i = 0
    while i < len(frontier):
        q, j = frontier[i]
        i += 1
        a = w.cycle[j]
        nj = (j + 1) % k
        sid = nodes[(q, j)]
        while len(succ_lists) <= sid:
            succ_lists.append([])
        for t in A.successors(q, a):
            if (t, nj) not in nodes:
                node_id(t, nj)
                frontier.append((t, nj))
            tid = nodes[(t, nj)]
            succ_lists[sid].append(tid)
            if (q, a, t) in A.gamma:
                edge_marks.append((sid, tid))
    while len(succ_lists) < len(nodes):
        succ_lists.append([])
    if not edge_marks:
        return False
    comp, _ = _strongly_connected_components(len(nodes), lambda x: succ_lists[x])
    for sid, tid in edge_marks:
        if comp[sid] == comp[tid]:
            # Single-node components only qualify through self-loops, which is
            # exactly the sid == tid case here.
            return True
    return False


def lasso_member_uca(A: Automaton, w: LassoWord) -> bool:
    """A UCA accepts iff no run visits a rejecting transition infinitely often."""
    return not lasso_member_nba(A.reinterpret("NBA"), w)


def nonempty_states(A: Automaton) -> set:
    """States of an NBA from which an accepting lasso exists."""
    letters = A.alphabet.letters()
    succ = {q: set() for q in range(A.n_states)}
    pred = {q: set() for q in range(A.n_states)}
    for (q, a), targets in A.delta.items():
        for t in targets:
            succ[q].add(t)
            pred[t].add(q)
    comp, _ = _strongly_connected_components(A.n_states, lambda q: succ[q])
    live_comps = set()
    for (q, a, t) in A.gamma:
        if comp[q] == comp[t]:
            live_comps.add(comp[q])
    live = {q for q in range(A.n_states) if comp[q] in live_comps}
    frontier = list(live)
    while frontier:
        q = frontier.pop()
        for p in pred[q]:
            if p not in live:
                live.add(p)
                frontier.append(p)
    return live


def is_empty(A: Automaton) -> bool:
    return A.initial not in nonempty_states(A)


def intersect_nba(A: Automaton, B: Automaton) -> Automaton:
    """Buchi intersection with a two-phase wait flag for the transition marks."""
    if A.alphabet != B.alphabet:
        raise ValueError("alphabet mismatch")
    if A.is_schema or B.is_schema:
        raise ValueError("cannot intersect schemas")
    letters = A.alphabet.letters()
    ids = {}
    order = []

    def sid(state):
        if state not in ids:
            ids[state] = len(ids)
            order.append(state)
        return ids[state]

    start = (A.initial, B.initial, 0)
    sid(start)
    delta = {}
    gamma = set()
    i = 0
    while i < len(order):
        p, q, flag = order[i]
        src = ids[(p, q, flag)]
        i += 1
        for a in letters:
            targets = []
            for p2 in A.successors(p, a):
                for q2 in B.successors(q, a):
                    acc_a = (p, a, p2) in A.gamma
                    acc_b = (q, a, q2) in B.gamma
                    nflag = flag
                    mark = False
                    if nflag == 0 and acc_a:
                        nflag = 1
                    if nflag == 1 and acc_b:
                        nflag = 0
                        mark = True
                    dst = sid((p2, q2, nflag))
                    targets.append(dst)
                    if mark:
                        gamma.add((src, a, dst))
            if targets:
                delta[(src, a)] = tuple(sorted(set(targets)))
    gamma = {(q, a, t) for (q, a, t) in gamma if t in delta.get((q, a), ())}
    return Automaton("NBA", A.alphabet, len(order), 0, delta, gamma, check=False)


def is_strongly_limit_deterministic(A: Automaton):
    """Check for a partition (Q1, Q2) that is deterministic inside each part,
    closed and fully deterministic on Q2, with every marked transition lying
    inside Q2.

    Returns ``(flag, (Q1, Q2))``; the partition is meaningful only when the
    flag is true.
    """
    letters = A.alphabet.letters()
    # Greatest set closed under successors where every state is deterministic.
    q2 = set(range(A.n_states))
    changed = True
    while changed:
        changed = False
        for q in list(q2):
            ok = True
            for a in letters:
                targets = A.successors(q, a)
                if len(targets) > 1 or any(t not in q2 for t in targets):
                    ok = False
                    break
            if not ok:
                q2.discard(q)
                changed = True
    for (q, a, t) in A.gamma:
        if q not in q2 or t not in q2:
            return False, (set(range(A.n_states)) - q2, q2)
    q1 = set(range(A.n_states)) - q2
    for q in q1:
        for a in letters:
            in_q1 = [t for t in A.successors(q, a) if t in q1]
            if len(in_q1) > 1:
                return False, (q1, q2)
    return True, (q1, q2)


def canonical_order(A: Automaton) -> list:
    """BFS renumbering from the initial state, letters in canonical order.

    Unreachable states follow in original id order.
    """
    if A.is_schema:
        return list(range(A.n_states))
    letters = sorted(A.alphabet.letters(), key=letter_sort_key)
    order = [A.initial]
    seen = {A.initial}
    i = 0
    while i < len(order):
        q = order[i]
        i += 1
        for a in letters:
            for t in A.successors(q, a):
                if t not in seen:
                    seen.add(t)
                    order.append(t)
    for q in range(A.n_states):
        if q not in seen:
            order.append(q)
    return order


def renumber(A: Automaton, order) -> Automaton:
    """Relabel states so that ``order[i]`` becomes state ``i``."""
    old_to_new = {old: new for new, old in enumerate(order)}
    delta = {}
    for (q, a), targets in A.delta.items():
        delta[(old_to_new[q], a)] = tuple(sorted(old_to_new[t] for t in targets))
    gamma = {(old_to_new[q], a, old_to_new[t]) for (q, a, t) in A.gamma}
    finals = {old_to_new[q] for q in A.final_states}
    initial = None if A.initial is None else old_to_new[A.initial]
    tags = dict(A.tags)
    for key in ("collection_initial",):
        if key in tags:
            tags[key] = old_to_new[tags[key]]
    if "parts" in tags:
        q1, q2 = tags["parts"]
        tags["parts"] = ({old_to_new[q] for q in q1 if q in old_to_new},
                         {old_to_new[q] for q in q2 if q in old_to_new})
    return Automaton(A.kind, A.alphabet, A.n_states, initial, delta, gamma,
                     finals, tags, check=False)
