"""History-tree determinization of universal co-Buchi automata.

A history tree abstracts the possible run prefixes of an automaton on an
input word: every node is labeled with a nonempty state set, each label is a
proper superset of the union of the children's labels, and sibling labels are
disjoint.  Reading a letter transforms the tree in four steps (spawn,
de-duplicate, remove and collapse, compress), and the per-step stability and
collapse annotations drive a deterministic Streett acceptance condition: a
word is accepted by the UCA exactly when every node name is only finitely
often collapsing or infinitely often unstable.

This module is deliberately independent from the rank-based construction so
it can serve as ground truth for it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .automata import Automaton, letter_sort_key
from .complement import CapacityError


def _validate_tree(tree):
    """Check the three structural invariants; raises on violation."""
    nodes = dict(tree)
    if len(nodes) != len(tree):
        raise ValueError("duplicate node names")
    for name, label in nodes.items():
        if not label:
            raise ValueError(f"empty label at {name}")
        for k in range(len(name)):
            if name[:k] not in nodes:
                raise ValueError(f"missing ancestor of {name}")
        if name and name[:-1] + (name[-1] - 1,) not in nodes and name[-1] > 0:
            raise ValueError(f"missing older sibling of {name}")
    for name, label in nodes.items():
        children = [n for n in nodes if n[:-1] == name and len(n) == len(name) + 1]
        union = set()
        for c in children:
            if union & nodes[c]:
                raise ValueError(f"overlapping children of {name}")
            union |= nodes[c]
        if not union < label:
            raise ValueError(f"children do not refine {name} properly")


def initial_tree(A: Automaton):
    """The one-node tree hosting the initial state at the root."""
    return (((), frozenset((A.initial,))),)


def sigma_successor(tree, A: Automaton, letter):
    """Apply one input letter to a history tree.

    Returns the successor tree together with per-name annotations: the names
    that stayed stable, the stable names that collapsed, the names freshly
    introduced, and the names that disappeared.
    """
    nodes = dict(tree)
    degree = {}
    for name in nodes:
        if name:
            parent = name[:-1]
            degree[parent] = max(degree.get(parent, 0), name[-1] + 1)

    # step 1: move every label along the letter and spawn one child per node
    # holding the states reached through marked transitions
    spawned_l = {}
    for name in sorted(nodes):
        succ, marked = set(), set()
        for q in nodes[name]:
            for t in A.successors(q, letter):
                succ.add(t)
                if (q, letter, t) in A.gamma:
                    marked.add(t)
        spawned_l[name] = succ
        spawned_l[name + (degree.get(name, 0),)] = marked

    # step 2: a state belongs to the oldest sibling that can host it
    l2 = {}
    for name in sorted(spawned_l):
        label = set(spawned_l[name])
        if name:
            parent = name[:-1]
            label &= l2[parent]
            for j in range(name[-1]):
                sib = parent + (j,)
                if sib in l2:
                    label -= l2[sib]
        l2[name] = label

    # step 3: drop empty nodes; a node whose label is exactly covered by its
    # children loses all descendants (it "collapses")
    partitioned = set()
    for name, label in l2.items():
        if not label:
            continue
        union = set()
        for other, olabel in l2.items():
            if len(other) == len(name) + 1 and other[:-1] == name:
                union |= olabel
        if union == label:
            partitioned.add(name)
    survivors = []
    for name in sorted(l2):
        if not l2[name]:
            continue
        if any(name[:k] in partitioned for k in range(len(name))):
            continue
        survivors.append(name)

    # step 4: compress to an order-closed tree; renamed nodes are exactly the
    # unstable ones
    alive = set(survivors)
    comp = {}
    for name in survivors:
        if not name:
            comp[name] = ()
            continue
        parent = name[:-1]
        j = sum(1 for k in range(name[-1]) if parent + (k,) in alive)
        comp[name] = comp[parent] + (j,)

    stable = {name for name in survivors if comp[name] == name}
    collapsing = {name for name in stable if name in partitioned}
    new_tree = tuple(sorted((comp[name], frozenset(l2[name]))
                            for name in survivors))
    new_names = {name for name, _ in new_tree}
    flags = {
        "stable": stable,
        "collapsing": collapsing,
        "spawned": new_names - set(nodes),
        "removed": set(nodes) - new_names,
    }
    return new_tree, flags


@dataclass
class StreettDsa:
    """Deterministic automaton whose states are history trees.

    Acceptance: for every tracked node name, the run takes collapsing
    transitions of that name finitely often or unstable ones infinitely
    often.  Only names that ever collapse carry a pair; all other names are
    unconstrained.
    """

    alphabet: object
    n_states: int
    initial: int
    delta: dict
    pairs: dict = field(default_factory=dict)
    trees: list = field(default_factory=list)


def determinize_uca(A: Automaton, max_states: int = 200_000,
                    validate: bool = False) -> StreettDsa:
    """Build the reachable Streett automaton from the initial history tree."""
    if A.kind != "UCA":
        raise ValueError("determinization expects a UCA")
    if A.is_schema:
        raise ValueError("instantiate the schema first")
    letters = sorted(A.alphabet.letters(), key=letter_sort_key)
    ids = {}
    trees = []
    annotations = {}

    def intern(tree):
        if tree not in ids:
            if len(ids) >= max_states:
                raise CapacityError("history tree budget exceeded", len(ids))
            ids[tree] = len(ids)
            trees.append(tree)
        return ids[tree]

    intern(initial_tree(A))
    delta = {}
    i = 0
    while i < len(trees):
        tree = trees[i]
        src = ids[tree]
        i += 1
        if validate:
            _validate_tree(tree)
        for a in letters:
            succ, flags = sigma_successor(tree, A, a)
            delta[(src, a)] = intern(succ)
            annotations[(src, a)] = flags

    pairs = {}
    collapsers = set()
    for flags in annotations.values():
        collapsers |= flags["collapsing"]
    for name in sorted(collapsers):
        coll = {t for t, flags in annotations.items()
                if name in flags["collapsing"]}
        unst = {t for t, flags in annotations.items()
                if name not in flags["stable"]}
        pairs[name] = (coll, unst)
    return StreettDsa(A.alphabet, len(trees), ids[initial_tree(A)], delta,
                      pairs, trees)


def lasso_member_dsa(D: StreettDsa, w) -> bool:
    """Run the deterministic lasso and check every Streett pair on its loop."""
    s = D.initial
    for a in w.prefix:
        s = D.delta[(s, a)]
    seen = {}
    anchors = []
    while s not in seen:
        seen[s] = len(anchors)
        anchors.append(s)
        for a in w.cycle:
            s = D.delta[(s, a)]
    loop = set()
    cur = anchors[seen[s]]
    for _ in range(len(anchors) - seen[s]):
        for a in w.cycle:
            loop.add((cur, a))
            cur = D.delta[(cur, a)]
    for coll, unst in D.pairs.values():
        if loop & coll and not loop & unst:
            return False
    return True


def streett_mdp_max_prob(M, D: StreettDsa):
    """Maximum probability that an MDP trace satisfies the Streett DSA.

    Builds the (deterministic) product, finds its maximal end components,
    and decides acceptance of each by recursively deleting the states whose
    automaton transition collapses a violated pair and re-decomposing.  The
    value is the maximum probability of reaching an accepting component.
    """
    from .mdp import Mdp, max_reach_prob, mec_decomposition
    if M.labels is None:
        raise ValueError("the MDP must be labeled")
    if M.alphabet is not None and D.alphabet.ap != M.alphabet.ap:
        raise ValueError("alphabet mismatch between MDP and automaton")
    ids = {}
    pairs = []

    def intern(s, d):
        if (s, d) not in ids:
            ids[(s, d)] = len(ids)
            pairs.append((s, d))
        return ids[(s, d)]

    intern(M.initial, D.initial)
    actions, trans = {}, {}
    i = 0
    while i < len(pairs):
        s, d = pairs[i]
        src = ids[(s, d)]
        i += 1
        d2 = D.delta[(d, M.labels[s])]
        actions[src] = M.actions[s]
        for a in M.actions[s]:
            trans[(src, a)] = tuple((intern(t, d2), p)
                                    for t, p in M.trans[(s, a)])
    product = Mdp(len(pairs), 0, actions, trans, check=False)
    # the automaton transition taken from a product state is fixed
    dsa_of = [(d, M.labels[s]) for s, d in pairs]
    streett = list(D.pairs.values())

    def accepting(states):
        taken = {dsa_of[x] for x in states}
        violated = [(coll, unst) for coll, unst in streett
                    if taken & coll and not taken & unst]
        if not violated:
            return True
        bad = set()
        for coll, _ in violated:
            bad |= coll
        keep = {x for x in states if dsa_of[x] not in bad}
        for sub, _ in mec_decomposition(product, within=keep):
            if accepting(sub):
                return True
        return False

    goal = set()
    for states, _ in mec_decomposition(product):
        if accepting(states):
            goal |= states
    values, _ = max_reach_prob(product, goal)
    return values[0], goal


def gfm_value_test(C: Automaton, A: Automaton, M, tol=1e-7):
    """Compare the product value of C with the semantic value of L(A).

    A good-for-MDPs automaton with the right language yields equal values
    for every MDP; a gap (product value below the semantic one) witnesses
    that C is not good for MDPs or has the wrong language.
    """
    from .mdp import accepting_mecs, max_reach_prob, product_with_nba
    P = product_with_nba(M, C)
    v, _ = max_reach_prob(P, accepting_mecs(P))
    product_value = v[P.initial]
    semantic_value, _ = streett_mdp_max_prob(M, determinize_uca(A))
    return abs(product_value - semantic_value) <= tol, \
        (product_value, semantic_value)


def format_tree(tree) -> str:
    """Indented text rendering of a history tree, for debugging."""
    if not tree:
        return "(empty)"
    lines = []
    for name, label in tree:
        indent = "  " * len(name)
        tag = ".".join(map(str, name)) if name else "root"
        lines.append(f"{indent}{tag}: {{{', '.join(map(str, sorted(label)))}}}")
    return "\n".join(lines)
