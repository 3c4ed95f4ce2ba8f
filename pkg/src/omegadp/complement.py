"""Rank-based translation of a UCA into a strongly limit-deterministic,
good-for-MDPs Buchi automaton.

The output has two phases: a deterministic subset phase, nondeterministic
jumps into a ranking phase (a tight level ranking, an owing set ``O`` and an
even index ``i``), and a deterministic ranking update whose breakpoints (the
moments ``O`` empties) are the accepting transitions.  The empty subset is a
single canonical accepting sink.

Optimizations: entry rankings can be restricted to odd ranks, and for
collection automata the fresh initial state can be pinned as the unique
maximal rank.  Safety and reachability shaped inputs collapse to subset and
breakpoint constructions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .automata import Automaton, letter_sort_key


class CapacityError(RuntimeError):
    """State-count budget exceeded; carries the number of states built."""

    def __init__(self, message, states_built):
        super().__init__(message)
        self.states_built = states_built


class TimeoutError_(RuntimeError):
    pass


@dataclass
class ComplementOptions:
    odd_entry: bool = True
    pin_max_rank: int | str | None = "auto"  # state id, "auto", or None
    special: str = "auto"  # "auto", "off", "safety", "reachability"
    max_states: int = 50_000_000
    deadline: float | None = None  # time.monotonic() deadline


def _check_deadline(opts):
    if opts.deadline is not None and time.monotonic() > opts.deadline:
        raise TimeoutError_("complement construction exceeded its deadline")


class _Indexed:
    """Bitmask transition tables of the input UCA."""

    def __init__(self, A: Automaton):
        self.A = A
        self.letters = sorted(A.alphabet.letters(), key=letter_sort_key)
        self.n = A.n_states
        L = len(self.letters)
        self.succ = [[0] * L for _ in range(self.n)]
        self.rej = [[0] * L for _ in range(self.n)]
        index = {a: i for i, a in enumerate(self.letters)}
        for (q, a), targets in A.delta.items():
            li = index[a]
            mask = 0
            for t in targets:
                mask |= 1 << t
            self.succ[q][li] = mask
        for (q, a, t) in A.gamma:
            self.rej[q][index[a]] |= 1 << t

    def post(self, mask, li):
        out = 0
        succ = self.succ
        while mask:
            low = mask & -mask
            out |= succ[low.bit_length() - 1][li]
            mask ^= low
        return out


def _bits(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _tight_rankings(states, odd_only, pinned):
    """Enumerate tight level rankings over ``states`` (sorted ids) as tuples
    aligned with ``states``, in lexicographic (rank, values) order.

    ``odd_only`` restricts the range to odd ranks; ``pinned`` forces that
    state to carry the maximal rank.  Other states may share the maximum:
    demanding a unique carrier is too strong, because a run that keeps
    dying and re-entering through rejecting edges can only ever hold even
    ranks, so somebody else must be free to hold the low odd ranks that
    tightness requires, and with a short rank range that somebody is the
    pinned state's own rank.
    """
    m = len(states)
    if m == 0:
        yield ()
        return
    pin_pos = states.index(pinned) if (pinned is not None and pinned in states) else None
    for n in range(1, m + 1):
        top = 2 * n - 1
        odds = list(range(1, top + 1, 2))
        if pin_pos is not None:
            # pinned gets top; the rest must cover the odd ranks below it
            rest = [k for k in range(m) if k != pin_pos]
            lower_odds = odds[:-1]
            values = odds if odd_only else list(range(0, top + 1))
            must_cover = set(lower_odds)
            for assign in _onto_assignments(len(rest), values, must_cover):
                f = [0] * m
                f[pin_pos] = top
                for k, v in zip(rest, assign):
                    f[k] = v
                yield tuple(f)
        else:
            values = odds if odd_only else list(range(0, top + 1))
            must_cover = set(odds)
            for assign in _onto_assignments(m, values, must_cover):
                yield tuple(assign)


def _onto_assignments(m, values, must_cover):
    """All value tuples of length ``m`` over ``values`` covering ``must_cover``,
    in lexicographic order."""
    if m == 0:
        if not must_cover:
            yield ()
        return
    values = sorted(values)
    out = [None] * m

    def rec(pos, missing):
        if m - pos < len(missing):
            return
        if pos == m:
            if not missing:
                yield tuple(out)
            return
        for v in values:
            out[pos] = v
            if v in missing:
                missing.remove(v)
                yield from rec(pos + 1, missing)
                missing.add(v)
            else:
                yield from rec(pos + 1, missing)

    yield from rec(0, set(must_cover))


def _is_tight(members):
    """members: list of (state, rank). Tight iff max rank odd and every odd
    value below it is attained."""
    top = -1
    odds_seen = set()
    for _, r in members:
        if r > top:
            top = r
        if r & 1:
            odds_seen.add(r)
    if top < 0 or not (top & 1):
        return False
    return len(odds_seen) == (top + 1) // 2


def _resolve_pin(A: Automaton, opts: ComplementOptions):
    pin = opts.pin_max_rank
    if pin == "auto":
        pin = A.tags.get("collection_initial")
    if pin is None:
        return None
    for (q, a, t) in A.transitions():
        if t == pin and q != pin:
            raise ValueError(
                f"cannot pin state {pin}: it has incoming transitions")
    return pin


def detect_shape(A: Automaton):
    """Detect the safety / reachability special shapes, if any."""
    if A.is_schema:
        return None
    init = A.initial
    # reachability: every transition rejecting, except non-rejecting
    # self-loops on the initial state (which must have no other predecessors)
    reach_ok = True
    for (q, a, t) in A.transitions():
        if q == init and t == init:
            if (q, a, t) in A.gamma:
                reach_ok = False
                break
        elif (q, a, t) not in A.gamma:
            reach_ok = False
            break
        elif t == init:
            reach_ok = False
            break
    if reach_ok and A.gamma:
        return "reachability"
    # safety: one rejecting sink with complete rejecting self-loops; all other
    # transitions non-rejecting
    sinks = {q for (q, a, t) in A.gamma}
    if len(sinks) == 1:
        (z,) = sinks
        letters = A.alphabet.letters()
        ok = all(A.successors(z, a) == (z,) and (z, a, z) in A.gamma for a in letters)
        ok = ok and all(q == z for (q, a, t) in A.gamma)
        if ok:
            return "safety"
    return None


def complement_uca(A: Automaton, opts: ComplementOptions | None = None) -> Automaton:
    """Language-equivalent good-for-MDPs NBA for a UCA."""
    if A.kind != "UCA":
        raise ValueError("complement_uca requires a UCA")
    if A.is_schema:
        raise ValueError("instantiate the schema first")
    opts = opts or ComplementOptions()
    if opts.special != "off":
        shape = opts.special if opts.special in ("safety", "reachability") else detect_shape(A)
        if opts.special in ("safety", "reachability") and detect_shape(A) != opts.special:
            raise ValueError(f"input does not match the {opts.special} shape")
        if shape is not None:
            return complement_special(A, shape, opts)
    return _complement_general(A, opts)


def _complement_general(A: Automaton, opts: ComplementOptions) -> Automaton:
    t0 = time.monotonic()
    idx = _Indexed(A)
    letters = idx.letters
    L = len(letters)
    pinned = _resolve_pin(A, opts)

    ids = {}
    kinds = []  # per state id: 1 = subset, 2 = ranking, 0 = empty sink
    payloads = []

    def intern(kind, payload):
        key = (kind, payload)
        sid = ids.get(key)
        if sid is None:
            sid = len(kinds)
            if sid >= opts.max_states:
                raise CapacityError(
                    f"state budget of {opts.max_states} exceeded", sid)
            ids[key] = sid
            kinds.append(kind)
            payloads.append(payload)
            worklist.append(sid)
        return sid

    worklist = []
    delta = {}
    gamma = set()
    blocked = 0

    empty_id = None

    def get_empty():
        nonlocal empty_id
        if empty_id is None:
            empty_id = intern(0, ())
        return empty_id

    start = intern(1, 1 << A.initial)
    wi = 0
    while wi < len(worklist):
        sid = worklist[wi]
        wi += 1
        _check_deadline(opts)
        kind = kinds[sid]
        payload = payloads[sid]
        if kind == 0:
            for li, a in enumerate(letters):
                delta[(sid, a)] = (sid,)
                gamma.add((sid, a, sid))
            continue
        if kind == 1:
            S = payload
            for li, a in enumerate(letters):
                S2 = idx.post(S, li)
                targets = []
                if S2 == 0:
                    targets.append(get_empty())
                else:
                    targets.append(intern(1, S2))
                    states2 = _bits(S2)
                    for f in _tight_rankings(states2, opts.odd_entry, pinned):
                        targets.append(intern(2, (S2, 0, f, 0)))
                delta[(sid, a)] = tuple(sorted(set(targets)))
            continue
        # kind == 2: ranking state (S_mask, O_mask, f_tuple, i)
        S, O, f, i = payload
        states = _bits(S)
        rank_of = dict(zip(states, f))
        for li, a in enumerate(letters):
            # auxiliary g: minimum over source-rank contributions
            minrank = {}
            for q, j in rank_of.items():
                m = idx.succ[q][li]
                for t in _bits(m):
                    if j < minrank.get(t, 1 << 30):
                        minrank[t] = j
                rm = idx.rej[q][li]
                ev = j - (j & 1)
                for t in _bits(rm):
                    if ev < minrank.get(t, 1 << 30):
                        minrank[t] = ev
            if not minrank:
                # all runs died; the empty subset is the accepting sink
                tid = get_empty()
                delta[(sid, a)] = (tid,)
                gamma.add((sid, a, tid))
                continue
            members = sorted(minrank.items())
            if not _is_tight(members):
                blocked += 1
                continue
            if pinned is not None:
                # the pinned state never dies and nothing feeds into it, so
                # its rank stays put while everyone else only decreases; a
                # run where it stops carrying the maximum cannot have been
                # pinned at entry and is dropped
                top = max(r for _, r in members)
                if minrank.get(pinned) != top:
                    blocked += 1
                    continue
            S2 = 0
            for q, _ in members:
                S2 |= 1 << q
            f2 = tuple(r for _, r in members)
            Opost = idx.post(O, li)
            O2 = 0
            for q, r in members:
                if r == i and (Opost >> q) & 1:
                    O2 |= 1 << q
            if O2:
                tid = intern(2, (S2, O2, f2, i))
                delta[(sid, a)] = (tid,)
            else:
                top = max(r for _, r in members)
                i2 = (i + 2) % (top + 1)
                O3 = 0
                for q, r in members:
                    if r == i2:
                        O3 |= 1 << q
                tid = intern(2, (S2, O3, f2, i2))
                delta[(sid, a)] = (tid,)
                gamma.add((sid, a, tid))

    n = len(kinds)
    q1 = {sid for sid in range(n) if kinds[sid] == 1}
    q2 = {sid for sid in range(n) if kinds[sid] != 1}
    stats = {
        "states": n,
        "transitions": sum(len(v) for v in delta.values()),
        "accepting_transitions": len(gamma),
        "blocked_transitions": blocked,
        "wall_time_ms": int((time.monotonic() - t0) * 1000),
    }
    return Automaton("NBA", A.alphabet, n, start, delta, gamma,
                     tags={"parts": (q1, q2), "stats": stats,
                           "construction": "rank"},
                     check=False)


def complement_special(A: Automaton, shape: str, opts: ComplementOptions | None = None) -> Automaton:
    """Subset (safety) / breakpoint (reachability) special constructions."""
    opts = opts or ComplementOptions()
    actual = detect_shape(A)
    if actual != shape:
        raise ValueError(f"input does not match the {shape} shape (detected {actual})")
    t0 = time.monotonic()
    idx = _Indexed(A)
    letters = idx.letters
    init = A.initial

    ids = {}
    kinds = []
    payloads = []
    worklist = []

    def intern(kind, payload):
        key = (kind, payload)
        sid = ids.get(key)
        if sid is None:
            sid = len(kinds)
            if sid >= opts.max_states:
                raise CapacityError(f"state budget of {opts.max_states} exceeded", sid)
            ids[key] = sid
            kinds.append(kind)
            payloads.append(payload)
            worklist.append(sid)
        return sid

    delta = {}
    gamma = set()
    empty_id = None

    def get_empty():
        nonlocal empty_id
        if empty_id is None:
            empty_id = intern(0, ())
        return empty_id

    if shape == "safety":
        (z,) = {q for (q, a, t) in A.gamma}
        zbit = 1 << z
        start = intern(1, 1 << init)
        wi = 0
        while wi < len(worklist):
            sid = worklist[wi]
            wi += 1
            kind, payload = kinds[sid], payloads[sid]
            if kind == 0:
                for a in letters:
                    delta[(sid, a)] = (sid,)
                    gamma.add((sid, a, sid))
                continue
            S = payload
            for li, a in enumerate(letters):
                S2 = idx.post(S, li)
                targets = []
                if S2 == 0:
                    targets.append(get_empty())
                else:
                    if kind == 1:
                        targets.append(intern(1, S2))
                    if not (S2 & zbit):
                        targets.append(intern(2, S2))
                if kind == 2 and not targets:
                    continue  # the run through the sink blocks phase 2
                if targets:
                    delta[(sid, a)] = tuple(sorted(set(targets)))
                    if kind == 2:
                        for t in targets:
                            gamma.add((sid, a, t))
    else:  # reachability
        has_exempt = any((init, a, init) not in A.gamma and init in A.successors(init, a)
                         for a in A.alphabet.letters())
        ebit = (1 << init) if has_exempt else 0
        start = intern(1, 1 << init)
        wi = 0
        while wi < len(worklist):
            sid = worklist[wi]
            wi += 1
            kind, payload = kinds[sid], payloads[sid]
            if kind == 0:
                for a in letters:
                    delta[(sid, a)] = (sid,)
                    gamma.add((sid, a, sid))
                continue
            if kind == 1:
                S = payload
                for li, a in enumerate(letters):
                    S2 = idx.post(S, li)
                    targets = []
                    if S2 == 0:
                        targets.append(get_empty())
                    else:
                        targets.append(intern(1, S2))
                        if ebit and (S2 & ebit):
                            # entry ranking: exempt state rank 1, others 0;
                            # the first breakpoint fires immediately (O = empty)
                            targets.append(intern(2, (S2, S2 & ~ebit)))
                    delta[(sid, a)] = tuple(sorted(set(targets)))
                continue
            S, O = payload
            for li, a in enumerate(letters):
                S2 = idx.post(S, li)
                if S2 == 0:
                    tid = get_empty()
                    delta[(sid, a)] = (tid,)
                    gamma.add((sid, a, tid))
                    continue
                if not (ebit and (S2 & ebit)):
                    continue  # ranking no longer tight: blocked
                O2 = idx.post(O, li) & S2 & ~ebit
                if O2:
                    delta[(sid, a)] = (intern(2, (S2, O2)),)
                else:
                    tid = intern(2, (S2, S2 & ~ebit))
                    delta[(sid, a)] = (tid,)
                    gamma.add((sid, a, tid))

    n = len(kinds)
    q1 = {sid for sid in range(n) if kinds[sid] == 1}
    q2 = {sid for sid in range(n) if kinds[sid] != 1}
    stats = {
        "states": n,
        "transitions": sum(len(v) for v in delta.values()),
        "accepting_transitions": len(gamma),
        "blocked_transitions": 0,
        "wall_time_ms": int((time.monotonic() - t0) * 1000),
    }
    return Automaton("NBA", A.alphabet, n, start, delta, gamma,
                     tags={"parts": (q1, q2), "stats": stats,
                           "construction": f"special-{shape}"},
                     check=False)
