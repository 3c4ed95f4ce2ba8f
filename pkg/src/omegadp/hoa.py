"""Hanoi Omega-Automata (HOA v1) parsing and emission.

Only Buchi and co-Buchi acceptance are supported on the wire, with either
transition-based or state-based marks (state-based input is converted by
marking all outgoing transitions of accepting states).  Edge labels are
boolean expressions over AP indices (``!``, ``&``, ``|``, ``t``, ``f``,
parentheses) and are expanded to explicit letters at parse time.

Promise alphabets are encoded with auxiliary atomic propositions named
``_prm0``, ``_prm1``, ... holding the index of the promise in the declared
vocabulary in binary (least significant bit first), plus a ``promise-vocab:``
header that records the vocabulary so the round trip is exact.
"""

from __future__ import annotations

import json
import math

from .automata import TOP, Alphabet, Automaton, canonical_order, letter_sort_key, renumber

MAX_AP = 16


class HoaError(ValueError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_ws(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance(1)
            elif self.text.startswith("/*", self.pos):
                end = self.text.find("*/", self.pos + 2)
                if end < 0:
                    raise HoaError("unterminated comment", self.line, self.col)
                self._advance(end + 2 - self.pos)
            else:
                return

    def peek(self):
        self._skip_ws()
        if self.pos >= len(self.text):
            return None
        c = self.text[self.pos]
        if c == '"':
            end = self.pos + 1
            while end < len(self.text) and self.text[end] != '"':
                end += 1
            if end >= len(self.text):
                raise HoaError("unterminated string", self.line, self.col)
            return self.text[self.pos:end + 1]
        if c in "[]{}()!&|":
            return c
        end = self.pos
        while end < len(self.text) and self.text[end] not in " \t\r\n[]{}()!&|\"":
            end += 1
        return self.text[self.pos:end]

    def next(self):
        tok = self.peek()
        if tok is None:
            raise HoaError("unexpected end of input", self.line, self.col)
        self._advance(len(tok))
        return tok

    def expect(self, tok):
        got = self.next()
        if got != tok:
            raise HoaError(f"expected {tok!r}, got {got!r}", self.line, self.col)

    def rest_of_line(self):
        """Raw text up to the next newline (for headers holding JSON)."""
        end = self.text.find("\n", self.pos)
        if end < 0:
            end = len(self.text)
        out = self.text[self.pos:end].strip()
        self._advance(end - self.pos)
        return out


def _parse_label_expr(tz, n_ap):
    """Recursive-descent parse of a label expression into a set of letters."""

    all_letters = frozenset(range(1 << n_ap))

    def atom():
        tok = tz.next()
        if tok == "(":
            v = disj()
            tz.expect(")")
            return v
        if tok == "!":
            return all_letters - atom()
        if tok == "t":
            return all_letters
        if tok == "f":
            return frozenset()
        try:
            idx = int(tok)
        except ValueError:
            raise HoaError(f"bad label token {tok!r}", tz.line, tz.col)
        if not (0 <= idx < n_ap):
            raise HoaError(f"AP index {idx} not declared", tz.line, tz.col)
        return frozenset(b for b in all_letters if b & (1 << idx))

    def conj():
        v = atom()
        while tz.peek() == "&":
            tz.next()
            v = v & atom()
        return v

    def disj():
        v = conj()
        while tz.peek() == "|":
            tz.next()
            v = v | conj()
        return v

    return disj()


def _decode_promise_aps(ap_names, vocab_json):
    """Split AP names into base APs and promise index bits."""
    # _prm bits are the trailing APs, emitted as _prm0.._prmK in order
    n_bits = 0
    for name in reversed(ap_names):
        if name.startswith("_prm") and name[4:].isdigit():
            n_bits += 1
        else:
            break
    base = ap_names[:len(ap_names) - n_bits]
    vocab = _vocab_from_json(json.loads(vocab_json))
    need = max(1, math.ceil(math.log2(max(len(vocab), 2))))
    if n_bits < need:
        raise HoaError("promise-vocab header does not match _prm* AP count")
    return tuple(base), vocab, n_bits


def _vocab_to_json(promises):
    out = []
    for p in promises:
        if p is TOP:
            out.append({"top": True})
        elif isinstance(p, int):
            out.append({"state": p})
        else:
            out.append({"states": sorted(p)})
    return json.dumps(out)


def _vocab_from_json(items):
    vocab = []
    for item in items:
        if item.get("top"):
            vocab.append(TOP)
        elif "state" in item:
            vocab.append(item["state"])
        else:
            vocab.append(frozenset(item["states"]))
    return tuple(vocab)


def parse_hoa(text: str) -> Automaton:
    tz = _Tokenizer(text)
    n_states = None
    start = None
    ap_names = None
    acceptance = None
    acc_name = None
    vocab_json = None
    tok = tz.next()
    if tok != "HOA:":
        raise HoaError("missing HOA: header", tz.line, tz.col)
    version = tz.next()
    if version != "v1":
        raise HoaError(f"unsupported HOA version {version!r}", tz.line, tz.col)
    while True:
        tok = tz.peek()
        if tok is None:
            raise HoaError("missing --BODY--", tz.line, tz.col)
        if tok == "--BODY--":
            tz.next()
            break
        tok = tz.next()
        if tok == "States:":
            n_states = int(tz.next())
        elif tok == "Start:":
            start = int(tz.next())
        elif tok == "AP:":
            n_ap = int(tz.next())
            ap_names = []
            for _ in range(n_ap):
                name = tz.next()
                if not (name.startswith('"') and name.endswith('"')):
                    raise HoaError("AP names must be quoted", tz.line, tz.col)
                ap_names.append(name[1:-1])
        elif tok == "Acceptance:":
            n_sets = int(tz.next())
            parts = []
            depth = 0
            # consume until the next header token at depth 0
            while True:
                nxt = tz.peek()
                if nxt is None:
                    break
                if depth == 0 and (nxt.endswith(":") or nxt == "--BODY--"):
                    break
                nxt = tz.next()
                depth += nxt.count("(") - nxt.count(")")
                if nxt == "(":
                    depth += 1
                if nxt == ")":
                    depth -= 1
                parts.append(nxt)
            acceptance = (n_sets, "".join(parts))
        elif tok == "acc-name:":
            acc_name = tz.next()
        elif tok == "promise-vocab:":
            vocab_json = tz.rest_of_line()
        elif tok.endswith(":"):
            # tool:, name:, properties:, and other ignorable headers; consume
            # values until the next header-ish token
            while True:
                nxt = tz.peek()
                if nxt is None or nxt == "--BODY--" or nxt.endswith(":"):
                    break
                tz.next()
        else:
            raise HoaError(f"unexpected header token {tok!r}", tz.line, tz.col)
    if ap_names is None:
        ap_names = []
    if len(ap_names) > MAX_AP:
        raise HoaError(f"{len(ap_names)} atomic propositions exceed the cap of {MAX_AP}")
    if acceptance is None:
        raise HoaError("missing Acceptance: header")
    n_sets, formula = acceptance
    formula = formula.replace(" ", "")
    if n_sets == 1 and formula == "Inf(0)":
        kind = "NBA"
    elif n_sets == 1 and formula == "Fin(0)":
        kind = "UCA"
    elif n_sets == 0 and formula in ("t",):
        kind = "NBA_ALL"  # every run accepting
    else:
        raise HoaError(f"unsupported acceptance condition {formula!r} with {n_sets} sets")
    if acc_name == "co-Buchi" and kind == "NBA":
        raise HoaError("acc-name co-Buchi conflicts with Inf acceptance")

    promises = None
    n_prm_bits = 0
    if vocab_json is not None:
        ap_names, promises, n_prm_bits = _decode_promise_aps(ap_names, vocab_json)
    alphabet = Alphabet(tuple(ap_names), promises)
    n_base_ap = len(alphabet.ap)
    n_all_ap = n_base_ap + n_prm_bits

    delta = {}
    gamma = set()
    seen_states = set()
    current = None
    state_acc = {}

    def add_edge(src, letters, target, marked):
        for a in letters:
            key = (src, a)
            cur = delta.get(key, ())
            if target not in cur:
                delta[key] = cur + (target,)
            if marked:
                gamma.add((src, a, target))

    def decode_letters(raw_letters):
        """Map raw bit patterns over all APs to alphabet letters."""
        if promises is None:
            return list(raw_letters)
        out = []
        base_mask = (1 << n_base_ap) - 1
        for raw in raw_letters:
            base = raw & base_mask
            idx = raw >> n_base_ap
            if idx >= len(promises):
                continue  # bit patterns beyond the vocabulary are unused
            out.append((base, promises[idx]))
        return out

    while True:
        tok = tz.peek()
        if tok is None or tok == "--END--":
            if tok == "--END--":
                tz.next()
            break
        tok = tz.next()
        if tok == "State:":
            label = None
            if tz.peek() == "[":
                tz.next()
                label = _parse_label_expr(tz, n_all_ap)
                tz.expect("]")
            current = int(tz.next())
            seen_states.add(current)
            if tz.peek() is not None and tz.peek().startswith('"'):
                tz.next()
            accs = set()
            if tz.peek() == "{":
                tz.next()
                while tz.peek() != "}":
                    accs.add(int(tz.next()))
                tz.expect("}")
            state_acc[current] = bool(accs)
            if label is not None:
                raise HoaError("state labels are not supported", tz.line, tz.col)
        elif tok == "[":
            if current is None:
                raise HoaError("edge before any State:", tz.line, tz.col)
            letters = _parse_label_expr(tz, n_all_ap)
            tz.expect("]")
            target = int(tz.next())
            accs = set()
            if tz.peek() == "{":
                tz.next()
                while tz.peek() != "}":
                    accs.add(int(tz.next()))
                tz.expect("}")
            marked = bool(accs) or state_acc.get(current, False)
            add_edge(current, decode_letters(letters), target, marked)
        else:
            raise HoaError(f"unexpected body token {tok!r}", tz.line, tz.col)

    if n_states is None:
        n_states = (max(seen_states) + 1) if seen_states else 1
    elif seen_states and max(seen_states) >= n_states:
        raise HoaError("state id exceeds declared States: count")
    if start is None:
        start = 0
    if kind == "NBA_ALL":
        kind = "NBA"
        gamma = set((q, a, t) for (q, a), ts in delta.items() for t in ts)
    return Automaton(kind, alphabet, n_states, start, delta, gamma)


def _letter_bits(alphabet: Alphabet, letter):
    """Raw bit pattern of a letter over base plus promise-index APs."""
    if alphabet.promises is None:
        return letter, len(alphabet.ap)
    base, promise = letter
    vocab = sorted(alphabet.promises, key=lambda p: letter_sort_key((0, p))[1:])
    idx = vocab.index(promise)
    n_bits = max(1, math.ceil(math.log2(max(len(vocab), 2))))
    return base | (idx << len(alphabet.ap)), len(alphabet.ap) + n_bits


def _expr_for_bits(bits, n_ap):
    if n_ap == 0:
        return "t"
    parts = []
    for i in range(n_ap):
        parts.append(str(i) if bits & (1 << i) else f"!{i}")
    return "&".join(parts)


def emit_hoa(A: Automaton, name=None) -> str:
    """Canonical HOA v1 text: BFS state order, edges sorted by (letter, target)."""
    if A.kind not in ("NBA", "UCA"):
        raise ValueError(f"cannot emit automata of kind {A.kind}")
    if A.is_schema:
        raise ValueError("cannot emit a schema (no initial state)")
    A = renumber(A, canonical_order(A))
    alphabet = A.alphabet
    if alphabet.promises is None:
        ap_list = list(alphabet.ap)
        n_all = len(ap_list)
    else:
        vocab = sorted(alphabet.promises, key=lambda p: letter_sort_key((0, p))[1:])
        n_bits = max(1, math.ceil(math.log2(max(len(vocab), 2))))
        ap_list = list(alphabet.ap) + [f"_prm{i}" for i in range(n_bits)]
        n_all = len(ap_list)
    lines = ["HOA: v1"]
    if name:
        lines.append(f'name: "{name}"')
    lines.append(f"States: {A.n_states}")
    lines.append(f"Start: {A.initial}")
    lines.append("AP: {} {}".format(len(ap_list), " ".join(f'"{p}"' for p in ap_list)))
    if A.kind == "NBA":
        lines.append("acc-name: Buchi")
        lines.append("Acceptance: 1 Inf(0)")
    else:
        lines.append("acc-name: co-Buchi")
        lines.append("Acceptance: 1 Fin(0)")
    if alphabet.promises is not None:
        lines.append(f"promise-vocab: {_vocab_to_json(tuple(vocab))}")
    lines.append("--BODY--")
    for q in range(A.n_states):
        lines.append(f"State: {q}")
        edges = []
        for a in sorted(alphabet.letters(), key=letter_sort_key):
            bits, _ = _letter_bits(alphabet, a)
            for t in A.successors(q, a):
                marked = (q, a, t) in A.gamma
                edges.append((bits, t, marked))
        for bits, t, marked in sorted(edges):
            suffix = " {0}" if marked else ""
            lines.append(f"[{_expr_for_bits(bits, n_all)}] {t}{suffix}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"
