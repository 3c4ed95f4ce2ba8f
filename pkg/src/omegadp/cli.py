"""Command-line front end for the toolkit.

Subcommands cover the whole pipeline: ``complement`` turns a universal
co-Buchi automaton into a good-for-MDPs Buchi automaton, ``reduce`` and
``stats`` batch the reduction pipeline over a directory of HOA files into a
CSV of per-stage state counts, ``solve`` computes the optimal discounted
value of a decision process with guards and promises, ``learn`` trains the
tabular lexicographic Q-learner on the lab grid world, ``check`` compares
automata by bounded lasso equivalence or by value agreement on random
processes, and ``determinize`` dumps the Streett determinization of a UCA
for debugging.

Reports go to stdout (or the requested output files); failures are reported
as a single JSON object on stderr and a nonzero exit code.  A failed
``check`` verdict also exits nonzero so the command is usable in scripts.
Runs are deterministic for a fixed --seed.  Timeouts are cooperative: the
deadline is checked at state-expansion boundaries inside the library, so a
stage may overshoot by the cost of one expansion.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass, field

from .automata import Automaton, letter_sort_key
from .complement import ComplementOptions, complement_uca
from .hoa import emit_hoa, parse_hoa
from .lasso_bulk import bounded_lassos, mismatches, nba_signature, uca_signature
from .mdp import (
    Mdp,
    NoValidStrategy,
    accepting_mecs,
    max_reach_prob,
    product_with_nba,
    strategy_to_json,
    strategy_value_check,
)
from .odp import odp_from_json, remove_lookahead, remove_lookback, solve_odp
from .qlearn import lex_q_learn, policy_arrows, render_policy
from .reduction import run_pipeline
from .streett import determinize_uca, streett_mdp_max_prob

VALUE_TOL = 1e-7


@dataclass
class CliConfig:
    """One parsed invocation: the subcommand plus its options."""

    subcommand: str
    timeout: float = 600.0
    seed: int = 0
    options: dict = field(default_factory=dict)


def _read_automaton(path):
    with open(path) as fh:
        return parse_hoa(fh.read())


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _as_uca(A, allow_reinterpret):
    if A.kind == "UCA":
        return A
    if allow_reinterpret:
        return A.reinterpret("UCA")
    raise ValueError(
        f"input is a {A.kind}; pass --as-uca to read its structure as a UCA")


def cmd_complement(cfg: CliConfig):
    o = cfg.options
    A = _as_uca(_read_automaton(o["input"]), o["as_uca"])
    opts = ComplementOptions(
        odd_entry=not o["plain_entry"],
        pin_max_rank=None if o["no_pin"] else "auto",
        special=o["special"],
        max_states=o["max_states"],
        deadline=time.monotonic() + cfg.timeout)
    C = complement_uca(A, opts)
    _write_text(o["output"], emit_hoa(C))
    stats = dict(C.tags.get("stats", {}))
    stats["input_states"] = A.n_states
    _write_text(o["stats"], json.dumps(stats, indent=2))
    return 0


def _pipeline_worker(job):
    """Reduce one HOA file; returns (name, csv row, reduced HOA, error)."""
    path, budget = job
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        A = _read_automaton(path)
        result, stats = run_pipeline(A, budget)
        text = emit_hoa(result) if result is not None else None
        return name, stats.row(name), text, None
    except Exception as exc:
        return name, None, None, f"{type(exc).__name__}: {exc}"


def _summary_rows(rows):
    """Mean, stdev, and max rows over the numeric cells of a stats table."""
    out = []
    for label, agg in (("mean", statistics.fmean),
                       ("stdev", lambda v: statistics.stdev(v)
                        if len(v) > 1 else 0.0),
                       ("max", max)):
        row = [label]
        for col in range(1, 8):
            vals = [float(r[col]) for r in rows
                    if isinstance(r[col], (int, float))
                    or str(r[col]).replace(".", "", 1).isdigit()]
            row.append(f"{agg(vals):.3f}" if vals else "")
        out.append(row)
    return out


def _run_batch(cfg: CliConfig, out_dir):
    o = cfg.options
    paths = sorted(
        os.path.join(o["input"], f) for f in os.listdir(o["input"])
        if f.endswith(".hoa"))
    jobs = [(p, cfg.timeout) for p in paths]
    workers = o["workers"] or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        from multiprocessing import Pool
        with Pool(workers) as pool:
            results = pool.map(_pipeline_worker, jobs)
    else:
        results = [_pipeline_worker(j) for j in jobs]
    rows, errors = [], []
    for name, row, text, err in results:
        if err is not None:
            rows.append([name, "", "", "", "", "", "", f"error: {err}"])
            errors.append({"file": name, "message": err})
            continue
        rows.append(row)
        if out_dir is not None and text is not None:
            with open(os.path.join(out_dir, f"{name}.hoa"), "w") as fh:
                fh.write(text)
    good = [r for r in rows if not str(r[7]).startswith("error")]
    with open(o["output"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "orig", "compl", "prune", "lumpd", "lang",
                         "lumpa", "time"])
        writer.writerows(rows)
        if good:
            writer.writerows(_summary_rows(good))
    if errors:
        print(json.dumps({"error": "BatchErrors", "files": errors}),
              file=sys.stderr)
        return 1
    return 0


def cmd_reduce(cfg: CliConfig):
    out_dir = cfg.options["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    return _run_batch(cfg, out_dir)


def cmd_stats(cfg: CliConfig):
    return _run_batch(cfg, None)


def cmd_solve(cfg: CliConfig):
    o = cfg.options
    with open(o["input"]) as fh:
        D = odp_from_json(fh.read())
    value, sigma = solve_odp(D, o["lam"], o["eps"])
    doc = {
        "value": value,
        "lam": o["lam"],
        "eps": o["eps"],
        "strategy": json.loads(strategy_to_json(sigma.inner)),
        "odp_state_of": list(sigma.odp_state_of),
    }
    _write_text(o["output"], json.dumps(doc, indent=2))
    return 0


def cmd_learn(cfg: CliConfig):
    from .biolab import BiolabGrid, build_biolab, default_grid

    o = cfg.options
    config = {}
    if o["config"] is not None:
        with open(o["config"]) as fh:
            config = json.load(fh)
    grid_keys = ("rho", "f1", "f2", "xi", "p_slip", "p_zap")
    train_keys = ("episodes", "steps", "lam", "zeta", "tau_lex", "eps",
                  "explore", "alpha_power", "alpha_floor", "optimism")
    unknown = set(config) - set(grid_keys) - set(train_keys)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if o["map"] is not None:
        with open(o["map"]) as fh:
            grid = BiolabGrid.parse(fh.read())
    else:
        grid = default_grid()
    D = build_biolab(grid=grid,
                     **{k: config[k] for k in grid_keys if k in config})
    train = {k: config[k] for k in train_keys if k in config}
    train.setdefault("episodes", 80_000)
    lam = train.get("lam", 0.99)
    compiled = remove_lookback(D)
    M, N = remove_lookahead(compiled)
    P = product_with_nba(M, N)
    _, strategy = lex_q_learn(P, seed=cfg.seed, **train)
    _write_text(o["output"], strategy_to_json(strategy))
    sat, disc = strategy_value_check(P, strategy, lam)
    print(json.dumps({"sat_prob": sat, "disc_value": disc,
                      "product_states": P.n_states,
                      "episodes": train["episodes"]}, indent=2))
    if not o["no_render"]:
        def cell_of(x):
            key = D.keys[compiled.pairs[M.pairs[P.pairs[x][0]][0]][0]]
            return None if key == "wreck" else key[0]
        choices = {s: a for (s, _), a in strategy.second.choices.items()}
        print(render_policy(grid, policy_arrows(P, choices, cell_of)))
    return 0


def _signature(A, bound):
    if A.kind == "UCA":
        return uca_signature(A, bound)
    return nba_signature(A.reinterpret("NBA"), bound)


def _buchi_value(P):
    values, _ = max_reach_prob(P, accepting_mecs(P))
    return values[P.initial]


def _random_mdp(rng, n, alphabet, n_actions=2):
    """Small random labeled MDP; one action per state when n_actions is 1."""
    letters = alphabet.letters()
    actions, trans, labels = {}, {}, []
    for s in range(n):
        labels.append(letters[rng.randrange(len(letters))])
        names = tuple(f"a{k}" for k in range(rng.randint(1, n_actions)))
        actions[s] = names
        for a in names:
            support = rng.sample(range(n), rng.randint(1, min(2, n)))
            trans[(s, a)] = tuple((t, 1.0 / len(support)) for t in support)
    return Mdp(n, 0, actions, trans, alphabet=alphabet, labels=labels)


def _check_against(cfg: CliConfig):
    o = cfg.options
    A = _read_automaton(o["input"])
    B = _read_automaton(o["against"])
    if A.alphabet.letters() != B.alphabet.letters():
        raise ValueError("the two automata have different alphabets")
    bound = o["bound"]
    sig_a, sig_b = _signature(A, bound), _signature(B, bound)
    bad = mismatches(sig_a, sig_b, A.alphabet.letters(), bound)
    report = {
        "mode": "lasso-equivalence",
        "bound": bound,
        "words_checked": len(sig_a),
        "mismatch_count": int((sig_a != sig_b).sum()),
        "mismatches": [{"prefix": list(w.prefix), "cycle": list(w.cycle)}
                       for w in bad],
        "verdict": "pass" if not bad else "fail",
    }
    print(json.dumps(report, indent=2))
    return 0 if not bad else 1


def _uniform_chain(alphabet):
    """One state per letter, labeled by it, uniformly random successor.

    The next label carries no information, so an automaton that needs to
    guess it cannot do better than chance on this chain.
    """
    letters = alphabet.letters()
    n = len(letters)
    actions = {s: ("a0",) for s in range(n)}
    trans = {(s, "a0"): tuple((t, 1.0 / n) for t in range(n))
             for s in range(n)}
    return Mdp(n, 0, actions, trans, alphabet=alphabet, labels=list(letters))


def _check_gfm(cfg: CliConfig):
    """Value-agreement check of a good-for-MDPs candidate.

    For a UCA input, its rank-based complement is the candidate and the
    Streett determinization of the input is the reference, compared on
    random MDPs.  For an NBA input the automaton itself is the candidate;
    the reference value on a random Markov chain is one minus the chain's
    probability of the structure's UCA language (the exact complement), so
    the check needs no Buchi determinization.  The first sample is always
    the uniformly random chain over the alphabet, whose unpredictable
    labels defeat any automaton that resolves nondeterminism by lookahead.
    """
    import random

    o = cfg.options
    A = _read_automaton(o["input"])
    rng = random.Random(cfg.seed)
    if A.kind == "UCA":
        candidate = complement_uca(A)
        dsa = determinize_uca(A)
        chain_only = False
    else:
        candidate = A.reinterpret("NBA")
        dsa = determinize_uca(A.reinterpret("UCA"))
        chain_only = True
    samples, failures = [], 0
    for i in range(o["mdps"]):
        if i == 0:
            M = _uniform_chain(A.alphabet)
        else:
            M = _random_mdp(rng, rng.randint(2, 6), A.alphabet,
                            n_actions=1 if chain_only else 2)
        got = _buchi_value(product_with_nba(M, candidate))
        ref, _ = streett_mdp_max_prob(M, dsa)
        if chain_only:
            ref = 1.0 - ref
        ok = abs(got - ref) <= VALUE_TOL
        failures += not ok
        samples.append({"product_value": got, "reference_value": ref,
                        "agree": ok})
    report = {
        "mode": "gfm-value-agreement",
        "mdps": o["mdps"],
        "failures": failures,
        "samples": samples,
        "verdict": "pass" if failures == 0 else "fail",
    }
    print(json.dumps(report, indent=2))
    return 0 if failures == 0 else 1


def cmd_check(cfg: CliConfig):
    if cfg.options["against"] is not None:
        return _check_against(cfg)
    if cfg.options["gfm"]:
        return _check_gfm(cfg)
    raise ValueError("pass either --against FILE or --gfm")


def cmd_determinize(cfg: CliConfig):
    o = cfg.options
    A = _as_uca(_read_automaton(o["input"]), o["as_uca"])
    D = determinize_uca(A, max_states=o["max_states"])
    letters = sorted(A.alphabet.letters(), key=letter_sort_key)
    doc = {
        "states": D.n_states,
        "initial": D.initial,
        "letters": [repr(a) for a in letters],
        "delta": [[s, repr(a), D.delta[(s, a)]]
                  for s in range(D.n_states) for a in letters],
        "pairs": {str(name): {
            "collapse": sorted([s, repr(a)] for s, a in coll),
            "unstick": sorted([s, repr(a)] for s, a in unst)}
            for name, (coll, unst) in sorted(D.pairs.items(),
                                             key=lambda kv: str(kv[0]))},
    }
    _write_text(o["output"], json.dumps(doc, indent=2))
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="omegadp",
        description="Promise collection, GFM complementation, and "
                    "lexicographic MDP solving.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--timeout", type=float, default=600.0,
                        help="cooperative time budget in seconds")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for all randomized steps")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("complement", parents=[common],
                       help="UCA to good-for-MDPs NBA")
    p.add_argument("input", help="HOA file holding a UCA")
    p.add_argument("-o", "--output", default=None, help="output HOA path")
    p.add_argument("--stats", default=None, help="stats JSON path")
    p.add_argument("--as-uca", action="store_true",
                   help="read an NBA file structurally as a UCA")
    p.add_argument("--plain-entry", action="store_true",
                   help="disable the odd-rank entry restriction")
    p.add_argument("--no-pin", action="store_true",
                   help="disable max-rank pinning")
    p.add_argument("--special", default="auto",
                   choices=("auto", "off", "safety", "reachability"),
                   help="shape special-casing mode")
    p.add_argument("--max-states", type=int, default=50_000_000)
    p.set_defaults(func=cmd_complement)

    for name, help_ in (("reduce", "batch reduce a directory of HOA files"),
                        ("stats", "batch stage statistics without outputs")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("input", help="directory of .hoa files")
        p.add_argument("-o", "--output", required=True, help="CSV path")
        p.add_argument("--workers", type=int, default=None,
                       help="worker pool size (default: all cores)")
        if name == "reduce":
            p.add_argument("--out-dir", required=True,
                           help="directory for the reduced automata")
            p.set_defaults(func=cmd_reduce)
        else:
            p.set_defaults(func=cmd_stats)

    p = sub.add_parser("solve", parents=[common],
                       help="solve a decision process JSON file")
    p.add_argument("input", help="process JSON path")
    p.add_argument("--lam", type=float, required=True,
                   help="reward discount factor")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="strategy suboptimality bound")
    p.add_argument("-o", "--output", default=None,
                   help="value and strategy JSON path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("learn", parents=[common],
                       help="Q-learning on the lab grid world")
    p.add_argument("--map", default=None,
                   help="grid map file (default: the bundled map)")
    p.add_argument("--config", default=None,
                   help="JSON with grid and training parameters")
    p.add_argument("-o", "--output", default=None, help="policy JSON path")
    p.add_argument("--no-render", action="store_true",
                   help="skip the ASCII policy rendering")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("check", parents=[common],
                       help="language or value-agreement checking")
    p.add_argument("input", help="HOA file")
    p.add_argument("--against", default=None,
                   help="second HOA file for lasso equivalence")
    p.add_argument("--bound", type=int, default=6,
                   help="lasso length bound for --against")
    p.add_argument("--gfm", action="store_true",
                   help="value-agreement check on random processes")
    p.add_argument("--mdps", type=int, default=20,
                   help="number of random processes for --gfm")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("determinize", parents=[common],
                       help="dump the Streett determinization (debug)")
    p.add_argument("input", help="HOA file holding a UCA")
    p.add_argument("-o", "--output", default=None, help="JSON path")
    p.add_argument("--as-uca", action="store_true",
                   help="read an NBA file structurally as a UCA")
    p.add_argument("--max-states", type=int, default=200_000)
    p.set_defaults(func=cmd_determinize)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(args).items()
            if k not in ("subcommand", "timeout", "seed", "func")}
    cfg = CliConfig(args.subcommand, timeout=args.timeout, seed=args.seed,
                    options=opts)
    try:
        return args.func(cfg)
    except Exception as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NoValidStrategy):
            payload["sat_prob"] = exc.sat_prob
        print(json.dumps(payload), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
