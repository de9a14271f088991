"""zorro: simulate aggregation sessions over a file ledger and inspect them.

Parties run in one process but exchange nothing except ledger entries, so a
run exercises exactly the public-information flow of the protocol.  Exit
codes distinguish the failure classes: 1 usage or illegal input, 2 proof
rejection, 3 ledger corruption, 4 dropout (a party missing from a round).
"""

import argparse
import hashlib
import random
import sys

import numpy as np

from . import bench as bench_mod
from . import reductions
from .dlog import DlogWindow
from .errors import ChainBroken, MissingPost, ZorroError
from .groups import get_group, prod_group, test_group
from .ledger import Ledger, LedgerHeader
from .protocol import (
    Party,
    ProtocolConfig,
    Round1Post,
    Round2Post,
    tally,
    verify_contribution,
    verify_round1,
)
from .rangeproof import BoundPolicy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PROOF = 2
EXIT_LEDGER = 3
EXIT_DROPOUT = 4


class SessionFailure(ZorroError):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _group_for(name: str):
    return {"test": test_group(), "prod": prod_group()}[name]


def _policy_for(kind: str, bound: int) -> BoundPolicy:
    if kind == "none":
        return BoundPolicy.none()
    if bound is None:
        raise SessionFailure(EXIT_USAGE, f"--bound is required for --check {kind}")
    return BoundPolicy.l1(bound) if kind == "l1" else BoundPolicy.l2(bound)


def _derived_rng(seed: int, label: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{label}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


def run_session(cfg: ProtocolConfig, vectors, ledger: Ledger, seed: int, window=None):
    """Drive n in-process parties through both rounds over the ledger.

    All cross-party data flows through serialized ledger payloads.  Every
    contribution is publicly verified before tallying.  Returns the tally.
    """
    group = cfg.group
    parties = [Party(cfg, i, _derived_rng(seed, f"party{i}")) for i in range(cfg.n)]
    for party in parties:
        ledger.append(1, party.index, party.round1().to_bytes(group))

    posts1 = [
        Round1Post.from_bytes(group, entry.payload)
        for entry in ledger.read_round(cfg.session, 1)
    ]
    if len(posts1) < cfg.n:
        present = {p.party for p in posts1}
        missing = min(i for i in range(cfg.n) if i not in present)
        raise SessionFailure(EXIT_DROPOUT, f"party {missing} missing from round 1")
    for post in posts1:
        if not verify_round1(cfg, post):
            raise SessionFailure(EXIT_PROOF, f"round-1 proof of party {post.party} rejected")
    for party in parties:
        party.receive_round1(posts1)

    for i, party in enumerate(parties):
        ledger.append(2, party.index, party.round2(vectors[i]).to_bytes(group))

    posts2 = [
        Round2Post.from_bytes(group, entry.payload)
        for entry in ledger.read_round(cfg.session, 2)
    ]
    if len(posts2) < cfg.n:
        present = {p.party for p in posts2}
        missing = min(i for i in range(cfg.n) if i not in present)
        raise SessionFailure(EXIT_DROPOUT, f"party {missing} missing from round 2")
    for post in posts2:
        ok, reason = verify_contribution(cfg, posts1, post)
        if not ok:
            raise SessionFailure(
                EXIT_PROOF, f"contribution of party {post.party} rejected ({reason})"
            )

    return tally(cfg, posts2, window)


def _new_ledger(cfg: ProtocolConfig, path) -> Ledger:
    header = LedgerHeader(
        cfg.group.group_id, cfg.session, cfg.n, cfg.m, cfg.policy.kind, cfg.policy.B
    )
    return Ledger(header, path=path)


def _make_config(group, n, m, policy, seed) -> ProtocolConfig:
    session = hashlib.sha256(f"session|{seed}".encode()).digest()[:16]
    return ProtocolConfig(group, n, m, policy, session)


# -- subcommands ----------------------------------------------------------------


def cmd_vote(args) -> int:
    group = _group_for(args.group)
    ballots = []
    with open(args.ballots) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ballots.append([int(tok) for tok in line.replace(",", " ").split()])
    if not ballots:
        print("no ballots found", file=sys.stderr)
        return EXIT_USAGE
    m = len(ballots[0])
    if any(len(b) != m for b in ballots):
        print("ballots disagree on candidate count", file=sys.stderr)
        return EXIT_USAGE

    vectors = []
    policy = None
    for i, ballot in enumerate(ballots):
        try:
            vec, policy = reductions.encode_ballot(ballot, args.bound)
        except ZorroError as exc:
            print(f"ballot of voter {i} is illegal: {exc}", file=sys.stderr)
            return EXIT_USAGE
        vectors.append(vec)

    cfg = _make_config(group, len(ballots), m, policy, args.seed)
    ledger = _new_ledger(cfg, args.ledger)
    result = run_session(cfg, vectors, ledger, args.seed)
    ledger.verify_chain()
    for j, total in enumerate(result.totals):
        print(f"candidate {j}: {total} votes")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(",".join(str(t) for t in result.totals) + "\n")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    group = _group_for(args.group)
    policy = _policy_for(args.check, args.bound)
    if args.vectors:
        vectors = []
        with open(args.vectors) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                vectors.append([int(tok) for tok in line.replace(",", " ").split()])
        n, m = len(vectors), len(vectors[0]) if vectors else 0
        if n < 2 or m < 1 or any(len(v) != m for v in vectors):
            print("vectors file must hold >= 2 equal-length rows", file=sys.stderr)
            return EXIT_USAGE
    else:
        n, m = args.parties, args.dim
        rng = _derived_rng(args.seed, "inputs")
        vectors = [_random_vector(policy, m, rng) for _ in range(n)]

    cfg = _make_config(group, n, m, policy, args.seed)
    ledger = _new_ledger(cfg, args.ledger)
    window = DlogWindow(0, args.window) if policy.kind == "none" else None
    result = run_session(cfg, vectors, ledger, args.seed, window=window)
    print("tally:", ",".join(str(t) for t in result.totals))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(",".join(str(t) for t in result.totals) + "\n")
    return EXIT_OK


def _random_vector(policy: BoundPolicy, m: int, rng) -> list:
    if policy.kind == "l1":
        budget = policy.B
        vec = [0] * m
        for _ in range(budget):
            if rng.random() < 0.7:
                vec[rng.randrange(m)] += 1
        return vec
    if policy.kind == "l2":
        cap = max(1, int(policy.B / max(1, m) ** 0.5))
        return [rng.randrange(cap + 1) for _ in range(m)]
    return [rng.randrange(33) for _ in range(m)]


def cmd_verify(args) -> int:
    try:
        ledger = Ledger.load(args.ledger)
        ledger.verify_chain()
    except ChainBroken as exc:
        print(f"ledger corrupt at seq {exc.seq}: {exc.reason}", file=sys.stderr)
        return EXIT_LEDGER
    header = ledger.header
    try:
        group = get_group(header.group_id)
    except KeyError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    policy = BoundPolicy(header.policy_kind, header.policy_bound)
    cfg = ProtocolConfig(group, header.n, header.m, policy, header.session)

    posts1, posts2 = {}, {}
    for entry in ledger.entries:
        try:
            if entry.round == 1:
                posts1[entry.party] = Round1Post.from_bytes(group, entry.payload)
            else:
                posts2[entry.party] = Round2Post.from_bytes(group, entry.payload)
        except ZorroError as exc:
            print(f"entry seq {entry.seq} undecodable: {exc}", file=sys.stderr)
            return EXIT_PROOF
    for i in range(cfg.n):
        if i not in posts1:
            print(f"party {i} missing from round 1", file=sys.stderr)
            return EXIT_DROPOUT
        if not verify_round1(cfg, posts1[i]):
            print(f"round-1 proof of party {i} rejected", file=sys.stderr)
            return EXIT_PROOF
    for i in range(cfg.n):
        if i not in posts2:
            print(f"party {i} missing from round 2", file=sys.stderr)
            return EXIT_DROPOUT
    for i in range(cfg.n):
        ok, reason = verify_contribution(cfg, list(posts1.values()), posts2[i])
        if not ok:
            print(f"contribution of party {i} rejected ({reason})", file=sys.stderr)
            return EXIT_PROOF
    print(f"ledger ok: {len(ledger.entries)} entries, {cfg.n} parties verified")
    return EXIT_OK


def cmd_bench(args) -> int:
    group = _group_for(args.group)
    ms = [int(tok) for tok in args.dims.split(",")]
    Bs = [int(tok) for tok in args.bounds.split(",")]
    rows = bench_mod.bench_grid(group, args.check, ms, Bs, reps=args.reps, seed=args.seed)
    bench_mod.write_csv(rows, args.out)
    for row in rows:
        print(
            f"m={row.m:3d} B={row.B:3d} gen={row.gen_ms:9.3f}ms "
            f"verify={row.verify_ms:9.3f}ms tally={row.tally_ms:8.3f}ms"
        )
    print(f"wrote {args.out}")
    return EXIT_OK


# -- reduction demos --------------------------------------------------------------


def _run_plain(cfg, vectors, seed, window=None):
    ledger = _new_ledger(cfg, None)
    return run_session(cfg, vectors, ledger, seed, window=window)


def _read_rows(path, cast=int):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([cast(tok) for tok in line.replace(",", " ").split()])
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise SessionFailure(EXIT_USAGE, f"{path}: need equal-length non-empty rows")
    return rows


def _split_rows(rows, parties):
    if len(rows) < parties:
        raise SessionFailure(EXIT_USAGE, f"need at least {parties} rows for {parties} parties")
    chunk = -(-len(rows) // parties)
    return [rows[i * chunk : (i + 1) * chunk] for i in range(parties)]


def cmd_demo_lda(args) -> int:
    rng = _derived_rng(args.seed, "lda")
    words, topics, cap = 6, 3, 40
    n = args.parties
    matrices = [
        [[rng.randrange(3) for _ in range(topics)] for _ in range(words)] for _ in range(n)
    ]
    encoded = [reductions.encode_counts(mat, cap) for mat in matrices]
    policy = encoded[0][1]
    cfg = _make_config(_group_for(args.group), n, words * topics, policy, args.seed)
    result = _run_plain(cfg, [vec for vec, _ in encoded], args.seed)
    tallied = reductions.decode_counts(result.totals, (words, topics))
    central = np.sum(np.array(matrices), axis=0)
    print("aggregated word-topic counts:")
    print(tallied)
    print("matches centralized sum:", bool(np.array_equal(tallied, central)))
    return EXIT_OK if np.array_equal(tallied, central) else EXIT_PROOF


def cmd_demo_id3(args) -> int:
    rng = _derived_rng(args.seed, "id3")
    n = args.parties
    if args.samples:
        # rows "feature_value label" with a binary feature
        rows = _read_rows(args.samples)
        if any(len(r) != 2 or r[0] not in (0, 1) or r[1] < 0 for r in rows):
            raise SessionFailure(EXIT_USAGE, "samples must be rows 'feature(0|1) label'")
        k = max(r[1] for r in rows) + 1
        cap = len(rows)
        ps, qs = [], []
        for chunk in _split_rows(rows, n):
            p, q = [0] * k, [0] * k
            for f, y in chunk:
                (p if f == 0 else q)[y] += 1
            ps.append(p)
            qs.append(q)
    else:
        k, cap = 3, 60
        # per user: p = counts with feature 0, q = counts with feature 1
        ps = [[rng.randrange(5) for _ in range(k)] for _ in range(n)]
        qs = [[rng.randrange(5) for _ in range(k)] for _ in range(n)]
    vectors = [reductions.encode_counts([p, q], cap)[0] for p, q in zip(ps, qs)]
    policy = reductions.encode_counts([ps[0], qs[0]], cap)[1]
    cfg = _make_config(_group_for(args.group), n, 2 * k, policy, args.seed)
    result = _run_plain(cfg, vectors, args.seed)
    split = reductions.decode_counts(result.totals, (2, k))
    c = split.sum(axis=0)
    gain = reductions.compute_gain(c, split)
    p_sum = [sum(p[j] for p in ps) for j in range(k)]
    q_sum = [sum(q[j] for q in qs) for j in range(k)]
    central = reductions.compute_gain(
        [a + b for a, b in zip(p_sum, q_sum)], [p_sum, q_sum]
    )
    print(f"entropy gain (distributed): {gain:.6f}")
    print(f"entropy gain (centralized): {central:.6f}")
    return EXIT_OK if abs(gain - central) < 1e-12 else EXIT_PROOF


def cmd_demo_nb(args) -> int:
    rng = _derived_rng(args.seed, "nb")
    n = args.parties
    if args.samples:
        rows = _read_rows(args.samples)
        if any(len(r) != 2 or r[0] < 0 or r[1] < 0 for r in rows):
            raise SessionFailure(EXIT_USAGE, "samples must be rows 'feature_value label'")
        values = max(r[0] for r in rows) + 1
        k = max(r[1] for r in rows) + 1
        cap = len(rows)
        tables = []
        for chunk in _split_rows(rows, n):
            table = [[0] * k for _ in range(values)]
            for v, y in chunk:
                table[v][y] += 1
            tables.append(table)
    else:
        k, values, cap = 2, 3, 80
        tables = [
            [[1 + rng.randrange(4) for _ in range(k)] for _ in range(values)] for _ in range(n)
        ]
    vectors = [reductions.encode_counts(t, cap)[0] for t in tables]
    policy = reductions.encode_counts(tables[0], cap)[1]
    cfg = _make_config(_group_for(args.group), n, values * k, policy, args.seed)
    result = _run_plain(cfg, vectors, args.seed)
    table = reductions.decode_counts(result.totals, (values, k))
    labels = table.sum(axis=0)
    priors, conds = reductions.nb_parameters(labels, [table])
    central_table = np.sum(np.array(tables), axis=0)
    priors_c, conds_c = reductions.nb_parameters(central_table.sum(axis=0), [central_table])
    print("class priors:", np.round(priors, 6))
    print("conditionals:")
    print(np.round(conds[0], 6))
    same = np.allclose(priors, priors_c) and np.allclose(conds[0], conds_c[0])
    print("matches centralized fit:", bool(same))
    return EXIT_OK if same else EXIT_PROOF


def cmd_demo_regression(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.parties
    if args.data:
        rows = np.asarray(_read_rows(args.data, cast=float))
        if rows.shape[1] < 2:
            raise SessionFailure(EXIT_USAGE, "data rows must be 'x1 ... xd y'")
        X, Y = rows[:, :-1], rows[:, -1]
        d, samples = X.shape[1], X.shape[0]
    else:
        d, samples = 2, 24
        X = rng.integers(-8, 9, size=(samples, d))
        beta_true = np.array([2.0, -1.0])
        Y = (X @ beta_true).astype(int)
    parts = np.array_split(np.arange(samples), n)
    vectors, policy = [], None
    for idx in parts:
        vec, policy = reductions.encode_regression(X[idx], Y[idx], bound=10**6)
        vectors.append(vec)
    cfg = _make_config(_group_for(args.group), n, d * d + d, policy, args.seed)
    result = _run_plain(cfg, vectors, args.seed)
    beta = reductions.solve_beta(result.totals, d)
    # oracle: centralized least squares on the same floor-quantized data
    central, *_ = np.linalg.lstsq(np.floor(X).astype(float), np.floor(Y).astype(float), rcond=None)
    print("beta (distributed): ", np.round(beta, 9))
    print("beta (centralized): ", np.round(central, 9))
    if args.data:
        fp, *_ = np.linalg.lstsq(X.astype(float), Y.astype(float), rcond=None)
        print("beta (full precision, for reference):", np.round(fp, 9))
    ok = bool(np.allclose(beta, central, atol=1e-9))
    print("match:", ok)
    return EXIT_OK if ok else EXIT_PROOF


def cmd_demo_cf(args) -> int:
    rng = np.random.default_rng(args.seed)
    k, scale = 2, 2**16
    if args.ratings:
        rows = _read_rows(args.ratings)
        if any(v < 0 for row in rows for v in row):
            raise SessionFailure(EXIT_USAGE, "ratings must be non-negative integers")
        ratings = [np.asarray(row) for row in rows]
        n, items = len(ratings), len(rows[0])
    else:
        items = 4
        n = args.parties
        ratings = [rng.integers(0, 6, size=items) for _ in range(n)]
    A = rng.normal(scale=0.3, size=(k, items))
    vectors, policy = [], None
    for P in ratings:
        vec, policy = reductions.encode_cf_gradient(A, P, bound=10**9, scale=scale)
        vectors.append(vec)
    cfg = _make_config(_group_for(args.group), n, k * items, policy, args.seed)
    result = _run_plain(cfg, vectors, args.seed)
    central = sum(reductions.cf_gradient(A, P) for P in ratings)
    tallied = np.array([float(v) for v in result.totals]).reshape(k, items) / scale
    err = np.abs(tallied - central).max()
    tol = 2 * n / scale
    print(f"gradient max deviation: {err:.3e} (fixed-point tolerance {tol:.3e})")
    A_next = reductions.cf_gradient_step(result.totals, A, step=0.05, scale=scale)
    print("factor updated, norm change:", f"{np.linalg.norm(A_next - A):.6f}")
    return EXIT_OK if err <= tol else EXIT_PROOF


# -- argument parsing --------------------------------------------------------------


def _add_common(parser, ledger=False):
    parser.add_argument("--group", choices=["test", "prod"], default="test",
                        help="group instantiation (default: test)")
    parser.add_argument("--seed", type=int, default=0, help="deterministic run seed")
    if ledger:
        parser.add_argument("--ledger", required=True, help="ledger file path")
    parser.add_argument("--out", help="output file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zorro",
        description="self-tallying encrypted vector aggregation with validity proofs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vote", help="run a cumulative-voting session from a ballots file")
    p.add_argument("ballots", help="file with one comma/space separated ballot per line")
    p.add_argument("--bound", type=int, required=True,
                   help="vote budget: each voter casts fewer than this many votes")
    _add_common(p, ledger=True)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("aggregate", help="aggregate integer vectors (random or from file)")
    p.add_argument("--parties", type=int, default=3)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--bound", type=int)
    p.add_argument("--check", choices=["l1", "l2", "none"], default="l1")
    p.add_argument("--vectors", help="file with one vector per line (overrides --parties/--dim)")
    p.add_argument("--window", type=int, default=100000,
                   help="tally search bound when --check none")
    _add_common(p, ledger=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("verify", help="re-verify a persisted ledger end to end")
    p.add_argument("ledger", help="ledger file path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="benchmark proof generation/verification/tally")
    p.add_argument("--check", choices=["l1", "l2"], default="l1")
    p.add_argument("--dims", default="1,2,4,8,16,32", help="comma list of vector lengths")
    p.add_argument("--bounds", default="2,4,8,16,32", help="comma list of bounds")
    p.add_argument("--reps", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    p.set_defaults(out="bench.csv")

    for name, func, blurb, extra in [
        ("demo-lda", cmd_demo_lda, "aggregate word-topic count matrices", None),
        ("demo-id3", cmd_demo_id3, "entropy gain from aggregated split counts",
         ("--samples", "labeled sample rows 'feature(0|1) label'")),
        ("demo-nb", cmd_demo_nb, "naive Bayes parameters from aggregated counts",
         ("--samples", "labeled sample rows 'feature_value label'")),
        ("demo-regression", cmd_demo_regression, "least squares from aggregated tensors",
         ("--data", "regression rows 'x1 ... xd y'")),
        ("demo-cf", cmd_demo_cf, "collaborative-filtering gradient aggregation",
         ("--ratings", "one row of item ratings per user")),
    ]:
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--parties", type=int, default=3)
        if extra is not None:
            flag, blurb2 = extra
            p.add_argument(flag, help=f"optional dataset file: {blurb2}")
        _add_common(p)
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SessionFailure as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ChainBroken as exc:
        print(f"ledger corrupt at seq {exc.seq}: {exc.reason}", file=sys.stderr)
        return EXIT_LEDGER
    except MissingPost as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DROPOUT
    except (ZorroError, OSError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
