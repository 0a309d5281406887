"""Command-line runner: ``sealedbid [globals] {run,ic-sweep,revenue,bench-fdec} ...``.

Exit status is 0 on success, 2 for configuration errors and 1 for
anything else. Options may also come from a JSON file given with
``--config``; flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import random
import statistics
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .controls import CONTROLS
from .crypto import nitc
from .domain import DiscreteDistribution, DomainError, ValueDomain, format_rational, load_domain, to_rational
from .incentives import Coalition, Mode, check_ic, revenue_compare, standard_suite
from .mechanism import AscendingAuction, SecondPriceAuction
from .netproto import ConfigInvalid, ProtocolConfig, attack_by_name, attack_suite, run_protocol

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

TEST_PROFILE_T = 1 << 10
DEFAULT_T = 1 << 16
COALITIONS = ("buyer", "platform", "platform-buyer", "seller", "platform-seller")


class ConfigError(Exception):
    pass


# -- argument handling -------------------------------------------------------------

_DEFAULTS = {
    "mechanism": "second-price",
    "k": 1,
    "grid": 11,
    "full": False,
    "adversary": None,
    "n": 3,
    "coalitions": "buyer,platform,platform-buyer",
    "scripts": "standard",
    "mode": "exact",
    "bayesian": False,
    "samples": 0,
    "dist": "uniform",
    "T": "1024,16384,262144",
    "repeats": 3,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sealedbid", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None, help="seed for every randomised step")
    p.add_argument("--out", type=Path, default=None, help="directory for output files")
    p.add_argument("--test-profile", action="store_true",
                   help="insecure 512-bit moduli and small T, for tests and CI")
    p.add_argument("--config", type=Path, default=None, help="JSON file of option defaults")
    sub = p.add_subparsers(dest="command", required=True)

    def domain_opts(sp):
        sp.add_argument("--grid", type=int, default=None, help="uniform grid with this many ticks")
        sp.add_argument("--domain", type=Path, default=None, help="JSON domain (and optional pmf)")
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--reserve", default=None)

    run = sub.add_parser("run", help="one execution of the compiled protocol")
    domain_opts(run)
    run.add_argument("--mechanism", choices=("second-price", "ascending"), default=None)
    run.add_argument("--bids", default=None, help="comma-separated honest bids for buyers 1..n")
    run.add_argument("--adversary", default=None, help="attack script name, or 'list'")
    run.add_argument("--full", action="store_true", default=None, help="include raw payloads in the trace")

    ic = sub.add_parser("ic-sweep", help="incentive checks over every honest profile")
    domain_opts(ic)
    ic.add_argument("--mechanism", choices=("second-price", "ascending", *CONTROLS), default=None)
    ic.add_argument("--n", type=int, default=None, help="total number of buyers")
    ic.add_argument("--coalitions", default=None, help=f"comma list from {', '.join(COALITIONS)}")
    ic.add_argument("--scripts", choices=("standard", "none"), default=None)
    ic.add_argument("--mode", choices=("exact", "monte-carlo"), default=None)
    ic.add_argument("--samples", type=int, default=None)
    ic.add_argument("--bayesian", action="store_true", default=None,
                    help="average honest values over the distribution instead of fixing them")

    rev = sub.add_parser("revenue", help="ascending vs second price vs optimal, per value vector")
    domain_opts(rev)
    rev.add_argument("--n", type=int, default=None)
    rev.add_argument("--dist", default=None, help="'uniform' or the pmf in --domain")
    rev.add_argument("--samples", type=int, default=None, help="0 enumerates every vector")

    bench = sub.add_parser("bench-fdec", help="forced-decryption wall time against T")
    bench.add_argument("--T", default=None, help="comma-separated difficulties")
    bench.add_argument("--repeats", type=int, default=None)
    return p


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from ``--config`` and then from the defaults."""
    loaded = {}
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
    for key, value in loaded.items():
        key = key.replace("-", "_")
        if key in ("seed", "out", "test_profile") and getattr(args, key, None) in (None, False):
            setattr(args, key, Path(value) if key == "out" else value)
        elif hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    for key, value in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _domain(args) -> tuple[ValueDomain, Optional[DiscreteDistribution]]:
    if args.domain is not None:
        path = Path(args.domain)
        if not path.exists():
            raise ConfigError(f"domain file {path} does not exist")
        return load_domain(path)
    if int(args.grid) < 2:
        raise ConfigError("--grid needs at least 2 ticks")
    return ValueDomain.grid(int(args.grid)), None


def _reserve(args, dist: DiscreteDistribution) -> Fraction:
    return dist.reserve() if args.reserve is None else to_rational(str(args.reserve))


def _need_seed(args, what: str) -> int:
    if args.seed is None:
        raise ConfigError(f"{what} is randomised; pass --seed")
    return int(args.seed)


def _write(args, name: str, text: str) -> Optional[Path]:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / name
    path.write_text(text)
    return path


# -- subcommands -------------------------------------------------------------------


def cmd_run(args) -> int:
    if args.adversary == "list":
        dummy = ProtocolConfig(ValueDomain.grid(2), 1, reserve=0)
        for case in attack_suite(dummy):
            print(f"{case.name}\t{'safe' if case.expect_safe else 'unsafe'}")
        return EXIT_OK
    seed = _need_seed(args, "run")
    domain, loaded = _domain(args)
    dist = loaded or DiscreteDistribution.uniform(domain)
    if args.bids is None:
        raise ConfigError("run needs --bids")
    bids = {i: to_rational(b.strip()) for i, b in enumerate(str(args.bids).split(","), start=1) if b.strip()}
    config = ProtocolConfig(
        domain, int(args.k), reserve=_reserve(args, dist), mechanism=args.mechanism, seed=seed,
        crs_seed=seed,
        nitc_T=TEST_PROFILE_T if args.test_profile else DEFAULT_T,
        modulus_bits=nitc.TEST_MODULUS_BITS if args.test_profile else nitc.DEFAULT_MODULUS_BITS,
    )
    adversary = None
    if args.adversary:
        try:
            case = attack_by_name(config, args.adversary)
        except KeyError:
            raise ConfigError(f"unknown adversary {args.adversary!r}") from None
        adversary = case.build(bids, random.Random(seed))
    trace = run_protocol(config, bids, adversary)
    _write(args, "trace.jsonl", trace.to_jsonl(full=bool(args.full)))
    if trace.outcome is not None:
        _write(args, "outcome.json", json.dumps(trace.outcome.to_json(), indent=2, sort_keys=True) + "\n")
    print(summary(config, trace, adversary.name if adversary else "none"))
    return EXIT_OK


def summary(config: ProtocolConfig, trace, adversary: str) -> str:
    lines = [
        f"mechanism: {config.mechanism}  k={config.k}  reserve={format_rational(config.reserve)}",
        f"adversary: {adversary}",
        f"safe: {str(trace.safe).lower()}",
    ]
    out = trace.outcome
    if out is not None:
        lines.append(f"items sold: {out.items_sold}  seller revenue: {_num(out.seller_revenue)}"
                     f"  platform revenue: {_num(out.platform_revenue)}")
        for i in sorted(out.allocations):
            tag = "wins" if out.allocations[i] else "loses"
            lines.append(f"buyer {i}: {tag}, pays {_num(out.payments[i])}")
    for who in sorted(trace.decisions, key=str):
        lines.append(f"decision {who}: {'accept' if trace.decisions[who] else 'reject'}")
    lines += [f"note: {n}" for n in trace.notes]
    return "\n".join(lines)


def _num(x: Fraction) -> str:
    return f"{format_rational(x)} ({float(x):.4g})"


def _mechanism(name: str, domain, reserve, k):
    if name == "second-price":
        return SecondPriceAuction(domain, reserve, k)
    if name == "ascending":
        return AscendingAuction(domain, reserve, k)
    return CONTROLS[name](domain, reserve, k)


def _coalition(kind: str, member: int, value) -> Coalition:
    return {
        "buyer": lambda: Coalition.buyer(member, value),
        "platform": Coalition.platform,
        "platform-buyer": lambda: Coalition.platform({member: value}),
        "seller": Coalition.seller,
        "platform-seller": Coalition.platform_seller,
    }[kind]()


def ic_sweep(mechanism, domain: ValueDomain, n: int, kinds, scripts: str = "standard",
             mode: Mode = Mode.EXACT, samples: int = 0, seed: int = 0,
             dist: Optional[DiscreteDistribution] = None) -> dict:
    """Every coalition kind and member value; honest values either range over
    every profile (ex post) or are drawn from ``dist`` (Bayesian, implied by
    Monte Carlo mode)."""
    if mode is Mode.MONTE_CARLO and dist is None:
        dist = DiscreteDistribution.uniform(domain)
    cases = []
    violations = 0
    checked = 0
    for kind in kinds:
        with_member = kind in ("buyer", "platform-buyer")
        member_values = domain.ticks if with_member else (None,)
        n_honest = n - 1 if with_member else n
        if n_honest < 0:
            continue
        for value in member_values:
            coalition = _coalition(kind, n, value)
            suite = standard_suite(domain, coalition) if scripts == "standard" else []
            if not suite:
                continue
            profiles = itertools.product(domain.ticks, repeat=n_honest)
            if dist is not None:
                profiles = [None]
            for prof in profiles:
                if prof is None:
                    reports = check_ic(mechanism, coalition, suite, dist=dist, n_honest=n_honest,
                                       mode=mode, samples=samples, seed=seed)
                else:
                    reports = check_ic(mechanism, coalition, suite, dict(enumerate(prof, start=1)))
                for rep in reports:
                    checked += 1
                    if rep.violated:
                        violations += 1
                        row = rep.to_json()
                        row.update(coalition=kind, value=None if value is None else str(value),
                                   honest=None if prof is None else [str(v) for v in prof])
                        cases.append(row)
    return {"mechanism": getattr(mechanism, "name", type(mechanism).__name__),
            "n": n, "bayesian": dist is not None, "k": mechanism.k, "reserve": str(mechanism.reserve),
            "ticks": [str(t) for t in domain.ticks],
            "checked": checked, "violations": violations, "cases": cases}


def cmd_ic_sweep(args) -> int:
    domain, loaded = _domain(args)
    dist = loaded or DiscreteDistribution.uniform(domain)
    kinds = [c.strip() for c in str(args.coalitions).split(",") if c.strip()]
    unknown = set(kinds) - set(COALITIONS)
    if unknown:
        raise ConfigError(f"unknown coalition kinds {sorted(unknown)}")
    mode = Mode.EXACT if args.mode == "exact" else Mode.MONTE_CARLO
    seed = _need_seed(args, "monte-carlo mode") if mode is Mode.MONTE_CARLO else 0
    if int(args.n) < 1:
        raise ConfigError("--n must be positive")
    mech = _mechanism(args.mechanism, domain, _reserve(args, dist), int(args.k))
    bayes = bool(args.bayesian) or mode is Mode.MONTE_CARLO
    report = ic_sweep(mech, domain, int(args.n), kinds, args.scripts, mode,
                      int(args.samples) or 2000, seed, dist if bayes else None)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _write(args, "ic_sweep.json", text)
    print(text, end="")
    return EXIT_OK


def cmd_revenue(args) -> int:
    domain, loaded = _domain(args)
    dist = loaded if (loaded is not None and args.dist != "uniform") else DiscreteDistribution.uniform(domain)
    samples = int(args.samples)
    seed = _need_seed(args, "sampled revenue") if samples else 0
    table = revenue_compare(dist, int(args.k), int(args.n), samples=samples, seed=seed,
                            reserve=args.reserve)
    text = table.to_csv()
    _write(args, "revenue.csv", text)
    print(text, end="")
    print(f"# expected ascending={table.expected('ascending')} second_price={table.expected('second_price')}"
          f" optimal={table.expected('optimal')} worst_gap={table.worst_gap()}"
          f" rows_over_k_tick={len(table.rows_over_bound())}")
    return EXIT_OK


@dataclass
class BenchRow:
    T: int
    seconds: list[float]

    @property
    def median(self) -> float:
        return statistics.median(self.seconds)


def bench_fdec(difficulties, repeats: int, bits: int, seed: int = 0) -> list[BenchRow]:
    rows = []
    for T in difficulties:
        crs = nitc.cached_gen(bits, T, seed)
        rng = random.Random(seed)
        cm, pi, _ = nitc.com(crs, b"bench", rng)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            nitc.fdec(crs, cm, pi)
            times.append(time.perf_counter() - start)
        rows.append(BenchRow(T, times))
    return rows


def cmd_bench_fdec(args) -> int:
    try:
        difficulties = [int(t) for t in str(args.T).split(",") if t.strip()]
    except ValueError:
        raise ConfigError("--T takes comma-separated integers") from None
    if not difficulties or min(difficulties) < 1 or int(args.repeats) < 1:
        raise ConfigError("difficulties and repeats must be positive")
    bits = nitc.TEST_MODULUS_BITS if args.test_profile else nitc.DEFAULT_MODULUS_BITS
    rows = bench_fdec(difficulties, int(args.repeats), bits, int(args.seed or 0))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["T", "median_seconds", "min_seconds", "max_seconds"])
    for r in rows:
        w.writerow([r.T, f"{r.median:.6f}", f"{min(r.seconds):.6f}", f"{max(r.seconds):.6f}"])
    text = buf.getvalue()
    _write(args, "bench_fdec.csv", text)
    print(text, end="")
    if len(rows) > 1 and rows[0].median > 0:
        print(f"# ratio T={rows[-1].T}/T={rows[0].T}: {rows[-1].median / rows[0].median:.1f}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "ic-sweep": cmd_ic_sweep, "revenue": cmd_revenue, "bench-fdec": cmd_bench_fdec}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        args = resolve(args)
        return COMMANDS[args.command](args)
    except (ConfigError, ConfigInvalid, DomainError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
