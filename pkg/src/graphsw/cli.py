"""``graphsw`` command-line front end.

Exit status: 0 on success, 1 on a domain error (bad model, failed
verification, resource cap), 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import codec, entropy, ensembles, local_weak, oracles
from .errors import DecodeError, GraphParseError, ResourceLimitError
from .marked_graph import serialize_graph
from .rng import derive_seed

log = logging.getLogger("graphsw")


class UsageError(Exception):
    pass


def _parse_tuple(text):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--tuple expects four numbers, got {text!r}") from None
    if len(vals) != 4:
        raise UsageError(f"--tuple expects alpha1,R1,alpha2,R2, got {text!r}")
    return entropy.RateTuple(*vals)


def parse_sweep(text):
    """``n=a:b:log`` gives decades ``a, 10a, ...`` up to ``b``; ``n=a:b:step`` a linear range."""
    try:
        name, spec = text.split("=", 1)
        start, stop, step = spec.split(":")
        start, stop = int(start), int(stop)
    except ValueError:
        raise UsageError(f"--sweep expects name=start:stop:step|log, got {text!r}") from None
    if name != "n":
        raise UsageError("only n can be swept")
    if start < 1 or stop < start:
        raise UsageError("--sweep needs 1 <= start <= stop")
    if step == "log":
        out, v = [], start
        while v <= stop:
            out.append(v)
            v *= 10
        return out
    try:
        inc = int(step)
    except ValueError:
        raise UsageError(f"bad sweep step {step!r}") from None
    if inc < 1:
        raise UsageError("sweep step must be positive")
    return list(range(start, stop + 1, inc))


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def _load(args):
    _need(args, "config")
    return ensembles.load_model(args.config)


def _flatten(rec, prefix=""):
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def _render(records, fmt):
    if fmt == "json":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    rows = [_flatten(r) for r in records]
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# -- subcommands ----------------------------------------------------------------


def cmd_sample(args):
    model = _load(args)
    _need(args, "n", "seed")
    g = codec._sample(model, args.n, args.seed)
    rep = codec.is_typical(g, model)
    return [{"command": "sample", "n": args.n, "seed": args.seed, "typical": rep.typical, "graph": serialize_graph(g)}]


def cmd_entropy(args):
    model = _load(args)
    bc = entropy.bc_entropy(model)
    if args.sweep is None:
        return [{"command": "entropy", **bc.to_dict()}]
    if not isinstance(model, ensembles.ErModel):
        raise ValueError("entropy sweeps compare against the exact ER entropy and need an ER model")
    rows = []
    for n in args.sweep:
        h = entropy.exact_shannon_er(model, n)
        coef = (h - 0.5 * bc.d12 * n * math.log(n)) / n
        rows.append({"command": "entropy", "n": n, "exact_entropy": h, "coefficient": coef, "sigma12": bc.sigma12, "gap": coef - bc.sigma12})
    return rows


def cmd_rate_region(args):
    model = _load(args)
    _need(args, "tuple")
    bc = entropy.bc_entropy(model)
    verdict = entropy.rate_region_contains(bc, args.tuple)
    return [{"command": "rate-region", "tuple": list(args.tuple), "bc": bc.to_dict(), **verdict.to_dict()}]


def cmd_codec_sim(args):
    model = _load(args)
    _need(args, "n", "seed", "tuple")
    trials = args.trials or 100
    ns = args.sweep or [args.n]
    out = []
    for n in ns:
        params = codec.CodeParams(n, args.tuple, args.seed)
        rep = codec.simulate(params, model, trials, args.seed, jobs=args.jobs)
        if args.sweep is None and args.format == "json":
            for r in rep.results:
                out.append({"record": "trial", **r.to_dict()})
        out.append({"record": "summary", **rep.summary()})
    return out


def cmd_lwc_dist(args):
    model = _load(args)
    _need(args, "seed")
    depth = 1 if args.depth is None else args.depth
    samples = args.trials or 1
    if depth != 1:
        raise ValueError("exact limit laws are available at depth 1 only")
    law = local_weak.limit_law_cm(model) if isinstance(model, ensembles.CmModel) else local_weak.limit_law_er(model)
    ns = args.sweep
    if ns is None:
        _need(args, "n")
        ns = [args.n]
    rows = []
    for n in ns:
        tvs = []
        last = None
        for t in range(samples):
            g = codec._sample(model, n, derive_seed(args.seed, "lwc", n, t))
            last = local_weak.empirical_u(g, depth)
            tvs.append(local_weak.dist_tv(last, law))
        row = {"command": "lwc-dist", "n": n, "depth": depth, "samples": samples, "tv_mean": float(np.mean(tvs)), "tv": tvs}
        if args.sweep is None and args.format == "json":
            row["empirical"] = last.to_json()
            row["limit"] = law.to_json()
        rows.append(row)
    return rows


def cmd_verify(args):
    rep = oracles.verification_report(args.suite)
    return [{"command": "verify", **rep}]


COMMANDS = {
    "sample": cmd_sample,
    "entropy": cmd_entropy,
    "rate-region": cmd_rate_region,
    "codec-sim": cmd_codec_sim,
    "lwc-dist": cmd_lwc_dist,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="graphsw", description="Distributed compression of marked random graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "sample": "draw one graph from the configured ensemble",
        "entropy": "BC entropies and degrees of the configured model",
        "rate-region": "test a rate tuple against the rate region",
        "codec-sim": "Monte Carlo simulation of the binning codec",
        "lwc-dist": "TV distance between empirical and limit neighbourhood laws",
        "verify": "run the oracle verification suite",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", help="model config file (key=value lines)")
        s.add_argument("--seed", type=int)
        s.add_argument("--n", type=int)
        s.add_argument("--depth", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--tuple", type=_parse_tuple_arg, help="alpha1,R1,alpha2,R2")
        s.add_argument("--out", help="write output here instead of stdout")
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--format", choices=("json", "csv"), default="json")
        s.add_argument("--sweep", type=_parse_sweep_arg, help="e.g. n=100:10000:log")
        if name == "verify":
            s.add_argument("--suite", choices=("all", "oracles", "entropy"), default="all")
    return p


def _parse_tuple_arg(text):
    try:
        return _parse_tuple(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_sweep_arg(text):
    try:
        return parse_sweep(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def run(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("GRAPHSW_LOG", "WARNING").upper(), stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be positive")
        records = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"graphsw: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, GraphParseError, ResourceLimitError, DecodeError, RuntimeError, OSError) as exc:
        print(f"graphsw: error: {exc}", file=sys.stderr)
        return 1
    text = _render(records, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "verify" and not records[0]["passed"]:
        return 1
    log.info("%s finished", args.command)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
