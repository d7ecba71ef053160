"""``relupat`` command-line front end."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .data import read_csv
from .decompose import PlanStatus, prove_contract, prove_via_interpolant, prove_via_prefix_cover, select_interpolant
from .distill import RuleTable, benchmark, build_rule_table
from .explain import format_box, minimal_assignment, under_approx_box
from .mine import MinedPattern, mine_and_prove, mine_layer_patterns, validate_empirically
from .model import activation_signature, evaluate, load_network
from .oracle import oracle_check
from .pattern import load_pattern
from .postcondition import parse_post
from .relax import infer_input_property
from .verify import Budget, Query, Region, dp

log = logging.getLogger("relupat")


class UsageError(Exception):
    pass


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse input vector {text!r}") from None


def _fmt(v) -> str:
    return "[" + ", ".join(f"{float(a):.10g}" for a in np.ravel(v)) + "]"


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, default=_plain) + "\n"


def _emit(args, doc, summary: str):
    text = dumps(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        print(summary)
    else:
        print(summary, file=sys.stderr)
        sys.stdout.write(text)


def _budget(args) -> Budget:
    return Budget(max_nodes=args.max_nodes, timeout=args.timeout_secs)


def _input(args, net):
    text = args.x or args.input
    if text is None:
        raise UsageError("an input vector is required (--x or --input)")
    x = _vector(text)
    if len(x) != net.input_dim:
        raise UsageError(f"input has {len(x)} values, network expects {net.input_dim}")
    return x


def _post(args):
    if not args.post:
        raise UsageError("--post is required")
    post = parse_post(args.post)
    if getattr(args, "argmin", False) and post.kind == "prediction":
        post = type(post).prediction(post.cls, "argmin")
    return post


def _load_region(path):
    with open(path, encoding="utf-8") as f:
        return Region.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args, net):
    if args.data:
        X = read_csv(args.data, net.input_dim).inputs
        Y = evaluate(net, X)
        _emit(args, {"outputs": Y.tolist()}, f"{len(Y)} outputs")
        return 0
    y = evaluate(net, _input(args, net))
    if args.out:
        _emit(args, {"output": y.tolist()}, _fmt(y))
    else:
        print(_fmt(y))
    return 0


def cmd_signature(args, net):
    sigma = activation_signature(net, _input(args, net))
    _emit(args, sigma.to_json(), str(sigma))
    return 0


def cmd_verify(args, net):
    sigma = load_pattern(args.pattern) if args.pattern else None
    if sigma is None:
        raise UsageError("--pattern is required")
    sigma.validate(net)
    post = _post(args)
    post.check_dim(net.output_dim)
    region = _load_region(args.region) if args.region else Region()
    v = dp(net, Query(sigma, post, region), _budget(args), eps=args.eps)
    summary = f"verdict: {v.status.value}"
    if v.counterexample is not None:
        summary += f"; counterexample {_fmt(v.counterexample)} -> {_fmt(v.output)}"
    _emit(args, v.to_dict(args.timings), summary)
    return 0 if v.proved else 1


def cmd_infer_input(args, net):
    post = _post(args)
    post.check_dim(net.output_dim)
    res = infer_input_property(net, _input(args, net), post, _budget(args))
    _emit(args, res.to_dict(),
          f"{'proved' if res.proved else 'not proved'}: {res.pattern} (critical layer {res.critical_layer}, "
          f"{res.dp_calls} dp calls)")
    return 0 if res.proved else 1


def cmd_mine_layer(args, net):
    if not args.data or args.layer is None:
        raise UsageError("--data and --layer are required")
    data = read_csv(args.data, net.input_dim)
    target = _post(args) if args.post else None
    if args.prove:
        mined = mine_and_prove(net, data, args.layer, target, budget=_budget(args), refine=args.refine)
    else:
        mined = mine_layer_patterns(net, data, args.layer, target)
    if args.holdout:
        holdout = read_csv(args.holdout, net.input_dim)
        mined = [validate_empirically(net, mp, holdout, args.tau) for mp in mined]
    elif args.tau is not None and not args.prove:
        log.info("no --holdout given; patterns stay candidates")
    _emit(args, [mp.to_dict() for mp in mined], f"{len(mined)} patterns at layer {args.layer}")
    return 0


def cmd_box(args, net):
    if not args.pattern:
        raise UsageError("--pattern is required")
    sigma = load_pattern(args.pattern)
    sigma.validate(net)
    sup = read_csv(args.support, net.input_dim).inputs if args.support else None
    box = under_approx_box(net, sigma, sup)
    doc = {"box": box.to_json(), "empty": box.is_empty}
    _emit(args, doc, format_box(box))
    return 0


def cmd_minassign(args, net):
    if not args.pattern:
        raise UsageError("--pattern is required")
    sigma = load_pattern(args.pattern)
    sigma.validate(net)
    domain = None
    if args.domain:
        with open(args.domain, encoding="utf-8") as f:
            domain = np.asarray(json.load(f), dtype=float)
    res = minimal_assignment(net, sigma, _input(args, net), _budget(args), domain)
    _emit(args, res.to_dict(), f"fixed {sorted(res.fixed)}; free {res.free}")
    return 0


def _load_rules(path, tau):
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if isinstance(doc, dict) and "rules" in doc:
        return RuleTable.from_dict(doc)
    if isinstance(doc, list):
        return build_rule_table([MinedPattern.from_dict(d) for d in doc], 1.0 if tau is None else tau)
    raise UsageError(f"{path}: expected a rule table or a list of mined patterns")


def cmd_distill(args, net):
    if not args.rules or not args.test:
        raise UsageError("--rules and --test are required")
    table = _load_rules(args.rules, args.tau)
    test = read_csv(args.test, net.input_dim)
    rep = benchmark(net, table, test, args.repeats)
    doc = {"rules": table.to_dict(), "report": rep.to_dict(args.timings)}
    _emit(args, doc, f"{len(table.rules)} rules; shortcut rate {rep.shortcut_rate:.4f}; "
                     f"accuracy {rep.accuracy_full:.4f} -> {rep.accuracy_hybrid:.4f}; "
                     f"mismatches {rep.mismatches}")
    return 0


def cmd_decompose(args, net):
    if not args.A or not args.B or not args.data:
        raise UsageError("--A, --B and --data are required")
    A = _load_region(args.A)
    B = parse_post(args.B)
    B.check_dim(net.output_dim)
    data = read_csv(args.data, net.input_dim)
    layers = [args.layer] if args.layer is not None else None
    budget = _budget(args)
    if args.method == "auto":
        plan = prove_contract(net, A, B, data, layers, budget, args.jobs)
    else:
        mp, _ = select_interpolant(net, data, A, B, layers=layers)
        if args.method == "interpolant":
            plan = prove_via_interpolant(net, A, B, mp, budget)
        else:
            plan = prove_via_prefix_cover(net, A, B, mp, data, budget, args.jobs)
    _emit(args, plan.to_dict(args.timings),
          f"{plan.method}: {plan.status.value} ({len(plan.obligations)} obligations)")
    return 0 if plan.status is PlanStatus.PROVED else 1


def cmd_oracle_check(args, net):
    rep = oracle_check(net, seed=args.seed, trials=args.trials, budget=_budget(args))
    if not args.timings:
        rep.pop("wall_time", None)
    _emit(args, rep, f"agreement {rep['agreement']:.4f} over {rep['trials']} queries")
    return 0 if rep["agreement"] == 1.0 else 1


COMMANDS = {
    "eval": cmd_eval, "signature": cmd_signature, "verify": cmd_verify,
    "infer-input": cmd_infer_input, "mine-layer": cmd_mine_layer, "box": cmd_box,
    "minassign": cmd_minassign, "distill": cmd_distill, "decompose": cmd_decompose,
    "oracle-check": cmd_oracle_check,
}


def _positive_eps(text):
    v = float(text)
    if not 0 < v <= 1e-3:
        raise argparse.ArgumentTypeError("eps must lie in (0, 1e-3]")
    return v


def _unit(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("tau must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--net", help="network file (.json or .nnet)")
    common.add_argument("--normalize", action="store_true", help="fold NNet normalization into the weights")
    common.add_argument("--out", help="write the JSON result here")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    common.add_argument("--max-nodes", type=int, default=200_000)
    common.add_argument("--timeout-secs", type=float, default=None)
    common.add_argument("--eps", type=_positive_eps, default=1e-6)
    common.add_argument("--timings", action="store_true", help="include wall times in JSON output")

    p = argparse.ArgumentParser(prog="relupat", description="Decision-pattern analysis of ReLU networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help):
        return sub.add_parser(name, parents=[common], help=help)

    s = add("eval", "evaluate the network")
    s.add_argument("--x", "--input", dest="x")
    s.add_argument("--data")
    s = add("signature", "activation signature of an input")
    s.add_argument("--x", "--input", dest="x")
    s = add("verify", "check pattern => postcondition")
    s.add_argument("--pattern")
    s.add_argument("--post")
    s.add_argument("--region")
    s = add("infer-input", "relax an input's signature into an input property")
    s.add_argument("--x", "--input", dest="x")
    s.add_argument("--post")
    s.add_argument("--argmin", action="store_true")
    s = add("mine-layer", "mine layer patterns with a decision tree")
    s.add_argument("--data")
    s.add_argument("--layer", type=int)
    s.add_argument("--post", help="boolean target; default is the predicted class")
    s.add_argument("--tau", type=_unit, default=None)
    s.add_argument("--holdout")
    s.add_argument("--prove", action="store_true")
    s.add_argument("--refine", choices=["strengthen", "retrain", "none"], default="strengthen")
    s = add("box", "under-approximation box of a closed pattern")
    s.add_argument("--pattern")
    s.add_argument("--support")
    s = add("minassign", "minimal input assignment forcing a pattern")
    s.add_argument("--pattern")
    s.add_argument("--x", "--input", dest="x")
    s.add_argument("--domain", help="JSON [[lo,hi],...]; defaults to the network's domain")
    s = add("distill", "benchmark short-circuit inference with rules")
    s.add_argument("--rules")
    s.add_argument("--test")
    s.add_argument("--tau", type=_unit, default=None)
    s.add_argument("--repeats", type=int, default=10)
    s = add("decompose", "prove A => B through a layer interpolant")
    s.add_argument("--A")
    s.add_argument("--B")
    s.add_argument("--data")
    s.add_argument("--layer", type=int)
    s.add_argument("--method", choices=["auto", "interpolant", "prefix"], default="auto")
    s = add("oracle-check", "compare the verifier with brute-force oracles")
    s.add_argument("--trials", type=int, default=100)
    return p


def main(argv=None) -> int:
    level = os.environ.get("RELUPAT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    for attr in ("x", "input", "post", "argmin", "region", "holdout", "support", "domain"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        if args.net is None:
            if args.command != "oracle-check":
                raise UsageError("--net is required")
            net = None
        else:
            net = load_network(args.net, normalize=args.normalize)
        return COMMANDS[args.command](args, net)
    except (UsageError, OSError, ValueError, KeyError, TypeError) as e:
        print(f"relupat {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
