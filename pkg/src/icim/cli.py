"""Command-line entry point: ``icim <subcommand> [flags]``.

Exit codes: 0 success, 1 internal error, 2 bad input, 3 failed audit verdict
under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import cascade, scoring
from .audit import PAYOFFS, dominant_strategy_check, nash_check
from .fixtures import stylized_network_path
from .graph import EdgeReportProfile, SocialGraph, load_graph, load_reports
from .mechanisms import COMBINE_MODES, H_MODES, MODELS, MechanismConfig, run_mechanism
from .scoring import Rule
from .selection import ALGORITHMS, Evaluator, select

DEFAULT_SEED = 0
THREADS_ENV = "ICIM_THREADS"
STYLIZED = "@stylized"

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_VERDICT = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    graph: str | None = None
    reports: str | None = None
    seeds: str | None = None
    k: int = 1
    algo: str = "exact"
    model: str = "influencer"
    rule: str = "quadratic"
    h: str = "zero"
    combine: str = "mean"
    epsilon: float | None = None
    evaluator: str = "exact"
    samples: int = 10_000
    seed: int = DEFAULT_SEED
    threads: int = 1
    out: str | None = None
    format: str = "json"
    payments: bool = True

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        fields = {f: getattr(ns, f) for f in cls.__dataclass_fields__ if hasattr(ns, f)}
        if "payments" in fields:
            fields["payments"] = fields["payments"] == "on"
        return cls(**fields)

    def make_evaluator(self) -> Evaluator:
        if self.evaluator == "mc":
            return Evaluator.mc(self.samples, self.seed, self.threads)
        return Evaluator()


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _read_graph(path: str | None) -> SocialGraph:
    if path is None:
        raise InputError("--graph is required")
    if path == STYLIZED:
        with stylized_network_path().open("rb") as fh:
            return load_graph(fh)
    if not os.path.exists(path):
        raise InputError(f"graph file not found: {path}")
    return load_graph(path)


def _node(graph: SocialGraph, token: str) -> int:
    token = token.strip()
    if graph.labels and token in graph.labels:
        return graph.node(token)
    try:
        v = int(token)
    except ValueError:
        raise InputError(f"unknown node {token!r}") from None
    if not 0 <= v < graph.n:
        raise InputError(f"node {v} out of range [0, {graph.n})")
    return v


def _seed_nodes(graph: SocialGraph, text: str | None) -> list[int]:
    if not text:
        raise InputError("--seeds is required (comma-separated node ids or labels)")
    return sorted({_node(graph, t) for t in text.split(",") if t.strip()})


def _profile(graph: SocialGraph, path: str | None) -> EdgeReportProfile:
    if path is None:
        return EdgeReportProfile.truthful(graph)
    if not os.path.exists(path):
        raise InputError(f"reports file not found: {path}")
    return load_reports(path, graph)


def _floats(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise InputError(f"{name} must be comma-separated numbers") from None


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _meta(cfg: RunConfig, **extra) -> dict:
    d = {"seed": cfg.seed, "evaluator": cfg.evaluator}
    if cfg.evaluator == "mc":
        d["samples"] = cfg.samples
    d.update(extra)
    return d


def cmd_simulate(cfg: RunConfig) -> tuple[str, int]:
    graph = _read_graph(cfg.graph)
    seeds = _seed_nodes(graph, cfg.seeds)
    trace = cascade.run_cascade(graph, None, seeds, np.random.default_rng(cfg.seed))
    order = sorted(trace.activated_at, key=lambda v: (trace.activated_at[v], v))
    rows = [{"node": v, "time": trace.activated_at[v], "activator": trace.activator[v]} for v in order]
    if graph.labels:
        for r in rows:
            r["label"] = graph.label(r["node"])
    if cfg.format == "csv":
        return _csv(["node", "time", "activator"],
                    [[r["node"], r["time"], "" if r["activator"] is None else r["activator"]] for r in rows]), EXIT_OK
    return _json({"seeds": seeds, "trace": rows, "meta": {"seed": cfg.seed}}), EXIT_OK


def cmd_sigma(cfg: RunConfig) -> tuple[str, int]:
    graph = _read_graph(cfg.graph)
    seeds = _seed_nodes(graph, cfg.seeds)
    est = cfg.make_evaluator().sigma(graph, None, seeds)
    doc = {"seeds": seeds, "sigma": est.mean, "std_error": est.std_error, "samples": est.samples,
           "exact": est.exact, "meta": _meta(cfg)}
    if cfg.format == "csv":
        return _csv(["sigma", "std_error", "samples", "exact"],
                    [[repr(est.mean), repr(est.std_error), est.samples, est.exact]]), EXIT_OK
    return _json(doc), EXIT_OK


def cmd_maximize(cfg: RunConfig) -> tuple[str, int]:
    graph = _read_graph(cfg.graph)
    res = select(graph, None, cfg.k, cfg.algo, cfg.make_evaluator(), cfg.seed)
    doc = res.to_dict(graph)
    doc["meta"] = _meta(cfg, k=cfg.k)
    if cfg.format == "csv":
        return _csv(["algorithm", "target", "sigma", "std_error"],
                    [[res.algorithm, " ".join(map(str, res.target)), doc["sigma"], doc["std_error"]]]), EXIT_OK
    return _json(doc), EXIT_OK


def _mechanism_config(cfg: RunConfig) -> MechanismConfig:
    return MechanismConfig(model=cfg.model, rule=cfg.rule, h_mode=cfg.h, combine_mode=cfg.combine,
                           epsilon=cfg.epsilon, selector=cfg.algo, evaluator=cfg.make_evaluator(),
                           payments=cfg.payments, seed=cfg.seed)


def cmd_pay(cfg: RunConfig) -> tuple[str, int]:
    graph = _read_graph(cfg.graph)
    profile = _profile(graph, cfg.reports)
    mcfg = _mechanism_config(cfg)
    sel, ledger = run_mechanism(graph, profile, mcfg, cfg.k)
    if cfg.format == "csv":
        return ledger.to_csv(), EXIT_OK
    doc = ledger.to_dict(graph)
    doc["meta"] = _meta(cfg, k=cfg.k)
    return _json(doc), EXIT_OK


def cmd_audit(cfg: RunConfig, check: str, profiles: int, payoff: str, strict: bool) -> tuple[str, int]:
    graph = _read_graph(cfg.graph)
    truth = graph.probs
    mcfg = _mechanism_config(cfg)
    if check == "dominant":
        if cfg.model != "influencer":
            raise InputError("--check dominant applies to the influencer model only")
        result = dominant_strategy_check(graph, truth, cfg.h, cfg.k, profiles, cfg.seed, selector=cfg.algo,
                                         payments=cfg.payments, config=mcfg)
    else:
        result = nash_check(mcfg, graph, truth, cfg.k, seed=cfg.seed, payoff=payoff)
    code = EXIT_VERDICT if strict and not result.passed else EXIT_OK
    if cfg.format == "csv":
        rows = [[r.agent, repr(r.truthful_utility), repr(r.best_deviation_utility), repr(r.gap),
                 "pass" if r.passed else "fail"] for r in result.reports]
        return _csv(["agent", "truthful_utility", "best_deviation_utility", "gap", "verdict"], rows), code
    doc = {"mechanism": mcfg.tag, "check": check}
    doc.update(result.to_dict(graph))
    doc["meta"] = _meta(cfg, k=cfg.k)
    return _json(doc), code


def cmd_score(rule: str, z: str, w: str | None, t: int | None, scaled: bool) -> tuple[str, int]:
    zv = _floats(z, "--z")
    if t is not None and t != zv.size:
        raise InputError(f"--t {t} does not match the {zv.size} components of --z")
    zv = scoring.check_distribution(zv, "z")
    S = scoring.score_matrix(rule, zv, scaled)
    doc = {"rule": Rule(rule).value, "t": int(zv.size), "z": zv.tolist(),
           "scores": [None if np.isinf(s) else float(s) for s in S]}
    if w is not None:
        wv = scoring.check_distribution(_floats(w, "--w"), "w")
        if wv.size != zv.size:
            raise InputError("--z and --w must have the same length")
        doc["w"] = wv.tolist()
        doc["expected_score"] = scoring.expected_score(rule, zv, wv, scaled)
        doc["loss"] = scoring.loss(rule, zv, wv, scaled)
    return _json(doc), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icim", description="Influence maximization with truthful reporting.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, seeds=False, selection=False, mechanism=False):
        p.add_argument("--graph", help=f"graph JSON file, or {STYLIZED} for the bundled example network")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master random seed")
        p.add_argument("--threads", type=_positive_int, default=_default_threads(),
                       help=f"worker threads for Monte Carlo (default from ${THREADS_ENV}, else 1)")
        p.add_argument("--eval", dest="evaluator", choices=("exact", "mc"), default="exact")
        p.add_argument("--samples", type=_positive_int, default=10_000)
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if seeds:
            p.add_argument("--seeds", help="comma-separated seed nodes (ids or labels)")
        if selection:
            p.add_argument("--k", type=int, default=1)
            p.add_argument("--algo", choices=ALGORITHMS, default="exact")
        if mechanism:
            p.add_argument("--reports", help="reports JSON (default: everyone reports the graph's probabilities)")
            p.add_argument("--model", choices=MODELS, default="influencer")
            p.add_argument("--rule", choices=[r.value for r in Rule if r is not Rule.LOGARITHMIC],
                           default="quadratic")
            p.add_argument("--h", choices=H_MODES, default="zero")
            p.add_argument("--combine", choices=COMBINE_MODES, default="mean")
            p.add_argument("--epsilon", type=float, help="grid accuracy used in the scoring payment")
            p.add_argument("--payments", choices=("on", "off"), default="on")
        return p

    common(sub.add_parser("simulate", help="run one cascade and print the activation trace"), seeds=True)
    common(sub.add_parser("sigma", help="expected influence of a seed set"), seeds=True)
    common(sub.add_parser("maximize", help="choose a target set"), selection=True)
    common(sub.add_parser("pay", help="select a target set and compute payments"), selection=True, mechanism=True)
    audit = common(sub.add_parser("audit", help="check that truthful reporting is a best response"),
                   selection=True, mechanism=True)
    audit.add_argument("--check", choices=("nash", "dominant"), default="nash")
    audit.add_argument("--profiles", type=_positive_int, default=100, help="opponent profiles for --check dominant")
    audit.add_argument("--payoff", choices=PAYOFFS, default="auto")
    audit.add_argument("--strict", action="store_true", help="exit with status 3 if the verdict is fail")

    score = sub.add_parser("score", help="evaluate a scoring rule")
    score.add_argument("--rule", choices=[r.value for r in Rule], required=True)
    score.add_argument("--z", required=True, help="reported distribution, comma-separated")
    score.add_argument("--w", help="true distribution, comma-separated")
    score.add_argument("--t", type=int)
    score.add_argument("--scaled", action="store_true", help="divide the reverse weighted rule by t")
    score.add_argument("--out")
    return parser


def _dispatch(ns: argparse.Namespace) -> tuple[str, int]:
    if ns.subcommand == "score":
        return cmd_score(ns.rule, ns.z, ns.w, ns.t, ns.scaled)
    cfg = RunConfig.from_args(ns)
    if ns.subcommand == "audit":
        return cmd_audit(cfg, ns.check, ns.profiles, ns.payoff, ns.strict)
    return {"simulate": cmd_simulate, "sigma": cmd_sigma, "maximize": cmd_maximize, "pay": cmd_pay}[ns.subcommand](cfg)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        text, code = _dispatch(ns)
    # library input errors (malformed files, off-grid values, guards) are ValueErrors
    except (InputError, ValueError, OSError) as exc:
        print(f"icim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"icim: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if getattr(ns, "out", None):
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
