"""Truthfulness audits over seeded random instances for every mechanism variant."""

import argparse
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from icim.audit import dominant_strategy_check, nash_check
from icim.fixtures import random_graph
from icim.mechanisms import MechanismConfig


@dataclass
class BatchConfig:
    instances: int = 20
    seed: int = 0
    n_max: int = 6
    max_edges: int = 10
    max_degree: int = 5
    profiles: int = 20
    rules: tuple = ("quadratic", "spherical", "weighted", "reverse_weighted", "linear")


def scoring_rows(cfg: BatchConfig):
    for rule in cfg.rules:
        for payoff in ("auto", "utility"):
            rng = np.random.default_rng(cfg.seed)
            mech = MechanismConfig(model="influencer_influencee", rule=rule)
            fails, violations, worst = 0, 0, 0.0
            for _ in range(cfg.instances):
                g = random_graph(rng, 2, cfg.n_max, max_edges=cfg.max_edges, max_degree=cfg.max_degree)
                res = nash_check(mech, g, g.probs, payoff=payoff)
                fails += not res.passed
                violations += sum(r.bound_violations for r in res.reports)
                worst = min([worst] + [r.gap for r in res.reports])
            yield {"mechanism": mech.tag, "payoff": payoff, "failing_instances": fails,
                   "bound_violations": violations, "min_gap": worst}


def influencer_rows(cfg: BatchConfig):
    for selector in ("exact", "greedy", "high_degree", "random"):
        for h in ("zero", "clarke_pivot"):
            rng = np.random.default_rng(cfg.seed)
            fails = 0
            for i in range(cfg.instances):
                g = random_graph(rng, 2, cfg.n_max, max_edges=cfg.max_edges)
                fails += not dominant_strategy_check(g, g.probs, h, profiles=cfg.profiles, seed=i,
                                                     selector=selector).passed
            yield {"mechanism": f"influencer/groves-{h}", "selector": selector, "failing_instances": fails}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    for name, default in asdict(BatchConfig()).items():
        if isinstance(default, tuple):
            parser.add_argument(f"--{name.replace('_', '-')}", nargs="+", default=list(default))
        else:
            parser.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    parser.add_argument("--json", action="store_true", help="one JSON object per line")
    args = vars(parser.parse_args())
    as_json = args.pop("json")
    cfg = BatchConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in args.items()})

    t0 = time.time()
    for row in list(scoring_rows(cfg)) + list(influencer_rows(cfg)):
        print(json.dumps(row) if as_json else "  ".join(f"{k}={v}" for k, v in row.items()))
    print(f"# {cfg.instances} instances per row, seed {cfg.seed}, {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
