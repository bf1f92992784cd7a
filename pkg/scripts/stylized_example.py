"""Walk through the stylized network: who is chosen, who gains by lying, and how payments change that."""

import argparse

from icim.audit import audit_agent
from icim.cascade import sigma_exact, valuations_exact
from icim.fixtures import build_stylized_fixture, stylized_lie
from icim.mechanisms import MechanismConfig, run_mechanism
from icim.selection import select_exact


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agent", default="k", help="label of the agent to audit")
    args = parser.parse_args()

    g, truth = build_stylized_fixture()
    a = g.node(args.agent)
    lie = stylized_lie(g)
    names = lambda nodes: "{" + ", ".join(g.label(v) for v in nodes) + "}"

    honest = select_exact(g, truth.probs, 1)
    lied = select_exact(g, lie, 1)
    print(f"truthful reports select {names(honest.target)} with influence {honest.sigma.mean:g}")
    print(f"with k->m reported as 0, {names(lied.target)} is selected (reported influence {lied.sigma.mean:g}, "
          f"true influence {sigma_exact(g, truth.probs, lied.target).mean:g})")
    print(f"agent {args.agent}: credited {valuations_exact(g, truth.probs, honest.target)[a]:g} when truthful, "
          f"{valuations_exact(g, truth.probs, lied.target)[a]:g} after lying")
    print()
    print(f"{'mechanism':28s} {'truthful':>9s} {'best lie':>9s} {'gap':>7s}")
    for cfg in (MechanismConfig(payments=False), MechanismConfig(h_mode="zero"),
                MechanismConfig(h_mode="clarke_pivot")):
        r = audit_agent(cfg, g, truth, a)
        print(f"{cfg.tag:28s} {r.truthful_utility:9.3f} {r.best_deviation_utility:9.3f} {r.gap:7.3f}")
    print()
    _, ledger = run_mechanism(g, truth.probs, MechanismConfig(), 1)
    print("Groves ledger (truthful):")
    for row in ledger.to_dict(g)["agents"]:
        print(f"  {row['label']:>2s}  v={row['valuation']:g}  p={row['payment']:g}  u={row['utility']:g}")


if __name__ == "__main__":
    main()
