"""Smallest expected-score loss over all grid report pairs, next to the claimed lower bounds."""

import argparse

from icim.scoring import grid_min_loss, is_proper_on_grid

RULES = ("quadratic", "spherical", "weighted", "reverse_weighted")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t", type=int, nargs="+", default=[2, 3])
    parser.add_argument("--epsilon", type=float, nargs="+", default=[0.1, 0.05])
    args = parser.parse_args()

    print(f"{'rule':17s} {'t':>2s} {'eps':>5s} {'min loss':>12s} {'/eps^2':>7s} {'claimed':>8s}  argmin (w -> z)")
    for rule in RULES:
        for t in args.t:
            for eps in args.epsilon:
                r = grid_min_loss(rule, t, eps)
                assert is_proper_on_grid(rule, t, eps).proper
                claimed = "-" if r.stated_bound is None else f"{r.stated_bound / eps**2:g}"
                print(f"{rule:17s} {t:2d} {eps:5.2f} {r.min_loss:12.6g} {r.min_loss / eps**2:7.3f} {claimed:>8s}"
                      f"  {r.w} -> {r.z}")
    ctrl = is_proper_on_grid("linear", 2, 0.1)
    print(f"\nlinear control: proper={ctrl.proper}, witness w={ctrl.witness[0]} z={ctrl.witness[1]} "
          f"loss={ctrl.witness[2]:g}")


if __name__ == "__main__":
    main()
