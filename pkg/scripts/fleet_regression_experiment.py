"""Cross-city regressions on synthetic fleets of increasing size.

Regresses each city's fitted mean interval on span/attack-count and
attack count on population, for several fleet sizes and seeds.
"""

import argparse

from eventpulse.distfit import interval_attack_regression, population_correlation
from eventpulse.synth import fleet_specs, gen_fleet, lattice_cities


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 40, 80])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    print("cities seed  interval_adjR2  slope   population_adjR2")
    for k in args.sizes:
        for seed in range(args.seeds):
            cities = lattice_cities(k, seed=seed)
            fleet = gen_fleet(fleet_specs(k, seed=seed), cities)
            reg = interval_attack_regression(fleet)
            pop = population_correlation(fleet)
            print(f"{k:6d} {seed:4d}  {reg.adj_r2:14.4f}  {reg.slope:6.3f}  {pop.adj_r2:16.4f}")


if __name__ == "__main__":
    main()
