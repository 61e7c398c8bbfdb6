#!/usr/bin/env python3
"""Generate a synthetic sample in the shape of the Vehicle Claims dataset.

The public dataset is not redistributed here. This script writes a
deterministic stand-in with the same 17 feature columns plus a 0/1 Label
(1 = anomalous claim) so the bundled config and tests run offline.

    python3 data/make_vehicle_claims.py data/vehicle_claims_sample.csv 1200
"""

import csv
import random
import sys

MAKES = {
    "Ford": ["Focus", "Fiesta", "Kuga"],
    "Volkswagen": ["Golf", "Polo", "Passat"],
    "BMW": ["3 Series", "X1", "1 Series"],
    "Toyota": ["Yaris", "Corolla", "RAV4"],
    "Renault": ["Clio", "Megane", "Captur"],
}
COLORS = ["black", "white", "silver", "red", "blue", "grey"]
BODIES = ["hatchback", "saloon", "estate", "SUV"]
GEARBOX = ["manual", "automatic"]
FUEL = ["petrol", "diesel", "hybrid"]
ISSUES = {
    "engine": ["engine failure", "oil leak", "overheating"],
    "electrical": ["battery drain", "wiring fault", "sensor error"],
    "body": ["scratch", "dent", "broken mirror"],
    "transmission": ["clutch wear", "gearbox noise"],
}
ANOMALOUS_DETAILS = {"engine failure", "wiring fault", "gearbox noise"}

HEADER = [
    "make", "model", "color", "registration year", "body type", "engine size",
    "gearbox", "fuel type", "mileage", "price", "seats", "doors", "issue type",
    "issue detail", "repair complexity", "repair duration", "repair cost", "Label",
]


def row(rng):
    make = rng.choice(sorted(MAKES))
    issue_type = rng.choice(sorted(ISSUES))
    detail = rng.choice(ISSUES[issue_type])
    complexity = rng.randint(1, 4)
    duration = complexity * rng.randint(1, 3)
    cost = round(complexity * rng.uniform(150, 900), 2)
    anomalous = (detail in ANOMALOUS_DETAILS and rng.random() < 0.8) or rng.random() < 0.08
    if anomalous:
        cost = round(cost * rng.uniform(1.5, 3.0), 2)
    year = rng.randint(2008, 2021)
    mileage = rng.randint(2000, 180000)
    return [
        make,
        rng.choice(MAKES[make]),
        rng.choice(COLORS),
        year,
        rng.choice(BODIES),
        rng.choice([1.0, 1.2, 1.4, 1.6, 2.0, 2.5]),
        rng.choice(GEARBOX),
        rng.choice(FUEL),
        mileage if rng.random() > 0.02 else "",
        rng.randint(3000, 40000),
        rng.choice([2, 4, 5, 7]),
        rng.choice([3, 5]),
        issue_type,
        detail,
        complexity,
        duration,
        cost,
        1 if anomalous else 0,
    ]


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "vehicle_claims_sample.csv"
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 1200
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 20231101
    rng = random.Random(seed)
    with open(out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        for _ in range(n):
            w.writerow(row(rng))


if __name__ == "__main__":
    main()
