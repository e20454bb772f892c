"""Writes a synthetic borough table with the same shape as the London
stop-and-search analysis table: 33 boroughs, outcome `di`, treatment
`treatment` (percent Black population) and 31 confounders.

The treatment has no effect on `di` and every confounder is pure noise, so a
correct analysis should find an effect near zero.
"""

import argparse
import csv

import numpy as np

BOROUGHS = [
    "Barking and Dagenham", "Barnet", "Bexley", "Brent", "Bromley", "Camden",
    "City of London", "Croydon", "Ealing", "Enfield", "Greenwich", "Hackney",
    "Hammersmith and Fulham", "Haringey", "Harrow", "Havering", "Hillingdon",
    "Hounslow", "Islington", "Kensington and Chelsea", "Kingston upon Thames",
    "Lambeth", "Lewisham", "Merton", "Newham", "Redbridge", "Richmond upon Thames",
    "Southwark", "Sutton", "Tower Hamlets", "Waltham Forest", "Wandsworth",
    "Westminster",
]

# (column, min, max, mean, sd) on the scale of the real borough summary.
CONFOUNDERS = [
    ("population_density", 2198, 15703, 7291, 3670.89),
    ("prop_male", 0.47, 0.55, 0.49, 0.01),
    ("prop_migrant", 0.57, 6.42, 1.94, 1.30),
    ("unemployment_count", 2653, 123179, 83149, 24860.92),
    ("prop_unhealthy", 2.72, 5.55, 4.23, 0.63),
    ("prop_disabled", 21.41, 32.38, 26.41, 2.37),
    ("prop_students", 13.90, 28.54, 21.90, 2.53),
    ("prop_households_no_car", 21.53, 77.20, 42.90, 16.71),
    ("prop_households_renting", 29.54, 74.26, 53.37, 13.84),
    ("room_occupation_rate", 9.39, 45.02, 27.40, 7.62),
    ("prop_higher_education", 29.52, 74.18, 47.95, 9.93),
    ("prop_deprived_households", 38.96, 62.41, 51.46, 5.45),
    ("prop_lacking_care_support", 91.30, 93.70, 92.29, 0.62),
    ("prop_low_family_cohesion", 33.01, 54.54, 42.87, 5.61),
    ("prop_unstable_living", 13.93, 43.27, 30.55, 6.34),
    ("prop_greenspace", 0.01, 0.487, 0.17, 0.12),
    ("prop_under_18", 0.28, 0.49, 0.37, 0.05),
    ("area_km2", 2.90, 150.14, 47.68, 32.75),
    ("road_density", 61.23, 258.62, 128.08, 41.78),
    ("manufacturing_density", 3.00, 94.00, 13.82, 16.15),
    ("residential_places", 420, 3816, 1094, 603.35),
    ("residential_density", 6.00, 401.00, 47.88, 73.89),
    ("manufacturing_places", 195, 730, 401, 127.83),
    ("transport_stations", 282, 1821, 957.40, 353.16),
    ("transport_station_density", 10.00, 97.00, 13.82, 16.02),
    ("pubs", 28, 447, 123.10, 82.46),
    ("pub_density", 0.62, 76.10, 6.37, 13.39),
    ("retail_stores", 486, 3536, 1282, 522.86),
    ("retail_density", 8.00, 167.00, 44.94, 42.29),
    ("schools", 8, 171, 102.20, 29.56),
    ("school_density", 0.85, 8.00, 2.98, 1.83),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/synthetic_boroughs.csv")
    parser.add_argument("--seed", type=int, default=20240611)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = len(BOROUGHS)
    treatment = np.clip(rng.normal(12.64, 6.92, n), 1.89, 17.59)
    # Log-normal DI with mean about 4 and sd about 2.5, independent of everything.
    di = np.exp(rng.normal(np.log(4.12) - 0.5 * 0.52**2, 0.52, n))
    columns = {}
    for name, lo, hi, mean, sd in CONFOUNDERS:
        columns[name] = np.clip(rng.normal(mean, sd, n), lo, hi)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["borough", "di", "treatment"] + [c[0] for c in CONFOUNDERS])
        for i, borough in enumerate(BOROUGHS):
            row = [borough, f"{di[i]:.6g}", f"{treatment[i]:.6g}"]
            row += [f"{columns[c[0]][i]:.6g}" for c in CONFOUNDERS]
            writer.writerow(row)


if __name__ == "__main__":
    main()
