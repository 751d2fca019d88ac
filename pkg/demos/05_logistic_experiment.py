"""
Monte Carlo experiment on sparse multinomial logistic regression
================================================================

The harness runs every algorithm over seeds ``base_seed + r`` and writes
one CSV row per iteration. Same config, same bytes. This is a reduced
version of the full experiment (see README for the full-size config).
"""

import csv
import io

import numpy as np

from forward_fw import parse_config, run_experiment

spec = parse_config("""
problem = "logistic"
m = 500
d = 10
classes = 5
algorithm = ["fgfw", "afgfw"]
K = 2000
runs = 5
reference_iterations = 20000
""")
print(spec.describe())

result = run_experiment(spec)
print(result.summary())

rows = list(csv.DictReader(line for line in io.StringIO(result.csv) if not line.startswith("#")))
for k in (10, 100, 1000, 2000):
    vals = {r["algorithm"]: float(r["mean_log10_suboptimality"]) for r in rows if int(r["k"]) == k}
    print(f"k={k:>5}  log10 error  fgfw {vals['fgfw']:+.3f}  afgfw {vals['afgfw']:+.3f}")

again = run_experiment(spec)
print("byte-identical rerun:", again.csv == result.csv)

# one line away from the usual plot:
# plt.plot(k, mean_log10_suboptimality) per algorithm
k = np.array([int(r["k"]) for r in rows if r["algorithm"] == "afgfw"])
print("rows per algorithm:", len(k))
