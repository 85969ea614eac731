#!/usr/bin/env python3
"""Pre-registered oracle run backing the acceptance thresholds.

Runs the fixed decay and ball-mass experiments once, deterministically,
and freezes the measured numbers into tests/data/prerun_oracle.json.
The acceptance suite recomputes the same quantities, checks they match
this file, and then applies the recorded thresholds. Regenerate only
with a deliberate decision to re-register:

    python3 tools/prerun_oracle.py
"""

import json
import math
import os
import sys
from fractions import Fraction

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from cfraj import __version__
from cfraj.blocks import build_nu, frostman_scan, median_log_continuant
from cfraj.fourier import decay_scan, decay_slope

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "data",
                   "prerun_oracle.json")

XI_POWS = list(range(4, 19))
FROSTMAN_POWS = list(range(-2, -14, -1))
SCAN_DEPTH = 2
FROSTMAN_DEPTH = 2


def reference_measure():
    sigma, anchor = median_log_continuant(100, 3, weighting="lebesgue")
    nu = build_nu(100, 3, None, Fraction(1, 4), sigma_anchor=anchor)
    return nu, sigma


def main() -> int:
    nu, sigma = reference_measure()
    table = decay_scan(nu, [2**k for k in XI_POWS], "cylinder", SCAN_DEPTH)
    slope = decay_slope(table)
    rows = [
        {
            "xi_pow": k,
            "abs": abs(row.full.value),
            "err": row.full.err_bound,
        }
        for k, row in zip(XI_POWS, table.rows)
    ]
    scan = frostman_scan(nu, FROSTMAN_DEPTH, [2.0**k for k in FROSTMAN_POWS])
    doc = {
        "version": __version__,
        "generated": "2026-08-23",
        "reference_measure": {
            "sigma": sigma,
            "support_size": len(nu.support),
            "beta_achieved": nu.beta_achieved,
        },
        "decay_experiment": {
            "scan": {"method": "cylinder", "depth": SCAN_DEPTH,
                     "xi_pows": XI_POWS},
            "rows": rows,
            "slope": slope,
            "slope_threshold": -0.05,
            "frostman": {"depth": FROSTMAN_DEPTH,
                         "width_pows": FROSTMAN_POWS,
                         "omega": list(scan.omega),
                         "fitted": scan.fitted_exponent},
            "frostman_threshold": 0.8,
        },
    }
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"support {len(nu.support)}  beta {nu.beta_achieved:.4f}  "
          f"slope {slope:.4f}  frostman {scan.fitted_exponent:.4f}")
    print(f"wrote {os.path.normpath(OUT)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
