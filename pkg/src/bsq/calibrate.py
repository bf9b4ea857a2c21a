"""Regenerate ``calibration.json``: empirical constants measured on fixed reference runs.

    python3 -m bsq.calibrate [output-path]

The constants are observations, not theory: the Gronwall constant of the
reference random-spectrum run and the maximum probe ratios over the default
ensemble. Acceptance checks compare new runs against them.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from bsq import analysis
from bsq.dynamics import StepperConfig, SystemSpec, make_initial, run
from bsq.spectral import GridSpec

REFERENCE_RUN = {"dim": 2, "n": 64, "R": 21, "nu": 0.01, "s": 3.0, "t_end": 5.0,
                 "ic": "random_spectrum", "seed": 0, "decay_p": 4.0}


def reference_trajectory():
    ref = REFERENCE_RUN
    grid = GridSpec(ref["dim"], ref["n"])
    spec = SystemSpec(nu=ref["nu"], R=ref["R"], s=ref["s"])
    init = make_initial(ref["ic"], grid, ref["R"], seed=ref["seed"], decay_p=ref["decay_p"])
    return run(init, spec, StepperConfig(), ref["t_end"], every=1)


def compute() -> dict:
    mon = analysis.blowup_monitor(reference_trajectory().records)
    out = {"reference_run": REFERENCE_RUN, "gronwall_C_emp": mon.C_required}
    ens = analysis.Ensemble()
    for kind in analysis.PROBE_KINDS:
        rep = analysis.inequality_probe(kind, ens)
        out[f"{kind}_max"] = {str(n): v["max"] for n, v in rep.summary.items()}
    inv = analysis.invariant_ratios(ens)
    out["cz_max"] = {str(n): v["cz_max"] for n, v in inv.items()}
    out["logsob_max"] = {str(n): v["logsob_max"] for n, v in inv.items()}
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    target = Path(argv[0]) if argv else Path(__file__).with_name("calibration.json")
    data = compute()
    target.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
