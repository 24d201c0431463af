"""Regenerate ``loss_oracle.json`` from :mod:`mp_reference`.

Run from the repository root::

    python tests/oracles/build_oracles.py
"""

import json
import sys
from pathlib import Path

import mpmath as mp

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))
import mp_reference  # noqa: E402

KINDS = [
    "BCE", "DICE_SORENSEN", "DICE_SQUARED", "BCEDICE", "FOCAL", "ASYM_FOCAL",
    "ASYM_LARGE_MARGIN", "TVERSKY", "FOCAL_TVERSKY", "ASYM_FOCAL_TVERSKY",
    "SYM_FOCAL_MARGIN", "ASYM_FOCAL_MARGIN", "HYBRID_FOCAL", "SYM_UNIFIED_FOCAL",
    "ASYM_UNIFIED_FOCAL", "SYM_HYBRID_FOCAL_MARGIN", "OURS",
]

INSTANCES = {
    "grid3x3": {
        "shape": [3, 3],
        "z": [-2.5, 1.25, -0.75, 3.0, -3.5, 0.5, -1.0, 2.0, -0.25],
        "t": [0, 1, 0, 1, 0, 0, 0, 1, 0],
    },
    "empty2x3": {"shape": [2, 3], "z": [-1.5, 0.25, -3.0, 1.0, -0.5, -2.0], "t": [0, 0, 0, 0, 0, 0]},
    "single": {"shape": [1, 1], "z": [0.0], "t": [1]},
}

PARAMS = {
    "default": {"gamma_hat": 2.0, "delta": 0.7, "gamma_tv": 0.75, "margin": 0.0, "lambda": None,
                "smooth": 1.0, "eps": 1e-7},
    "custom": {"gamma_hat": 1.5, "delta": 0.6, "gamma_tv": 0.5, "margin": 1.0, "lambda": 0.3,
               "smooth": 1.0, "eps": 1e-7},
}


def build():
    cases = []
    for inst_name, inst in INSTANCES.items():
        z = [mp.mpf(v) for v in inst["z"]]
        t = inst["t"]
        for p_name, p in PARAMS.items():
            for kind in KINDS:
                cases.append({
                    "instance": inst_name,
                    "params": p_name,
                    "kind": kind,
                    "value": mp.nstr(mp_reference.loss(kind, z, t, p), 25),
                    "grad": [mp.nstr(g, 25) for g in mp_reference.gradient(kind, z, t, p)],
                })
    return {"instances": INSTANCES, "params": PARAMS, "cases": cases}


if __name__ == "__main__":
    out = HERE / "loss_oracle.json"
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")
