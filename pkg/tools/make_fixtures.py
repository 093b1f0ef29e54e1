"""Regenerate the packaged fixture networks.

The 69-bus feeder reproduces the radial layout used in the distribution
literature (main feeder 1-27 plus seven laterals). Line admittances are
synthetic draws with a fixed seed: they are NOT the published feeder data.
"""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "gridsense" / "data"


def pair(z):
    return [round(float(z.real), 12), round(float(z.imag), 12)]


def six_bus():
    # (id, from, to, series impedance, half line-charging susceptance)
    spec = [
        (1, 1, 2, 0.010 + 0.030j, 0.0020),
        (2, 2, 3, 0.020 + 0.040j, 0.0015),
        (3, 2, 4, 0.015 + 0.035j, 0.0010),
        (4, 4, 5, 0.025 + 0.050j, 0.0012),
        (5, 4, 6, 0.030 + 0.060j, 0.0008),
    ]
    lines = [
        {"id": i, "from": f, "to": t, "y_series": pair(1 / z),
         "y_shunt_from": pair(1j * b), "y_shunt_to": pair(1j * b)}
        for i, f, t, z, b in spec
    ]
    meters = [
        {"line": 1, "direction": "from_to"},
        {"line": 2, "direction": "from_to"},
        {"line": 3, "direction": "from_to"},
        {"line": 4, "direction": "to_from"},
        {"line": 5, "direction": "from_to"},
    ]
    return {
        "name": "six-bus illustration",
        "buses": [{"id": i, "phases": 1} for i in range(1, 7)],
        "lines": lines,
        "current_meters": meters,
        "pmu_buses": [1, 5, 6],
    }


LATERALS = [
    # (attachment bus, buses of the lateral in order)
    (3, list(range(28, 36))),
    (3, list(range(36, 47))),
    (4, list(range(47, 51))),
    (8, [51, 52]),
    (9, list(range(53, 66))),
    (11, [66, 67]),
    (12, [68, 69]),
]

GROUPS = {
    "g3": 0, "g36": 1, "g4": 2, "g8": 3, "g9": 4, "g11": 5, "g12": 6,
}

LADDER = {
    2: ["g12"],
    4: ["g12", "g11"],
    17: ["g12", "g11", "g9"],
    19: ["g12", "g11", "g8", "g9"],
    23: ["g12", "g11", "g8", "g4", "g9"],
    27: ["g12", "g11", "g8", "g3", "g9"],
    34: ["g12", "g11", "g8", "g4", "g36", "g9"],
    42: ["g12", "g11", "g8", "g4", "g3", "g36", "g9"],
}


def feeder69(seed=20171):
    rng = np.random.default_rng(seed)
    edges = [(k, k + 1) for k in range(1, 27)]
    lateral_edges = []
    for root, chain in LATERALS:
        prev = root
        these = []
        for b in chain:
            these.append((prev, b))
            prev = b
        lateral_edges.append(these)
        edges.extend(these)
    assert len(edges) == 68

    lines = []
    for idx, (f, t) in enumerate(edges, start=1):
        r = rng.uniform(0.004, 0.04)
        x = r * rng.uniform(0.6, 1.6)
        b = rng.uniform(1e-4, 5e-4)
        lines.append({"id": idx, "from": f, "to": t, "y_series": pair(1 / (r + 1j * x)),
                      "y_shunt_from": pair(1j * b), "y_shunt_to": pair(1j * b)})
    meters = [{"serial": i, "line": i, "direction": "from_to"} for i in range(1, 69)]

    names = {v: k for k, v in GROUPS.items()}
    side = []
    first = 27
    for gi, ((root, chain), these) in enumerate(zip(LATERALS, lateral_edges)):
        serials = list(range(first, first + len(these)))
        first += len(these)
        side.append({"name": names[gi], "buses": [root] + chain, "meters": serials})
    return {
        "name": "69-bus radial feeder (synthetic admittances)",
        "buses": [{"id": i, "phases": 1} for i in range(1, 70)],
        "lines": lines,
        "current_meters": meters,
        "pmu_buses": [1, 27, 35, 46, 50, 52, 67, 69],
        "main_chain": list(range(1, 28)),
        "side_chains": side,
        "k_ladder": {str(k): v for k, v in LADDER.items()},
    }


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in [("six_bus", six_bus()), ("feeder69", feeder69())]:
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print("wrote", OUT / f"{name}.json")
