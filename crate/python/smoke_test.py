"""Smoke test for the nncs_reach Python extension.

Build first with `cargo build --release -p nncs-reach-py`, then run
`python3 python/smoke_test.py` from the repository root. The module is
imported normally if installed, otherwise loaded from target/release.
"""

import importlib.util
import json
import math
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_module():
    try:
        import nncs_reach

        return nncs_reach
    except ImportError:
        pass
    path = os.environ.get("NNCS_REACH_LIB", os.path.join(ROOT, "target", "release", "libnncs_reach.so"))
    spec = importlib.util.spec_from_file_location("nncs_reach", path)
    if spec is None or not os.path.exists(path):
        sys.exit(f"extension not found at {path}; run cargo build --release -p nncs-reach-py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    nr = load_module()

    iv = nr.Interval(-0.5, 0.25)
    assert iv.relu().lo == 0.0 and iv.relu().hi == 0.25
    s = iv.sin()
    assert s.lo <= math.sin(-0.5) and math.sin(0.25) <= s.hi
    try:
        nr.Interval(1.0, 2.0).tan()
        raise AssertionError("tan across pi/2 must raise")
    except ArithmeticError:
        pass

    net = nr.Network.from_json(json.dumps({
        "in_dim": 2,
        "layers": [
            {"type": "affine", "w": [[1.0, -1.0], [0.5, 1.0]], "b": [0.0, -0.25]},
            {"type": "relu"},
            {"type": "affine", "w": [[1.0, 1.0]], "b": [0.1]},
        ],
    }))
    assert (net.in_dim, net.out_dim) == (2, 1)
    y = net.eval([0.3, -0.2])[0]
    assert abs(y - (0.5 + 0.0 + 0.1)) < 1e-12
    leaves = net.exact_star(nr.StarSet.from_box([(-1.0, 1.0), (-1.0, 1.0)]))
    exact_lo = min(l.box_bounds()[0][0] for l in leaves)
    exact_hi = max(l.box_bounds()[0][1] for l in leaves)
    (ibp_lo, ibp_hi), = net.ibp([(-1.0, 1.0), (-1.0, 1.0)])
    assert ibp_lo <= exact_lo + 1e-12 and exact_hi <= ibp_hi + 1e-12
    assert any(l.contains_point([y]) for l in leaves)
    assert len(net.hash()) == 64

    p, theta = nr.taxi_step(1.0, 0.0, 0.0)
    assert (p, theta) == (1.0, 0.0)
    d, v = nr.brake_step(10.0, 1.0, 1.0)
    assert d < 10.0 and v < 1.0
    assert nr.taxi_control(0.0, 0.0) == 0.0

    taxi = nr.Scenario.load(os.path.join(ROOT, "scenarios", "taxi.json"))
    assert taxi.engine == "star_composed" and taxi.grid_counts == [32, 32]
    res = taxi.forward()
    assert res.is_safe and res.converged_at is not None
    assert len(res.global_cells) == len(json.loads(res.to_json())["global"])
    base = taxi.variant("baseline", 1).forward()
    assert len(base.global_cells) > len(res.global_cells)
    traj, end = taxi.simulate_run([0.0, 0.0], 10, seed=1)
    assert end == "horizon" and len(traj) == 11

    fine = nr.Scenario.load(os.path.join(ROOT, "scenarios", "brake_fine.json"))
    counts = []
    for m in (1, 2, 3):
        _, safe = fine.variant("ibp_composed", m).backward()
        counts.append(len(safe))
    assert counts == sorted(counts) and counts[-1] > 0
    flagged = fine.simulate(20, 60)
    unsafe, _ = fine.variant("ibp_composed", 2).backward()
    assert set(map(tuple, flagged)) <= set(map(tuple, unsafe))

    print(f"taxi forward: {len(res.global_cells)} cells (baseline {len(base.global_cells)}), converged at {res.converged_at}")
    print(f"brake_fine safe cells for m=1,2,3: {counts}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
