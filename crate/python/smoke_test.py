"""Smoke test for the Python bindings.

Build and install first, e.g.
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/*.whl
then run
    python python/smoke_test.py
"""

import math
import sys

import bubble_cluster_py as bc


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    disk, _ = bc.solve([math.pi], bc.Cluster.disk(1.0, 64))
    results.append(check("disk perimeter", abs(disk.perimeter() - 2 * math.pi) < 0.005 * 2 * math.pi))

    db, log = bc.solve([math.pi, math.pi], bc.Cluster.double_bubble(1.0, 1.0, 64))
    areas = db.areas()
    results.append(check("double bubble areas", len(areas) == 2 and all(abs(a - math.pi) < 1e-8 for a in areas), str(areas)))
    report = db.plateau_check()
    results.append(check("plateau laws", report["passes"], f"{report['max_angle_deviation']:.2e} deg"))
    results.append(check("log header", log.splitlines()[0].startswith("iter,outer,energy")))
    results.append(check("no violations", db.validate() == []))

    back = bc.Cluster.from_json(db.to_json())
    results.append(check("json round trip", back.to_json() == db.to_json()))

    y2 = bc.Cluster.steiner_y2(1.0, 64, 0.0)
    results.append(check("Y2 density", abs(y2.density_ratio((0.0, 0.0), 0.05) - 3.0) < 0.05))

    src = [(x / 100.0, 0.0) for x in range(101)]
    tgt = [(x, y - 0.01) for x, y in src]
    d = bc.diffeo(src, tgt, ((0.0, -0.01), (1.0, -0.01)))
    results.append(check("normal offset diffeo", abs(d["c0"] - 0.01) < 1e-10 and d["tangential_c1"] < 1e-12))

    seq = [bc.solve([math.pi, math.pi], bc.Cluster.double_bubble(1.0, 1.0, 64), "quadratic", [1.0], 0.1 / 2**k)[0]
           for k in range(2)]
    csv = bc.convergence_report(db, seq, 0.2)
    rows = [r.split(",") for r in csv.strip().splitlines()[1:]]
    results.append(check("convergence rows", len(rows) == 2 and all(r[1] == "ok" for r in rows)))
    results.append(check("calibrated constant", bc.CALIBRATED_C0 > 0))

    if not all(results):
        sys.exit(1)


if __name__ == "__main__":
    main()
