"""Smoke test for the transferability_py extension module.

Build and run:

    cargo build -p transferability-py --release
    cp target/release/libtransferability_py.so python/transferability_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import transferability_py as tr


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    # Total variation.
    approx(tr.tv_binary(0.3, 0.5), 0.2)
    f = tr.BinnedDensity(0.0, 1.0, [0.6, 0.4])
    g = tr.BinnedDensity(0.0, 1.0, [0.4, 0.6])
    approx(tr.tv_binned(f, g), 0.2)

    # Threshold classifiers: raw boundary inclusive, squashed strict.
    h = tr.ThresholdClassifier.raw(0.5)
    assert h.predict([0.5]) == 1
    assert h.predict([0.49]) == -1
    hs = tr.ThresholdClassifier.squashed([1.0], 0.0, 0.5)
    assert hs.predict([0.0]) == -1  # sigmoid(0) = 0.5 is not strictly above

    # Strategic response weight and density.
    approx(tr.strategic_weight(0.4, 0.5, 0.2), 0.5)
    approx(tr.strategic_weight(0.5, 0.5, 0.2), 2.0)
    dens = tr.strategic_induced_density(0.5, 0.2, 1000)
    approx(sum(dens.mass()), 1.0, 1e-9)
    approx(sum(dens.mass()[300:500]), 0.1, 1e-9)  # donor triangle carries B/2

    # Replicator update and closed-form risk extremes.
    approx(tr.replicator_induce(0.5, 0.8, 0.4), 2.0 / 3.0)
    r_lo = tr.replicator_closed_form_risk(-0.5, 0.5)
    assert 0.0 <= r_lo <= 1.0

    # Credit-score update.
    approx(tr.fico_update(0.5, True, True), 0.5075)
    approx(tr.fico_update(0.999, True, True), 1.0)

    # Bound arithmetic.
    approx(tr.strategic_ub(0.15, 0.1), 0.1)
    approx(tr.ts_lb(0.5, 0.7, 0.9, 0.2), 0.03)
    approx(tr.ts_ub(0.5, 0.5, 0.4, 0.9, 0.7, 0.3, 0.2), 0.55)

    # Experiment runner: deterministic CSV given a seed.
    cfg = '{"experiment":"strategic","seed":7}'
    csv1 = tr.run_experiment(cfg)
    csv2 = tr.run_experiment(cfg)
    assert csv1 == csv2
    lines = [l for l in csv1.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("step,diff,max_pair,ub,lb")
    diff = float(lines[1].split(",")[1])
    ub = float(lines[1].split(",")[3])
    assert -1e-9 <= diff <= ub + 1e-9

    # Errors surface as ValueError.
    try:
        tr.strategic_weight(1.5, 0.5, 0.2)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for out-of-domain x")

    print("smoke test passed")


if __name__ == "__main__":
    main()
