"""Quick checks of the wickworks extension module.

Build first:  pip install --no-build-isolation -e crates/wickworks-py
Run:          python python/smoke_test.py
"""

import math
from fractions import Fraction

import wickworks as ww


def main():
    h4 = ww.hermite(4)
    assert h4.coefficients == [3, 0, -6, 0, 1], h4.coefficients
    assert h4.derivative() == ww.Polynomial([0, -12, 0, 4])
    assert abs(h4(2.0) - (16 - 24 + 3)) < 1e-12
    assert ww.hermite(2, "1/3").coefficients == [Fraction(-1, 3), 0, 1]
    assert ww.gaussian_expectation(ww.hermite(3) * ww.hermite(3)) == 6
    assert dict(ww.hermite_product(2, 2)) == {0: 2, 2: 4, 4: 1}

    assert ww.count_matchings(8) == 105
    assert ww.isserlis_moment([[1, "1/2"], ["1/2", 1]], [0, 0, 1, 1]) == Fraction(3, 2)
    kappa = [0, 0, 1, 0, 0, 0, 0]
    assert ww.moments_from_cumulants(kappa) == [1, 0, 1, 0, 3, 0, 15]
    assert ww.cumulants_from_moments([1, 0, 1, 0, 3]) == [0, 0, 1, 0, 0]

    x = ww.ChaosElement.var(2, 0)
    y = ww.ChaosElement.var(2, 1)
    xx = x * x
    assert xx.grades() == [0, 2]
    assert xx.expectation() == 1
    assert (x.wick(x)).inner(x.wick(x)) == 2
    assert abs(xx([1.5, 0.0]) - 2.25) < 1e-12
    assert (x * y).terms() == [([1, 1], 1)]

    counts = ww.diagrams(2)
    assert len(counts) == 1 and counts[0][1] == 24
    (g, c), = ww.diagrams(3, connected=True)
    assert c == 1728 and g.is_connected()
    assert ww.Diagram.named("fgii") == ww.Diagram.from_edges(2, [(0, 1), (0, 1)])
    assert ww.Diagram.named("fgiii").degree(3.0) == 0.0
    assert abs(ww.Diagram.named("single_edge").value(1.0, 8) - 1.0) < 1e-12

    series = ww.partition_series(1.0, 8, 3)
    assert series[0] == 1.0 and len(series) == 4
    report = ww.phi4_report(3.0, 4, 2)
    assert report["schema"] == "wickworks.phi4/1" and "counterterms" in report
    ct = ww.counterterms(0.1, 4)
    assert math.isclose(ct["beta"], ct["beta2"] * 0.01)
    t = ww.thresholds(3.5)
    assert (t["n_star_e"], t["n_star_m"]) == (7, 4), t

    est, err = ww.mc_partition_ratio(1, 4, 0.05, 2000, 7)
    assert err > 0 and abs(est - 1) < 0.5
    assert (est, err) == ww.mc_partition_ratio(1, 4, 0.05, 2000, 7)

    f = ww.FieldSample("gff", 1, 8, 11)
    grid = f.grid(17)
    assert len(grid) == 17 and abs(grid[0] - f([0.0])) < 1e-9
    assert ww.c_variance(1, 8) > 0

    rows = ww.run_verify([1, 18])
    assert all(passed for _, _, passed, _ in rows), rows

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
