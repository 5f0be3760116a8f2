"""Smoke test for the shadowlab_py extension module."""

import math

import shadowlab_py as sl


def main():
    square = sl.LpInstance([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 1, 1], [1, 0.5])
    assert (square.d, square.n) == (2, 4)
    assert sl.LpInstance.from_json(square.to_json()).b == square.b

    want = sl.oracle_solve(square)
    assert want.status == "optimal" and abs(want.value - 1.5) < 1e-12
    for phase1 in ("symrv", "dd"):
        got = sl.two_phase_solve(square, phase1=phase1, seed=1)
        assert got.status == "optimal", got
        assert abs(got.value - want.value) < 1e-9

    for seed in range(20):
        inst = sl.sample_instance(3, 8, 0.2, dist="laplace", seed=seed)
        want = sl.oracle_solve(inst)
        try:
            got = sl.two_phase_solve(inst, sigma=0.2, seed=seed)
        except sl.ShadowlabError:
            continue
        assert got.status == want.status, (got, want)
        if want.value is not None:
            assert abs(got.value - want.value) <= 1e-7 * max(1.0, abs(want.value))

    diamond = sl.polar_section([[1, 0], [0, 1], [-1, 0], [0, -1]])
    assert len(diamond["edges"]) == 4
    assert abs(diamond["perimeter"] - 4 * math.sqrt(2)) < 1e-9

    cube = sl.LpInstance([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]], [1] * 6, [1, 1, 1])
    assert sl.shadow_vertices(cube) == 4

    cert = sl.certificate("laplace", 3, 20, 0.1)
    bound = sl.parametrized_edge_bound(3, cert["L"], cert["tau"], cert["R_nd"], cert["r_n"])
    assert abs(bound - sl.edge_bound("laplace", 3, 20, 0.1)) < 1e-6 * bound
    assert sl.sigma_bar(2, 8) > 0

    out = sl.run_sweep(d=[3], n=[8], sigma=[0.1, 0.3], trials=3, seed=7)
    assert len(out["records"]) == 6
    again = sl.run_sweep(d=[3], n=[8], sigma=[0.1, 0.3], trials=3, seed=7)
    assert sl.records_to_csv(out["records"]) == sl.records_to_csv(again["records"])
    assert sl.records_to_csv([]).startswith("d,n,sigma,trial,seed,status")

    rows = sl.verify_tails("gaussian", 4, 20, 0.5, samples=10_000)
    assert rows and all(r["pass"] for r in rows)

    try:
        sl.run_sweep(trials=0)
    except ValueError:
        pass
    else:
        raise AssertionError("trials=0 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
