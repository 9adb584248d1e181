"""Smoke test for the qfluid_py extension module."""

import json
import math
import tempfile

import qfluid_py as q


def main():
    ids = [c[0] for c in q.list_checks()]
    assert "bernoulli" in ids and "euler_n_body" in ids, ids

    s = q.AnalyticState("hydrogen_1s")
    assert abs(s.energy + 0.5) < 1e-12
    assert abs(s.rho([1.0, 0.0, 0.0], 0.0) - math.exp(-2.0) / math.pi) < 1e-12
    u = s.velocity("u_minus", [2.0, 0.0, 0.0])
    assert abs(u[0] - 1.0) < 1e-12, u

    g = q.Grid("radial:n=400")
    assert len(g) == 400
    r = q.run_check("bernoulli", s, g)
    assert r["passed"], r

    try:
        q.run_check("bernouli", s, g)
    except q.UnknownCheckError:
        pass
    else:
        raise AssertionError("unknown check accepted")
    try:
        q.AnalyticState("box:k=2").velocity("u_minus", [math.pi / 2])
    except q.QfluidError:
        pass
    else:
        raise AssertionError("nodal point accepted")

    tr = q.integrate_trajectory(s, [1.0, 0.0, 0.0], "u_minus", 0.5, 4)
    assert abs(tr["points"][-1][0] - 3.0) < 1e-10, tr["points"][-1]

    box = q.Grid("cartesian:lower=0,upper=pi,n=256")
    k1, k2 = q.AnalyticState("box:k=1"), q.AnalyticState("box:k=2")
    c = 1 / math.sqrt(2)
    series = q.conservation_experiment([k1, k2], [c, 1j * c], box, [0.0, 0.5, 1.0])
    assert series["E_S_std"] < 1e-8, series
    assert all(abs(e - 1.25) < 1e-8 for e in series["E_S_avg"]), series

    cols = q.field_bundle(k1, box, 0.2)
    assert "rho" in cols and len(cols["rho"]) == 256

    with tempfile.TemporaryDirectory() as d:
        scenario = {"state_spec": "hydrogen_1s", "grid_spec": "radial:n=400",
                    "checks": ["bernoulli", "ke_expectation"], "dump_fields": False}
        m = q.run_scenario(json.dumps(scenario), output_dir=d, jobs=2)
        assert m["passed"] and m["summary"]["checks_passed"] == 2, m

    print("qfluid_py smoke test: ok")


if __name__ == "__main__":
    main()
