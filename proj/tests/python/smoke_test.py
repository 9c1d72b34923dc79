"""End-to-end smoke checks of the python bindings (run via ctest)."""

import json
import math
import os
import sys
import tempfile

import _compofun as cf


def test_lorenz_roundtrip():
    f = cf.make_lorenz96(4, 8.0, 1.0)
    assert f.d == 4 and f.q == 4
    ok, issues = cf.validate(f, samples=256)
    assert ok, issues

    g = cf.Function.from_json(f.to_json())
    x = [0.3, -0.7, 0.1, 0.9]
    assert g(x) == f(x)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "l96.json")
        cf.save(f, path)
        h = cf.load(path)
        assert h(x) == f(x)


def test_features_exact():
    f = cf.make_lorenz96(8, 8.0, 1.0)
    ft = cf.features(f)
    assert (ft["r_max"], ft["Lambda"], ft["L_max"], ft["n_general"]) == (1.0, 28.0, 1.0, 8)


def test_fit_assemble_bound():
    f = cf.make_lorenz96(4, 8.0, 1.0)
    fnn, errs = cf.fit_assemble(f, width=32)
    assert cf.neuron_count(fnn) == 4 * 32
    bound = cf.propagate_errors(f, errs)
    worst = 0.0
    for t in range(200):
        x = [math.sin(1.7 * t + 0.3 * k) for k in range(4)]
        ya, yb = f.evaluate_unchecked(x), fnn.evaluate_unchecked(x)
        worst = max(worst, max(abs(a - b) for a, b in zip(ya, yb)))
    assert worst <= bound, (worst, bound)

    merged = cf.merge_linear_nodes(fnn)
    assert cf.is_neural_network(merged)
    x = [0.2, -0.4, 0.6, -0.1]
    assert all(abs(a - b) < 1e-12 for a, b in zip(merged(x), fnn(x)))


def test_euler_flow_closed_form():
    decay = cf.Function.from_json(json.dumps({
        "d": 1, "q": 1, "R": 1.0,
        "nodes": [
            {"id": "x", "kind": "input", "primitive": "", "params": [],
             "layer": 0, "inputs": [], "R_ij": 1.0, "m_ij": 2},
            {"id": "o", "kind": "linear", "primitive": "affine", "params": [0.0, -1.0],
             "layer": 1, "inputs": [{"src": "x", "slot": 0}], "R_ij": 1.01, "m_ij": 2},
        ]}))
    flow = cf.euler_flow(decay, 1.0, 10)
    assert abs(flow.evaluate_unchecked([0.5])[0] - 0.9 ** 10 * 0.5) <= 1e-12


def test_schema_errors():
    try:
        cf.Function.from_json('{"d": 1}')
    except cf.SchemaError:
        pass
    else:
        raise AssertionError("expected SchemaError")


def test_experiment_runner():
    code, csv, summary = cf.run_experiment(json.dumps(
        {"experiment": "audit", "n_dags": 5, "points": 50, "prop3_points": 200}))
    assert code == 0, summary
    doc = json.loads(summary)
    assert all(a["pass"] for a in doc["assertions"])
    assert csv.splitlines()[0] == "dag,check,measured,bound,pass"


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
