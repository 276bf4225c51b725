"""Smoke test for the pybetaldp extension.

Build with `cargo build --release -p betaldp-python`, then run from the repo
root; the script finds target/release/libpybetaldp.so on its own.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys
import tempfile


def load():
    try:
        import pybetaldp
        return pybetaldp
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3]
    for name in ("libpybetaldp.so", "libpybetaldp.dylib", "pybetaldp.dll"):
        for profile in ("release", "debug"):
            path = root / "target" / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("pybetaldp", str(path))
                spec = importlib.util.spec_from_loader("pybetaldp", loader)
                mod = importlib.util.module_from_spec(spec)
                loader.exec_module(mod)
                return mod
    sys.exit("pybetaldp not found; build it first")


def main():
    m = load()
    disc = m.Field(2.0, json.dumps({"kind": "radial_polynomial", "coeffs": [0, 0, 1]}))
    grid = m.Grid(json.dumps({"kind": "disc", "radius": 2.0}), 40)
    sol = m.solve_equilibrium(grid, disc)
    print(sol)
    assert sol.converged and sol.kkt_residual < 1e-3
    assert abs(sol.rho - (0.5 + 0.5 * math.log(2))) < 0.02
    assert abs(sol.support_radius() - 2 ** -0.5) < 3 * grid.cell_size
    assert abs(sum(sol.weights) - 1.0) < 1e-12
    annulus = json.dumps({"kind": "annulus", "inner": 0.95, "outer": 1.05})
    print("inf_W J =", sol.predicted_rate(annulus))

    gauss = m.Field(2.0, json.dumps({"kind": "real_polynomial", "coeffs": [0, 0, 0.5]}))
    line = m.Grid(json.dumps({"kind": "intervals", "intervals": [[-3, 3]]}), 600)
    q = m.small_n_quadrature(line, gauss, 2)
    assert abs(q["log_z"] - math.log(math.pi / 4)) < 1e-6, q

    run = m.sample(line, gauss, 2, 6000, [1, 2], window=json.dumps({"kind": "intervals", "intervals": [[1, 3]]}), burn_in=1000, conditional_every=5)
    print("psi (n=2):", run["psi_conditional"]["psi_hat"], "exact:", m.small_n_quadrature(line, gauss, 2, json.dumps({"kind": "intervals", "intervals": [[1, 3]]}))["psi"])
    assert all(0.05 < s["acceptance_rate"] < 0.95 for s in run["stats"])

    bm = m.bernstein_markov(m.Grid(json.dumps({"kind": "intervals", "intervals": [[-1, 1]]}), 2000), gauss, [10, 20, 30])
    assert bm["decreasing"], bm

    config = {
        "scenario": "equilibrium",
        "field": {"beta": 2, "q": {"kind": "radial_polynomial", "coeffs": [0, 0, 1]}},
        "domain": {"kind": "disc", "radius": 2},
        "grid": {"resolution": 30},
    }
    with tempfile.TemporaryDirectory() as out:
        verdicts = m.run_experiment(json.dumps(config), out)
        assert all(v["pass"] for v in verdicts["verdicts"]), verdicts
    try:
        m.run_experiment(json.dumps(dict(config, colour=1)), ".")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")
    print("ok")


if __name__ == "__main__":
    main()
