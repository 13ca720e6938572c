"""Smoke test for the momentum_qng_py extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`,
then run `python crates/python/python/smoke_test.py`.
"""

import math
import tempfile
from pathlib import Path

import momentum_qng_py as mq


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    rho, eta = mq.langevin_to_hyperparams(*mq.hyperparams_to_langevin(0.9, 0.1))
    assert close(rho, 0.9) and close(eta, 0.1)
    gamma, dt = mq.hyperparams_to_langevin(0.9, 0.1)
    assert close(gamma, dt, 1e-12) and close(dt, 0.32444284226152509, 1e-15)

    assert mq.natural_direction([[0.25]], [1.0], 0.0) == [4.0]
    assert mq.check_convergence([1.0, 0.9995], 3, 1)
    assert not mq.check_convergence([1.0, 0.98], 3, 1)
    assert mq.ccdf([1.0, 2.0, 3.0]) == [(1.0, 1.0), (2.0, 2 / 3), (3.0, 1 / 3)]

    p = mq.Problem.portfolio(4, seed=3, layers=2)
    assert p.kind == "portfolio" and p.n_params == 12
    theta = [0.1 * i for i in range(p.n_params)]
    state = p.state(theta)
    assert close(sum(abs(a) ** 2 for a in state), 1.0)
    assert min(p.diagonal()) == p.ground_energy

    # Exact gradient against central differences.
    grad = p.gradient(theta)
    h = 1e-6
    for i in range(p.n_params):
        up = list(theta)
        dn = list(theta)
        up[i] += h
        dn[i] -= h
        fd = (p.energy(up) - p.energy(dn)) / (2 * h)
        assert abs(fd - grad[i]) < 1e-6, (i, fd, grad[i])

    g = p.metric(theta)
    assert all(close(g[i][j], g[j][i]) for i in range(len(g)) for j in range(len(g)))

    # rho = 0 Momentum-QNG takes exactly the QNG step.
    a = mq.Optimizer("qng", p.n_params)
    b = mq.Optimizer("momentum-qng", p.n_params, rho=0.0)
    assert a.step(grad, g) == b.step(grad, g)

    # A few descent steps by hand.
    opt = mq.Optimizer("momentum-qng", p.n_params, eta=0.05)
    e0 = p.energy(theta)
    for _ in range(5):
        delta = opt.step(p.gradient(theta), p.metric(theta))
        theta = [t + d for t, d in zip(theta, delta)]
    assert opt.steps == 5 and math.isfinite(p.energy(theta))
    print(f"hand-rolled momentum-qng: {e0:.4f} -> {p.energy(theta):.4f}")

    mvc = mq.Problem.mvc()
    r = mq.run_trial(mvc, "qng", eta=0.1, seed=1, max_steps=50, digits=2, patience=3)
    assert 0.0 <= r["quality"] <= 1.0 and r["delta_e"] >= -1e-9
    assert len(r["energy_trace"]) == r["steps_taken"] + 1 or r["diverged"]

    with tempfile.TemporaryDirectory() as tmp:
        rows = mq.run_sweep(mvc, [0.05, 0.1], trials=3, max_steps=20, digits=2,
                            patience=3, out_dir=tmp)
        assert len(rows) == 2 * len(mq.OPTIMIZERS)
        assert (Path(tmp) / "summary.csv").read_text().count("\n") == len(rows) + 1
        assert (Path(tmp) / "ccdf_quality_momentum-qng.csv").exists()

    try:
        mq.Optimizer("sgd", 3)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown optimizer accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
