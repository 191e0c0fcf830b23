"""Smoke test for the qsl_ibie_py extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/qsl_ibie_py-*.whl
    python crates/py/python/smoke_test.py
"""

import math

import qsl_ibie_py as q


def main():
    r = q.lower_bound_from_action(math.pi / 3)
    assert abs(r.lower_bound - 0.5) < 1e-15 and not r.trivial

    p = q.StirapParams(0.5, epsilon=0.1, t_final=10.0)
    r = q.stirap_bound(p, certify=True)
    assert abs(r.action - 0.5 * 0.5 * 10.0 * math.sin(0.2)) < 1e-10
    assert r.true_overlap >= r.lower_bound - 1e-6
    assert abs(r.diagnostics["action_literature"] / r.action - 2.0) < 1e-9

    a = q.AnnealParams(n=60, eps_gamma=math.pi / 8)
    for t in (1.0, 5.0, 9.0):
        c = q.sigma_closed_form(a, t)
        m = q.sigma_moment_oracle(a, t)
        assert abs(c - m) <= 1e-10 * c, (c, m)
    amps = q.anneal_designed_state(a, 0.0)
    assert len(amps) == 61
    assert abs(sum(re * re + im * im for re, im in amps) - 1.0) < 1e-12

    rows = q.sweep(q.AnnealParams(n=100, eps_beta=0.01), "eps_gamma:0.02:1.5707:16")
    bounds = [rep.lower_bound for _, rep, _ in rows]
    assert bounds == sorted(bounds) and bounds[0] == 0.0
    csv = q.sweep_csv(q.AnnealParams(n=100, eps_beta=0.01), "eps_gamma:0.02:1.5707:16")
    assert csv == q.sweep_csv(q.AnnealParams(n=100, eps_beta=0.01), "eps_gamma:0.02:1.5707:16")
    assert len(csv.splitlines()) == 17

    try:
        q.anneal_bound(q.AnnealParams(n=10, h=-0.5))
    except q.ScheduleSingularityError:
        pass
    else:
        raise AssertionError("expected a schedule singularity")

    try:
        q.AnnealParams(eps_gamma=0.0)
    except q.QslError:
        pass
    else:
        raise AssertionError("eps_gamma = 0 must be rejected")

    assert all(passed for _, passed, _, _ in q.selftest())
    print("smoke test ok")


if __name__ == "__main__":
    main()
