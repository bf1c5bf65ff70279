"""Smoke test for the spreadpc_py extension.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, or copy
target/release/libspreadpc_py.so to spreadpc_py.so on PYTHONPATH.
"""

import json
import math

import spreadpc_py as sp


def main():
    k = sp.Kernel.uniform(2, 1)
    assert (k.d, k.L) == (2, 1)
    s = sp.return_series(k, 6)
    assert s.method == "integer_exact"
    assert s.exact(2) == "1/8"
    assert s[0] == 1.0 and s[1] == 0.0
    assert s.invariants_hold()
    assert s.to_csv(True).splitlines()[0] == "n,r_n,method,d,L,rational"

    k5 = sp.Kernel.uniform(5, 4)
    p = sp.predict_pc("saw", k5)
    assert p.tail_valid
    assert math.isclose(p.p_c_leading, 1.0 + p.correction_term, rel_tol=1e-15)
    assert p.error_scale == k5.beta**2
    assert json.loads(p.to_json())["model"] == "saw"

    c = sp.predict_pc_continuum("saw", 5, 4)
    assert abs(c.correction_term - p.correction_term) < 10 * c.error_scale

    sums = json.loads(sp.loop_sums(sp.Kernel.uniform(7, 2)))
    assert sums["triangle"] is not None

    table = sp.Kernel.from_text("d=1 L=1 profile=table\n-1 0.5\n1 0.5\n")
    assert sp.return_series(table, 2)[2] == 0.5

    near = sp.cp_epsilon_sum(k5, 1e-3)
    assert abs(near - p.correction_term) < 1e-6

    try:
        sp.predict_pc("perc", sp.Kernel.uniform(3, 2))
    except ValueError as e:
        assert "dimension gate" in str(e)
    else:
        raise AssertionError("gate not enforced")

    print("smoke test ok:", p)


if __name__ == "__main__":
    main()
