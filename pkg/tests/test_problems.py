"""Exact solution oracles, convergence orders, and report serialization.

The exact fields of both benchmarks are hand-derived calculus, so every one
of them is cross-checked here against central finite differences of the
scalar deflection alone.
"""

import json

import numpy as np
import pytest

from ddivfem.piola import BasisCache
from ddivfem.problems import (
    BANDS,
    CSV_COLUMNS,
    ConfigurationError,
    ConvergenceReport,
    corner_exponent,
    get_example,
    l2_errors,
    solve_example,
)

EX1_POINTS = [(0.0, 0.0), (0.3, -0.4), (-0.5, 0.2)]
EX2_POINTS = [(0.5, 0.5), (-0.6, 0.7), (0.8, -0.3)]


def fd_gradient(u, x, y, h=1e-6):
    return np.array(
        [(u(x + h, y) - u(x - h, y)) / (2 * h), (u(x, y + h) - u(x, y - h)) / (2 * h)]
    )


def fd_hessian(u, x, y, h=1e-4):
    uxx = (u(x + h, y) - 2 * u(x, y) + u(x - h, y)) / h**2
    uyy = (u(x, y + h) - 2 * u(x, y) + u(x, y - h)) / h**2
    uxy = (
        u(x + h, y + h) - u(x + h, y - h) - u(x - h, y + h) + u(x - h, y - h)
    ) / (4 * h**2)
    return np.array([uxx, uxy, uyy])


def fd_bilaplacian(u, x, y, h):
    def lap(px, py):
        return (
            u(px + h, py) + u(px - h, py) + u(px, py + h) + u(px, py - h) - 4 * u(px, py)
        ) / h**2

    return (lap(x + h, y) + lap(x - h, y) + lap(x, y + h) + lap(x, y - h) - 4 * lap(x, y)) / h**2


# -- polynomial benchmark -------------------------------------------------------


def test_polynomial_deflection_values():
    ex1 = get_example("ex1")
    assert ex1.u(0.0, 0.0) == 1.0
    # boundary edges of the sheared domain: x = +-1 and x - y = +-1
    for t in np.linspace(-1.0, 1.0, 9):
        for x, y in ((1.0, 1.0 + t), (-1.0, -1.0 + t), (t, t - 1.0), (t, t + 1.0)):
            assert abs(ex1.u(x, y)) < 1e-13
            assert np.abs(ex1.grad_u(x, y)).max() < 1e-13


def test_polynomial_load_matches_bilaplacian():
    # Richardson-extrapolated finite differences as the independent check of
    # the symbolic fourth derivatives
    ex1 = get_example("ex1")
    for x, y in EX1_POINTS:
        b1 = fd_bilaplacian(ex1.u, x, y, 1e-2)
        b2 = fd_bilaplacian(ex1.u, x, y, 5e-3)
        rich = (4.0 * b2 - b1) / 3.0
        assert rich == pytest.approx(ex1.f(x, y), rel=1e-6)


def test_polynomial_moments_are_the_hessian():
    ex1 = get_example("ex1")
    for x, y in EX1_POINTS:
        M = np.asarray(ex1.field.m(x, y))
        assert np.abs(M - fd_hessian(ex1.u, x, y)).max() < 1e-5 * (1.0 + np.abs(M).max())


# -- singular benchmark ----------------------------------------------------------


def test_corner_exponent_values():
    alpha, C = corner_exponent()
    assert alpha == pytest.approx(0.54448, abs=5e-6)
    assert C == pytest.approx(1.8414, abs=5e-5)
    # the exponent is the root of the clamped determinant at half angle 3pi/4
    t0 = 0.75 * np.pi
    assert abs(np.sin(2 * alpha * t0) + alpha * np.sin(2 * t0)) < 1e-14


def test_singular_solution_is_clamped_on_the_notch():
    ex2 = get_example("ex2")
    for t in np.linspace(1e-3, 0.999, 7):
        for x, y in ((0.0, -t), (-t, 0.0)):
            assert abs(ex2.u(x, y)) < 1e-14
            assert np.abs(ex2.grad_u(x, y)).max() < 1e-14


def test_singular_gradient_and_hessian():
    ex2 = get_example("ex2")
    for x, y in EX2_POINTS:
        g = np.asarray(ex2.grad_u(x, y))
        assert np.abs(g - fd_gradient(ex2.u, x, y)).max() < 1e-8 * np.abs(g).max()
        M = np.asarray(ex2.field.m(x, y))
        assert np.abs(M - fd_hessian(ex2.u, x, y)).max() < 1e-6 * np.abs(M).max()


def test_singular_divergence_and_biharmonicity():
    ex2 = get_example("ex2")
    h = 1e-5

    def fd_div(x, y):
        mxp, mxm = np.asarray(ex2.field.m(x + h, y)), np.asarray(ex2.field.m(x - h, y))
        myp, mym = np.asarray(ex2.field.m(x, y + h)), np.asarray(ex2.field.m(x, y - h))
        dx, dy = (mxp - mxm) / (2 * h), (myp - mym) / (2 * h)
        return np.array([dx[0] + dy[1], dx[1] + dy[2]])

    for x, y in EX2_POINTS:
        d = np.asarray(ex2.field.div(x, y))
        assert np.abs(d - fd_div(x, y)).max() < 1e-8 * np.abs(d).max()
        # the deflection is biharmonic: the exact divergence is solenoidal
        dxp = np.asarray(ex2.field.div(x + h, y))
        dxm = np.asarray(ex2.field.div(x - h, y))
        dyp = np.asarray(ex2.field.div(x, y + h))
        dym = np.asarray(ex2.field.div(x, y - h))
        divdiv = (dxp[0] - dxm[0]) / (2 * h) + (dyp[1] - dym[1]) / (2 * h)
        assert abs(divdiv) < 1e-6 * (1.0 + np.abs(d).max())
        assert ex2.f(x, y) == 0.0


def test_unknown_problem_name():
    with pytest.raises(ConfigurationError):
        get_example("ex3")


# -- error measurement ---------------------------------------------------------


def test_error_integrals_stable_under_quadrature_order():
    cache = BasisCache()
    ex1 = get_example("ex1")
    run = solve_example(ex1, 2, cache=cache)
    e6 = l2_errors(run["mesh"], run["dofmap"], cache, run["result"], ex1, nq=6)
    e8 = l2_errors(run["mesh"], run["dofmap"], cache, run["result"], ex1, nq=8)
    for key in ("u", "M", "ddiv", "div"):
        # polynomial integrands: already exact at the default order
        assert e6[key] == pytest.approx(e8[key], rel=1e-12)

    ex2 = get_example("ex2")
    run = solve_example(ex2, 2, cache=cache)
    e6 = l2_errors(run["mesh"], run["dofmap"], cache, run["result"], ex2, nq=6, nq_singular=10)
    e8 = l2_errors(run["mesh"], run["dofmap"], cache, run["result"], ex2, nq=8, nq_singular=12)
    assert e6["u"] == pytest.approx(e8["u"], rel=1e-6)
    # the moment integrand behaves like r^(2 alpha - 4) near the corner, so
    # raising the order there still moves the third digit; anything tighter
    # than a percent would be claiming accuracy the quadrature does not have
    assert e6["M"] == pytest.approx(e8["M"], rel=1e-2)
    assert e6["ddiv"] is None and e6["div"] is None


# -- convergence orders -----------------------------------------------------------


def test_polynomial_benchmark_orders(ex1_report):
    verdict = ex1_report.band_check()
    assert set(verdict) == {"u", "M", "ddiv", "div"}
    for key, entry in verdict.items():
        lo, hi = BANDS["ex1"][key]
        assert entry["pass"], "eoc_%s = %r outside [%g, %g]" % (key, entry["eoc"], lo, hi)
    assert ex1_report.all_pass()


def test_polynomial_orders_settle_toward_their_limits(ex1_report):
    # the gap between the observed order and its limit shrinks level by level
    for key, limit in (("u", 2.0), ("M", 2.0), ("ddiv", 2.0), ("div", 1.0)):
        devs = [
            abs(row["eoc_" + key] - limit)
            for row in ex1_report.rows
            if row["level"] >= 3 and row.get("eoc_" + key) is not None
        ]
        assert len(devs) >= 3
        assert all(a > b for a, b in zip(devs[:-1], devs[1:])), (key, devs)


def test_singular_benchmark_orders(ex2_report):
    verdict = ex2_report.band_check()
    assert verdict["u"]["pass"], verdict["u"]
    assert verdict["M"]["pass"], verdict["M"]
    assert verdict["ddiv_Mh"]["pass"]
    # the moment order is the corner exponent, not a full power
    alpha = ex2_report.extras["alpha"]
    assert ex2_report.final_eoc("M") == pytest.approx(alpha, abs=0.1)


def test_moment_equilibrium_residual_is_roundoff(ex2_report):
    # zero load means div div M_h vanishes identically in the discrete space
    for row in ex2_report.rows:
        assert row["ddiv_Mh"] <= 1e-8 * (1.0 + row["norm_Mh"])
        assert row["conformity"] < 1e-9


# -- serialization ------------------------------------------------------------------


def test_csv_layout_and_blanks(ex2_report):
    text = ex2_report.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(ex2_report.rows)
    for line, row in zip(lines[1:], ex2_report.rows):
        cells = line.split(",")
        assert len(cells) == len(CSV_COLUMNS)
        assert cells[CSV_COLUMNS.index("err_ddiv")] == ""
        assert cells[CSV_COLUMNS.index("err_div")] == ""
        # full-precision round trip
        assert float(cells[CSV_COLUMNS.index("err_u")]) == row["err_u"]
        assert float(cells[CSV_COLUMNS.index("err_M")]) == row["err_M"]
        assert int(cells[0]) == row["level"]


def test_csv_full_columns(ex1_report, tmp_path):
    path = tmp_path / "table.csv"
    ex1_report.to_csv(path)
    lines = path.read_text().strip().split("\n")
    first = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert first["eoc_u"] == ""  # no previous level
    last = dict(zip(CSV_COLUMNS, lines[-1].split(",")))
    for col in CSV_COLUMNS:
        assert last[col] != ""
    assert float(last["err_div"]) == ex1_report.rows[-1]["err_div"]


def test_json_report(ex1_report, ex2_report, tmp_path):
    payload = json.loads(ex1_report.to_json(tmp_path / "report.json"))
    assert payload["schema_version"] == 1
    assert payload["problem"] == "ex1"
    assert payload["all_pass"] is True
    assert len(payload["rows"]) == len(ex1_report.rows)
    assert payload["rows"][-1]["err_u"] == ex1_report.rows[-1]["err_u"]
    assert (tmp_path / "report.json").read_text() == ex1_report.to_json()

    payload2 = json.loads(ex2_report.to_json())
    assert payload2["alpha"] == pytest.approx(0.54448, abs=5e-6)
    assert payload2["coeff"] == pytest.approx(1.8414, abs=5e-5)
    assert payload2["rows"][0]["err_ddiv"] is None
    assert payload2["bands"]["ddiv_Mh"]["pass"] is True


def test_report_helpers():
    rows = [
        {"level": 1, "nelem": 4, "h": 0.5, "err_u": 1.0, "eoc_u": None},
        {"level": 2, "nelem": 16, "h": 0.25, "err_u": 0.25, "eoc_u": 2.0},
    ]
    report = ConvergenceReport("ex1", rows)
    assert report.final_eoc("u") == 2.0
    assert report.final_eoc("div") is None
    table = report.table()
    assert "err_u" in table and table.count("\n") == 2
