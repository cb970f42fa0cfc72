import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vcomplex.functions import builtin, sampled
from vcomplex.vcomplexity import (ApproxReport, DegenerateFunctionError, StepFunction,
                                  asymptotic_grid, equidistribute, greedy_equidistribution,
                                  l1_distance, optimal_constant, v_complexity)


def brute_optimal_constant(f, c, d, lo, hi, step=1e-4, n=20_000):
    # grid search over g with a midpoint-rule L1 error
    x = c + (np.arange(n) + 0.5) * (d - c) / n
    y = np.sort(f(x))
    csum = np.concatenate([[0.0], np.cumsum(y)])
    gs = np.arange(lo, hi + step / 2, step)
    k = np.searchsorted(y, gs)
    # sum |y - g| split at the samples below g
    total = gs * k - csum[k] + (csum[-1] - csum[k]) - gs * (n - k)
    errs = total / n * (d - c)
    k = int(np.argmin(errs))
    return gs[k], errs[k]


# closed forms ------------------------------------------------------------------

def test_parabola_on_symmetric_interval():
    assert v_complexity(builtin("quadratic", -1, 1)) == pytest.approx(8 / 9, rel=1e-10)


@pytest.mark.parametrize("alpha", [0.5, 1, 2, 3, 5])
def test_power_family(alpha):
    got = v_complexity(builtin("power", 0, 1, alpha=alpha))
    assert got == pytest.approx(alpha / (alpha + 1) ** 2, rel=1e-10)


@pytest.mark.parametrize("alpha", [1, 10, 100])
def test_sigmoid(alpha):
    want = (math.atan(math.exp(alpha / 2)) - math.atan(math.exp(-alpha / 2))) ** 2 / alpha
    assert v_complexity(builtin("sigmoid", -1, 1, alpha=alpha)) == pytest.approx(want, rel=1e-10)


def test_cosine_constant():
    # exact constant: (int_0^1 |pi sin(pi x)|^0.5 dx)^2 / 4
    exact = (math.sqrt(math.pi) * math.gamma(0.75) / math.gamma(1.25)) ** 2 / (4 * math.pi)
    for n in (1, 4, 10):
        assert v_complexity(builtin("cos", 0, 1, n=n)) == pytest.approx(exact * n, rel=1e-9)
    assert v_complexity(builtin("cos", 0, 1, n=4)) == pytest.approx(1.828, rel=2e-3)


def test_constant_is_zero():
    assert v_complexity(builtin("const", 2, 5, c=3)) == 0.0


def test_step_limit_sigmoids_decrease():
    vals = [v_complexity(builtin("sigmoid", -1, 1, alpha=a)) for a in (10, 20, 50, 100, 200)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.05


def test_scale_and_translation():
    v = v_complexity(builtin("quadratic", -1, 1))
    assert v_complexity(builtin("quadratic", 2, 4, shift=3)) == pytest.approx(v, rel=1e-10)
    for c in (2, 0.5):
        assert v_complexity(builtin("quadratic", -1, 1, c=c)) == pytest.approx(c * v, rel=1e-10)


# optimal constant -----------------------------------------------------------------

def test_optimal_constant_affine():
    f = builtin("affine", 0, 1, slope=2, intercept=1)
    g, err = optimal_constant(f, 0, 1)
    assert g == pytest.approx(2.0, abs=1e-12) and err == pytest.approx(0.5, rel=1e-12)
    gb, eb = brute_optimal_constant(f, 0, 1, 1, 3)
    assert g == pytest.approx(gb, abs=2e-4) and err == pytest.approx(eb, rel=1e-4)


def test_optimal_constant_parabola():
    f = builtin("quadratic", -1, 1)
    g, err = optimal_constant(f, -1, 1)
    gb, eb = brute_optimal_constant(f, -1, 1, 0, 1)
    # oracle values recorded from the brute force: g = 1/4, err = 1/2
    assert (gb, eb) == pytest.approx((0.25, 0.5), abs=2e-4)
    assert g == pytest.approx(0.25, abs=1e-10) and err == pytest.approx(0.5, rel=1e-10)


def test_optimal_constant_of_constant():
    assert optimal_constant(builtin("const", 0, 2, c=7), 0.3, 1.4) == (7.0, 0.0)


@pytest.mark.parametrize("c,d", [(0.1, 0.9), (0.0, 0.37), (0.6, 1.0)])
def test_optimal_constant_non_monotone(c, d):
    f = builtin("cos", 0, 1, n=3)
    g, err = optimal_constant(f, c, d)
    gb, eb = brute_optimal_constant(f, c, d, -1, 1)
    assert err == pytest.approx(eb, rel=1e-3)
    assert err <= eb + 1e-8


def test_optimal_constant_rejects_empty_interval():
    with pytest.raises(ValueError):
        optimal_constant(builtin("quadratic", -1, 1), 0.5, 0.5)


# greedy and asymptotic grids -----------------------------------------------------------

def test_greedy_affine_uniform():
    rep = greedy_equidistribution(builtin("affine", 0, 1), 1 / 64)
    assert rep.n_intervals == 4
    assert rep.step_fn.breakpoints == pytest.approx([0, 0.25, 0.5, 0.75, 1], abs=1e-10)


def test_greedy_constant_single_interval():
    rep = greedy_equidistribution(builtin("const", 0, 1, c=2), 0.01)
    assert rep.n_intervals == 1 and rep.total_l1_error == 0


def test_greedy_rejects_bad_budget():
    with pytest.raises(ValueError):
        greedy_equidistribution(builtin("quadratic", -1, 1), 0.0)


def test_greedy_huge_budget_gives_one_step():
    rep = greedy_equidistribution(builtin("quadratic", -1, 1), 10.0)
    assert rep.n_intervals == 1


@pytest.mark.parametrize("f", [builtin("quadratic", -1, 1), builtin("power", 0, 1, alpha=1.5),
                               builtin("cos", 0, 1, n=3)], ids=str)
def test_scaled_count_converges(f):
    v = v_complexity(f)
    ratios = []
    for eps in (0.04, 0.02, 0.01, 0.005):
        rep = equidistribute(f, eps)
        ratios.append(rep.n_intervals * rep.total_l1_error / v)
        errs = rep.per_interval_errors[:-1]
        delta = rep.target_epsilon / rep.n_intervals
        # every interval but the last carries the same error
        assert np.allclose(errs, errs[0], rtol=1e-6)
        assert rep.total_l1_error == pytest.approx(eps, rel=0.02)
        assert delta > 0
    assert abs(ratios[-1] - 1) < 0.05
    assert abs(ratios[-1] - 1) <= abs(ratios[0] - 1) + 1e-3


def test_report_totals_and_l1_distance_agree():
    f = builtin("quadratic", -1, 1)
    rep = equidistribute(f, 0.07)
    assert rep.total_l1_error == pytest.approx(math.fsum(rep.per_interval_errors), rel=1e-12)
    assert l1_distance(f, rep.step_fn) == pytest.approx(rep.total_l1_error, rel=1e-8)
    # the eps = 0.07 picture: N * eps close to 8/9
    assert rep.n_intervals * rep.total_l1_error == pytest.approx(8 / 9, rel=0.1)


def closed_form_parabola_grid(eps):
    n = round((8 / 9) / eps)
    k = np.arange(n + 1)
    s = 9 * eps * k / 4
    x = np.where(s <= 1, -np.abs(1 - s) ** (2 / 3), np.abs(s - 1) ** (2 / 3))
    x[-1] = 1.0
    return x


def test_asymptotic_grid_matches_closed_form():
    rep = asymptotic_grid(builtin("quadratic", -1, 1), 0.01)
    want = closed_form_parabola_grid(0.01)
    assert len(rep.step_fn.breakpoints) == len(want)
    assert np.max(np.abs(rep.step_fn.breakpoints - want)) < 1e-3
    mids = 0.5 * (want[:-1] + want[1:])
    assert rep.step_fn.values == pytest.approx(mids ** 2, abs=1e-3)


def test_asymptotic_and_greedy_agree():
    f = builtin("quadratic", -1, 1)
    a = asymptotic_grid(f, 0.005).step_fn.breakpoints
    g = equidistribute(f, 0.005).step_fn.breakpoints
    n = min(len(a), len(g))
    assert abs(len(a) - len(g)) <= 2
    assert np.max(np.abs(a[:n] - g[:n])) < 0.02


def test_asymptotic_grid_affine_uniform_and_power_graded():
    bp = asymptotic_grid(builtin("affine", 0, 1, slope=3), 0.05).step_fn.breakpoints
    assert np.allclose(np.diff(bp), np.diff(bp)[0])
    bp = asymptotic_grid(builtin("power", 0, 1, alpha=4), 0.01).step_fn.breakpoints
    assert np.all(np.diff(np.diff(bp)) < 0)


def test_asymptotic_grid_degenerate():
    with pytest.raises(DegenerateFunctionError):
        asymptotic_grid(builtin("const", 0, 1, c=1), 0.1)


def test_l1_distance_examples():
    f = builtin("affine", 0, 1)
    assert l1_distance(f, StepFunction([0, 1], [0.5])) == pytest.approx(0.25, rel=1e-12)
    step = StepFunction([0, 0.5, 1], [1.0, 2.0])
    g = sampled([0, 0.5, 0.5000001, 1], [1, 1, 2, 2])
    assert l1_distance(g, step) < 1e-7
    with pytest.raises(ValueError):
        l1_distance(f, StepFunction([0, 0.5], [1.0]))


# step function plumbing --------------------------------------------------------------

def test_step_function_evaluation_and_csv():
    q = StepFunction([0, 0.5, 1], [1.0, 3.0])
    assert q(0.5) == 1.0 and q(0.50001) == 3.0 and q(0.0) == 1.0
    text = q.to_csv()
    assert text.splitlines()[0] == "x_left,x_right,value"
    back = StepFunction.from_csv(text)
    assert np.array_equal(back.breakpoints, q.breakpoints)
    assert np.array_equal(back.values, q.values)
    with pytest.raises(ValueError):
        StepFunction([0, 1, 1], [1, 2])


def test_report_csv_header():
    rep = ApproxReport(StepFunction([0, 1], [0.5]), [0.25], 0.25)
    first, header = rep.to_csv("affine@0,1").splitlines()[:2]
    assert first.startswith("# f=affine@0,1 epsilon=0.25 N=1 V_estimate=0.25")
    assert header == "x_left,x_right,value,l1_error"


# reverse Hoelder on random monotone piecewise-linear functions ----------------------------

@settings(max_examples=50, deadline=None)
@given(st.data())
def test_reverse_hoelder(data):
    k = data.draw(st.integers(2, 8))
    gaps = data.draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k))
    rises = data.draw(st.lists(st.floats(0.0, 3.0), min_size=k, max_size=k))
    c = data.draw(st.floats(-2, 2))
    nodes = c + np.concatenate([[0], np.cumsum(gaps)])
    values = np.concatenate([[0], np.cumsum(rises)])
    f = sampled(nodes, values)
    d = nodes[-1]
    lhs = 4 * v_complexity(f)  # (int |f'|^0.5)^2
    rhs = (values[-1] - values[0]) * (d - c)
    assert lhs <= rhs * (1 + 1e-9) + 1e-9
