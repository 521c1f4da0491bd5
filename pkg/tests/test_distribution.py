import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lderiv.distribution import (
    EmpiricalDistribution,
    MomentSequence,
    build_distribution,
    cdf_eval,
    export_plot_data,
    hankel_report,
    kolmogorov_distance,
    main_term_moments,
    moments_from_distribution,
    plot_rows,
)
from lderiv.moments import empirical_moment


def make(samples, phi, q=0):
    return EmpiricalDistribution(q, 0.0, tuple(sorted(samples)), tuple(range(len(samples))), phi)


def test_step_cdf_conventions():
    D = make([1.0, 2.0, 2.0], 4)
    assert cdf_eval(D, 0.5) == 0
    assert cdf_eval(D, 1.0) == 0.25  # right-continuous
    assert cdf_eval(D, 2.0) == 0.75
    assert cdf_eval(D, math.inf) == 0.75


def test_unsorted_samples_rejected():
    with pytest.raises(ValueError):
        EmpiricalDistribution(5, 0.0, (2.0, 1.0), (1, 2), 4)


def test_principal_excluded_at_zero_but_normalizer_kept():
    D = build_distribution(59)
    assert D.count == 57 and D.phi == 58
    assert cdf_eval(D, math.inf) == pytest.approx(57 / 58)
    D1 = build_distribution(59, 1.0)
    assert D1.count == 58 and cdf_eval(D1, math.inf) == 1.0


def test_conjugate_pairs_give_equal_samples():
    D = build_distribution(59)
    assert D.samples[0] == pytest.approx(D.samples[1], rel=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 300), st.sampled_from([0.0, 0.7]))
def test_valid_step_cdf(q, t0):
    D = build_distribution(q, t0)
    vals = [cdf_eval(D, v) for v in D.samples]
    assert all(0 <= a <= b <= 1 for a, b in zip(vals, vals[1:]))
    assert all(x >= 0 for x in D.samples)


def test_kolmogorov_distance_properties():
    a = make([1.0, 2.0, 3.0], 3)
    b = make([1.5, 2.5, 3.5], 3)
    assert kolmogorov_distance(a, a) == 0
    assert kolmogorov_distance(a, b) == pytest.approx(1 / 3)
    assert kolmogorov_distance(a, b) == kolmogorov_distance(b, a)


@settings(max_examples=30)
@given(
    st.lists(st.floats(0, 10), min_size=1, max_size=20),
    st.lists(st.floats(0, 10), min_size=1, max_size=20),
    st.lists(st.floats(0, 10), min_size=1, max_size=20),
)
def test_kolmogorov_triangle_inequality(x, y, z):
    a, b, c = make(x, len(x)), make(y, len(y)), make(z, len(z))
    assert kolmogorov_distance(a, c) <= kolmogorov_distance(a, b) + kolmogorov_distance(b, c) + 1e-15


def test_moments_agree_with_power_means():
    D = build_distribution(41, 0.0)
    seq = moments_from_distribution(D, 3)
    assert seq[0] == pytest.approx(39 / 40)
    for k in (1, 2, 3):
        assert seq[k] == pytest.approx(empirical_moment(k, 41, 0.0).value, rel=1e-13)


def test_hankel_of_point_masses():
    # a measure on two atoms has Delta_0, Delta_1 > 0 and Delta_2 = 0
    mu = [0.5 * (1.0**k) + 0.5 * (3.0**k) for k in range(8)]
    rep = hankel_report(MomentSequence("two atoms", tuple(mu)), 3)
    assert rep.delta[0] > 0 and rep.delta[1] > 0
    assert rep.singular[2] and rep.singular[3]
    assert rep.delta[1] == pytest.approx(np.linalg.det([[mu[0], mu[1]], [mu[1], mu[2]]]))


def test_hankel_detects_non_moment_sequence():
    rep = hankel_report(MomentSequence("bad", (1.0, 2.0, 1.0, 1.0)), 1)
    assert rep.min_eig[1] < 0


def test_hankel_needs_enough_moments():
    with pytest.raises(ValueError):
        hankel_report(MomentSequence("short", (1.0, 1.0, 1.0)), 2)


def test_hankel_default_order_and_notes():
    mu = tuple(math.factorial(k) for k in range(20))
    rep = hankel_report(MomentSequence("exp", mu))
    assert rep.K == 6
    assert hankel_report(MomentSequence("exp", mu), 8).notes


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 300))
def test_empirical_hankel_psd(q):
    rep = hankel_report(moments_from_distribution(build_distribution(q), 7), 3)
    for e, n in zip(rep.min_eig + rep.min_eig_star, rep.norm + rep.norm_star):
        assert e >= -1e-9 * n


def test_carleman_and_factorial_ratios():
    seq, tails = main_term_moments(4, 10**5)
    rep = hankel_report(seq, 1)
    partial = rep.carleman_partial
    assert len(partial) == 4
    assert all(a < b for a, b in zip(partial, partial[1:]))
    assert rep.factorial_ratios[0] == 1.0
    assert all(r <= 1 for r in rep.factorial_ratios)
    assert len(tails) == 5 and tails[0] == 0


def test_plot_rows_and_csv_export():
    D = build_distribution(13)
    rows = plot_rows([D], vmax=1.0)
    assert all(v <= 1.0 for _, v, _ in rows)
    text = export_plot_data([D])
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == ["q", "v", "D"]
    assert len(parsed) == 1 + D.count
    assert float(parsed[-1][2]) == pytest.approx(11 / 12)
    with pytest.raises(ValueError):
        export_plot_data([])


def test_documented_sample_counts():
    assert build_distribution(4).count == 1
    D5 = build_distribution(5)
    assert D5.count == 3
    assert cdf_eval(D5, D5.samples[1]) == 2 / 4
    assert cdf_eval(D5, D5.samples[0] / 2) == 0
    seq = moments_from_distribution(D5, 2)
    assert seq[0] == D5.count / D5.phi
    assert seq[2] == pytest.approx(empirical_moment(2, 5, 0.0).value, rel=1e-13)


def test_probability_sequence_has_unit_delta0():
    rep = hankel_report(moments_from_distribution(build_distribution(31, 1.0), 3), 1)
    assert rep.delta[0] == pytest.approx(1.0)


def test_empty_range_gives_header_only():
    assert export_plot_data([build_distribution(13)], vmax=1e-9) == "q,v,D\n"
