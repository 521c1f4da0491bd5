import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lderiv import lfunctions as lf
from lderiv import moments as mom
from lderiv.arithmetic import convolve_mangoldt, euler_phi
from lderiv.characters import all_characters, build_group
from lderiv.errors import EmptyCharacterSet, TableBudgetExceeded

# unrestricted M_1 truncated at 10^4; frozen from the reference run
M1_AT_1E4 = 0.8041923966887135


def test_main_term_frozen_value():
    r = mom.main_term(1, 1, 10**4, restricted=False)
    assert r.value == pytest.approx(M1_AT_1E4, rel=1e-14)
    assert not r.restricted


def test_main_term_direct_sum():
    M = 500
    lam = convolve_mangoldt(2, M)
    for q in (1, 6, 7):
        direct = math.fsum(lam[m] ** 2 / m**2 for m in range(1, M + 1) if math.gcd(m, q) == 1)
        assert mom.main_term(2, q, M).value == pytest.approx(direct, rel=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_tail_bound_covers_truncation(k):
    a = mom.main_term(k, 1, 20000, restricted=False)
    b = mom.main_term(k, 1, 200000, restricted=False)
    assert 0 <= b.value - a.value <= a.tail_bound


def test_tail_bound_decreases():
    for k in (1, 2, 3):
        bounds = [mom.tail_bound(k, M) for M in (10**3, 10**4, 10**5, 10**6)]
        assert all(x > y for x, y in zip(bounds, bounds[1:]))


def test_restriction_only_removes_terms():
    for q in (2, 7, 30, 101):
        assert mom.main_term(1, q, 10**4).value < mom.main_term(1, q, 10**4, restricted=False).value


def test_prime_restriction_removes_prime_powers_for_k1():
    M = 10**4
    lam = convolve_mangoldt(1, M)
    for p in (3, 101):
        gap = mom.main_term(1, 1, M, restricted=False).value - mom.main_term(1, p, M).value
        powers = math.fsum(lam[p**j] ** 2 / p ** (2 * j) for j in range(1, int(math.log(M, p) + 1e-9) + 1))
        assert gap == pytest.approx(powers, rel=1e-12)


def test_main_term_sequence_starts_at_one():
    seq = mom.main_term_sequence(3, 10**4)
    assert [r.k for r in seq] == [0, 1, 2, 3]
    assert seq[0].value == 1.0 and seq[0].tail_bound == 0.0


def test_main_term_budget():
    with pytest.raises(TableBudgetExceeded):
        mom.main_term(1, 1, 10**5, budget=10**4)


def test_empirical_matches_per_character_evaluation():
    q, t0 = 13, 0.5
    s = complex(1, t0)
    direct = [abs(lf.log_derivative(s, chi).value) ** 4 for chi in all_characters(build_group(q))]
    e = mom.empirical_moment(2, q, t0)
    assert e.value == pytest.approx(math.fsum(direct) / euler_phi(q), rel=1e-13)
    assert e.characters_used == 12 and not e.excluded_principal


def test_zeroth_moment_counts_characters():
    e = mom.empirical_moment(0, 11, 0.0)
    assert e.value == pytest.approx(9 / 10)
    assert e.characters_used == 9 and e.excluded_principal
    assert mom.empirical_moment(0, 11, 1.0).value == pytest.approx(1.0)


def test_empty_character_set():
    with pytest.raises(EmptyCharacterSet):
        mom.empirical_moment(1, 2, 0.0)


def test_t0_guard():
    with pytest.raises(ValueError):
        mom.empirical_moment(1, 5, 50.0)
    assert mom.empirical_moment(1, 5, 50.0, t0_max=60.0).value > 0


def test_error_estimate_small():
    e = mom.empirical_moment(2, 101, 0.0)
    assert 0 <= e.error < 1e-9 * e.value


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 150), st.floats(0.2, 5.0))
def test_conjugation_symmetry(q, t0):
    a = mom.empirical_moment(1, q, t0).value
    b = mom.empirical_moment(1, q, -t0).value
    assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 150), st.floats(0.2, 5.0))
def test_lyapunov_monotonicity(q, t0):
    # with every character counted the weights form a probability measure
    m = [mom.empirical_moment(k, q, t0).value for k in (1, 2, 3)]
    roots = [x ** (1 / k) for k, x in zip((1, 2, 3), m)]
    assert roots[0] <= roots[1] * (1 + 1e-12)
    assert roots[1] <= roots[2] * (1 + 1e-12)


def brute_smoothed(k, q, t0, X, cutoff):
    lam = convolve_mangoldt(k, int(cutoff))
    support = [m for m in range(1, int(cutoff) + 1) if lam[m] and math.gcd(m, q) == 1]
    total = 0j
    for m in support:
        for n in support:
            if (m - n) % q == 0 and m * n <= cutoff:
                total += lam[m] * lam[n] * m ** complex(-1, -t0) * n ** complex(-1, t0) * math.exp(-m * n / X)
    return total


@pytest.mark.parametrize("t0", [0.0, 1.3])
def test_smoothed_sum_matches_brute_force(t0):
    X = 40.0
    r = mom.smoothed_double_sum(1, 5, t0, X, eps=1e-8)
    ref = brute_smoothed(1, 5, t0, X, r.cutoff)
    assert abs(r.value - ref) < 1e-12


def test_smoothed_sum_real_at_zero_and_conjugate_symmetric():
    assert mom.smoothed_double_sum(1, 7, 0.0, 500.0).value.imag == 0.0
    a = mom.smoothed_double_sum(1, 7, 0.8, 500.0).value
    b = mom.smoothed_double_sum(1, 7, -0.8, 500.0).value
    assert a == pytest.approx(b.conjugate(), abs=1e-13)


def test_smoothed_truncation_bound_small():
    r = mom.smoothed_double_sum(1, 7, 0.0, 1000.0)
    assert r.truncation_bound < 1e-10
    assert r.terms > 0


def test_smoothed_sum_threads_identical():
    a = mom.smoothed_double_sum(1, 7, 0.5, 2000.0, threads=1)
    b = mom.smoothed_double_sum(1, 7, 0.5, 2000.0, threads=4)
    assert a.value == b.value


@pytest.mark.parametrize("X", [1e4, 1e5])
def test_diagonal_part_approaches_main_term(X):
    # gap = sum w_m^2 (1 - e^{-m^2/X}); for m <= sqrt(X) use 1 - e^{-x} <= x and
    # Lambda^{*k}(m) <= (log m)^k, beyond sqrt(X) use the main-term tail bound
    k, q = 1, 7
    d = mom.smoothed_double_sum(k, q, 0.0, X, diagonal_only=True)
    main = mom.main_term(k, q, 10**6).value
    root = math.sqrt(X)
    bound = math.log(root) ** (2 * k) / root + mom.tail_bound(k, int(root)) + mom.tail_bound(k, 10**6)
    assert d.diagonal_only
    assert d.value.imag == 0
    assert 0 < main - d.value.real < bound


def test_smoothed_sum_validation():
    with pytest.raises(ValueError):
        mom.smoothed_double_sum(1, 7, 0.0, 0.5)
    with pytest.raises(ValueError):
        mom.smoothed_double_sum(2, 7, 0.0, 100.0, eps=0.5)


def test_deviation_sweep_structure():
    rep = mom.deviation_sweep([1, 2], [101, 257], 0.0, M=10**5)
    assert [(r.q, r.k) for r in rep.rows] == [(101, 1), (101, 2), (257, 1), (257, 2)]
    assert all(r.status == "ok" and not r.restricted for r in rep.rows)
    assert all(r.deviation == abs(r.empirical - r.main_term) for r in rep.rows)


def test_composite_modulus_uses_restricted_main_term():
    row = mom.deviation_sweep(1, [100], 0.0, M=10**5).rows[0]
    assert row.restricted
    assert row.main_term == mom.main_term(1, 100, 10**5).value


def test_failed_rows_are_recorded():
    rep = mom.deviation_sweep(1, [2, 5], 0.0, M=10**4)
    assert rep.rows[0].status.startswith("failed")
    assert math.isnan(rep.rows[0].empirical)
    assert rep.rows[1].status == "ok"
    assert rep.ok_rows() == [rep.rows[1]]


def test_small_t0_note():
    assert mom.deviation_sweep(1, [5], 0.05, M=10**4).notes
    assert not mom.deviation_sweep(1, [5], 1.0, M=10**4).notes


def test_predicted_scale_shapes():
    assert mom.predicted_error_scale(1, 101, 0.0) == pytest.approx(math.log(101) ** 8 / 101)
    assert mom.predicted_error_scale(1, 101, 1.0) > 0


def test_documented_main_term_examples():
    M = 10**6
    gap = mom.main_term(1, 1, M, restricted=False).value - mom.main_term(1, 2, M).value
    # removed terms are m = 2^j; the infinite sum is (log 2)^2 / 3
    assert gap == pytest.approx(math.log(2) ** 2 / 3, abs=4 ** -19)
    lam = convolve_mangoldt(2, 12)
    assert lam[12] ** 2 / 144 == pytest.approx((2 * math.log(2) * math.log(3)) ** 2 / 144, rel=1e-15)


def test_small_moduli_power_means():
    import mpmath

    # q = 3: one non-principal character; L(1) = -(psi(1/3) - psi(2/3))/3
    with mpmath.workdps(30):
        L = -(mpmath.digamma(mpmath.mpf(1) / 3) - mpmath.digamma(mpmath.mpf(2) / 3)) / 3
        g1 = (mpmath.stieltjes(1, mpmath.mpf(1) / 3) - mpmath.stieltjes(1, mpmath.mpf(2) / 3)) / 3
        ratio = float((-mpmath.log(3) * L - g1) / L)
    assert mom.empirical_moment(1, 3, 0.0).value == pytest.approx(ratio**2 / 2, rel=1e-13)
    chi = build_group(4).character(1)
    lv = lf.evaluate_l(1, chi)
    assert mom.empirical_moment(1, 4, 0.0).value == pytest.approx(abs(lv.dL) ** 2 / (math.pi / 4) ** 2 / 2, rel=1e-13)


def test_diagonal_recovers_main_term_at_large_X():
    X = 1e6
    d = mom.smoothed_double_sum(1, 7, 0.0, X, diagonal_only=True)
    main = mom.main_term(1, 7, 10**6)
    root = math.sqrt(X)
    bound = math.log(root) ** 2 / root + mom.tail_bound(1, int(root)) + d.truncation_bound
    assert abs(main.value - d.value.real) < bound + main.tail_bound


def test_single_q_sweep_has_one_row():
    rep = mom.deviation_sweep(1, [11], 0.5, M=10**4)
    (row,) = rep.rows
    assert row.deviation == abs(row.empirical - row.main_term)
