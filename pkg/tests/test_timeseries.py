import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stablespec.convergence_lab import hill_tail_index
from stablespec.stable_rng import ParameterError, RngStream
from stablespec.timeseries import (
    DegenerateError,
    LinearFilter,
    SamplePath,
    autocovariances,
    read_path_csv,
    sample_autocorr,
    sample_autocov,
    simulate_iid,
    simulate_linear,
    write_path_csv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_single_observation_path():
    p = simulate_iid(1, 1.3, RngStream(0))
    assert p.n == 1 and p.origin == "iid"


def test_iid_is_reproducible():
    a = simulate_iid(200, 0.9, RngStream(5, 2))
    b = simulate_iid(200, 0.9, RngStream(5, 2))
    np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.parametrize("alpha", [0.0, 2.0, -1.0, 2.5])
def test_iid_rejects_alpha_outside_open_interval(alpha):
    with pytest.raises(ParameterError):
        simulate_iid(10, alpha, RngStream(0))


def test_iid_tail_index_by_hill():
    p = simulate_iid(10**6, 1.2, RngStream(77))
    assert 1.05 <= hill_tail_index(p.values, 0.01) <= 1.35


def test_identity_filter_reproduces_innovations():
    x, eps = simulate_linear(300, LinearFilter.identity(), 1.4, RngStream(3))
    np.testing.assert_array_equal(x.values, eps.values)
    iid = simulate_iid(300, 1.4, RngStream(3))
    np.testing.assert_array_equal(x.values, iid.values)


def test_scale_filter_is_exact_multiple():
    x, eps = simulate_linear(100, LinearFilter({0: 0.5}), 1.1, RngStream(4))
    np.testing.assert_array_equal(x.values, 0.5 * eps.values)


def test_ma1_matches_hand_convolution():
    theta = -0.7
    x, eps = simulate_linear(4, LinearFilter.ma1(theta), 1.5, RngStream(9))
    pad = x.padded_innovations
    # pad[0] is eps_0, pad[1..4] are eps_1..eps_4
    assert pad.size == 5
    np.testing.assert_array_equal(eps.values, pad[1:])
    hand = [pad[t] + theta * pad[t - 1] for t in range(1, 5)]
    np.testing.assert_allclose(x.values, hand, rtol=0, atol=0)


def test_two_sided_filter_matches_direct_sum():
    filt = LinearFilter({-2: 0.3, -1: 1.5, 0: 1.0, 3: -0.25})
    x, eps = simulate_linear(40, filt, 0.9, RngStream(10))
    pad = x.padded_innovations
    off = filt.pos_radius
    assert pad.size == 40 + 2 + 3

    def eps_at(t):
        return pad[t - 1 + off]

    direct = [sum(c * eps_at(t - j) for j, c in filt.coeffs.items()) for t in range(1, 41)]
    np.testing.assert_allclose(x.values, direct, rtol=1e-14, atol=1e-14)


def test_autocov_hand_values():
    assert sample_autocov(SamplePath([1, 1, 1, 1]), 1) == 0.75
    assert sample_autocov(SamplePath([1, -1, 1, -1]), 1) == -0.75
    assert sample_autocov(SamplePath([1, 2, 3]), 3) == 0.0
    assert sample_autocov(SamplePath([1, 2, 3]), 10) == 0.0


def test_autocorr_hand_values():
    assert sample_autocorr(SamplePath([0.3, -2.0, 5.0]), 0) == 1.0
    assert sample_autocorr(SamplePath([1, 1, 1, 1]), 1) == 0.75
    assert sample_autocorr(SamplePath([2, 2, 2, 2]), 1) == 0.75
    with pytest.raises(DegenerateError):
        sample_autocorr(SamplePath([0.0, 0.0]), 1)
    with pytest.raises(ParameterError):
        sample_autocov(SamplePath([1.0]), -1)


def test_path_validation():
    with pytest.raises(ParameterError):
        SamplePath([])
    with pytest.raises(ParameterError):
        SamplePath([1.0, math.nan])
    p = SamplePath([1.0, 2.0])
    with pytest.raises(ValueError):
        p.values[0] = 3.0


def test_filter_validation_and_tags():
    with pytest.raises(ParameterError):
        LinearFilter({0: 0.0})
    g = LinearFilter.geometric(0.5, 10, two_sided=True)
    assert g.neg_radius == 10 and g.pos_radius == 10 and g.tail == ("geometric", 0.5)
    p = LinearFilter.power(2.5, 20)
    assert p.coeffs[0] == 1.0 and p.coeffs[20] == pytest.approx(20 ** -2.5)
    np.testing.assert_allclose(LinearFilter.ma1(0.5).autocov(), [1.25, 0.5])


@pytest.mark.parametrize("n", [5, 100, 700, 3000])
def test_batched_autocovariances_match_direct(n):
    rows = np.random.default_rng(n).standard_cauchy((3, n))
    lags = min(n + 5, 400)
    got = autocovariances(rows, lags)
    for r in range(3):
        direct = [sample_autocov(rows[r], h) for h in range(lags + 1)]
        np.testing.assert_allclose(got[r], direct, rtol=1e-9, atol=1e-9 * float(rows[r] @ rows[r]) / n)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=finite), st.integers(0, 45))
def test_cauchy_schwarz_bound(x, h):
    assert abs(sample_autocov(x, h)) <= sample_autocov(x, 0) * (1 + 1e-12) + 1e-300


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=finite), st.integers(0, 45),
       st.sampled_from([2.0, -0.5, 0.25, 8.0]))
def test_scale_equivariance(x, h, c):
    g = sample_autocov(x, h)
    assert sample_autocov(c * x, h) == pytest.approx(c * c * g, rel=1e-12, abs=1e-300)
    if sample_autocov(x, 0) > 0:
        assert sample_autocorr(c * x, h) == sample_autocorr(x, h)


def test_csv_round_trip(tmp_path):
    x, _ = simulate_linear(25, LinearFilter.ma1(0.4), 1.2, RngStream(8))
    csv_path, side = write_path_csv(x, tmp_path / "p.csv")
    assert csv_path.read_text().splitlines()[0] == "value"
    back = read_path_csv(csv_path)
    np.testing.assert_array_equal(back.values, x.values)
    assert back.alpha == 1.2 and list(back.seed) == x.sidecar()["seed"]
