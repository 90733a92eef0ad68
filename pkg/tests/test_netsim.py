import numpy as np
import pytest
from scipy import stats

from sshnet.distributions import RngStream
from sshnet.errors import ParameterError
from sshnet.netsim import (
    draw_roots,
    generate_input,
    random_impulse_response,
    random_module_spec,
    synthesize_dataset,
)
from sshnet.regressors import predict


def test_norms_uniform_on_range():
    rng = RngStream(0)
    norms = np.array([np.linalg.norm(random_impulse_response(40, rng)) for _ in range(10**4)])
    assert norms.min() >= 0.2 and norms.max() <= 1.0
    assert stats.kstest(norms, stats.uniform(0.2, 0.8).cdf).statistic < 0.02


def test_pole_structure():
    rng = RngStream(1)
    real_fraction = []
    for _ in range(10**4):
        poles = draw_roots(10, rng)
        assert len(poles) == 10
        assert np.all(np.abs(poles) <= 0.95)
        cplx = poles[np.abs(poles.imag) > 0]
        np.testing.assert_allclose(np.sort_complex(cplx), np.sort_complex(cplx.conj()))
        real_fraction.append(np.mean(poles.imag == 0))
    assert abs(np.mean(real_fraction) - 1 / 3) < 0.05


def test_zero_poles_give_numerator_fir():
    rng = RngStream(2)
    spec = random_module_spec(RngStream(2), poles=np.zeros(10))
    h = random_impulse_response(30, rng, poles=np.zeros(10))
    num = np.real(np.poly(spec.zeros))
    expected = np.zeros(30)
    expected[1 : 1 + len(num)] = num
    expected *= spec.target_norm / np.linalg.norm(expected)
    np.testing.assert_allclose(h, expected, rtol=1e-12, atol=1e-15)
    assert np.all(h[1 + len(num):] == 0)


def test_recursion_matches_partial_fractions():
    spec = random_module_spec(RngStream(3))
    h = spec.raw_impulse_response(60)
    # direct evaluation of the rational function's power series via polynomial division
    num = np.concatenate([[0.0], np.real(np.poly(spec.zeros))])
    den = np.real(np.poly(spec.poles))
    series = np.zeros(60)
    rem = np.concatenate([num, np.zeros(60)])
    for i in range(60):
        series[i] = rem[i] / den[0]
        rem[i : i + len(den)] -= series[i] * den
    np.testing.assert_allclose(h, series, rtol=1e-9, atol=1e-12)


def test_m_too_short():
    with pytest.raises(ParameterError):
        random_impulse_response(10, RngStream(0))


def test_inputs():
    w = generate_input("white", 10**6, RngStream(4))
    assert abs(w.var() - 1.0) < 0.01
    x = generate_input("lowpass", 10**6, RngStream(5))
    assert x[0] == 0.0
    assert abs(x.var() - 1 / (1 - 0.81)) < 0.1
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1] - 0.9) < 0.01
    with pytest.raises(ParameterError):
        generate_input("pink", 10, RngStream(0))


def test_empty_network():
    ds = synthesize_dataset(10, 0, 200, 20, 10.0, "white", RngStream(6))
    assert not ds.truth.any() and ds.active_set == []
    assert ds.sigma2_true == 1.0
    assert abs(ds.outputs.var() - 1.0) < 0.25


def test_full_configuration_snr():
    ds = synthesize_dataset(50, 3, 1000, 200, 10.0, "white", RngStream(7))
    assert ds.inputs.shape == (50, 1199) and ds.outputs.shape == (1000,)
    z = predict(ds.regressors(), ds.truth)
    assert np.var(z) / ds.sigma2_true == pytest.approx(10.0, rel=1e-9)
    norms = np.linalg.norm(ds.truth, axis=1)
    assert len(ds.active_set) == 3
    for k in range(50):
        if k in ds.active_set:
            assert 0.2 <= norms[k] <= 1.0
        else:
            assert norms[k] == 0.0


def test_replay_is_bitwise_identical():
    a = synthesize_dataset(8, 2, 100, 20, 5.0, "lowpass", RngStream(8))
    b = synthesize_dataset(8, 2, 100, 20, 5.0, "lowpass", RngStream(8))
    for name in ("inputs", "outputs", "truth"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.active_set == b.active_set and a.sigma2_true == b.sigma2_true


def test_invalid_q():
    with pytest.raises(ParameterError):
        synthesize_dataset(3, 4, 100, 20, 10.0, "white", RngStream(0))
    ds = synthesize_dataset(5, 2, 50, 20, 10.0, "white", RngStream(0), active=[0, 1])
    assert ds.active_set == [0, 1]
