import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lisce.channel import ChannelParams, ChannelRealization, assistant_channel, sample_channel
from lisce.errors import DimensionError, InvalidParameterError
from lisce.numerics import RandomStream

amps = st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=16)


def _draws(n, params=ChannelParams(), seed=0):
    rng = RandomStream(seed)
    return [sample_channel(params, rng) for _ in range(n)]


class TestAssistantChannel:
    def test_inner_product(self):
        assert assistant_channel([1, 2], [3, 4]) == 11

    def test_zeros(self):
        assert assistant_channel([0, 0, 0], [5, 1, 2]) == 0

    def test_ones(self):
        assert assistant_channel([1, 1, 1, 1], [1, 1, 1, 1]) == 4

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            assistant_channel([1, 2], [1, 2, 3])

    def test_negative(self):
        with pytest.raises(InvalidParameterError):
            assistant_channel([1, -2], [1, 2])

    @given(st.data())
    def test_symmetric_and_homogeneous(self, data):
        f = np.array(data.draw(amps))
        g = np.array(data.draw(st.lists(st.floats(0, 100), min_size=len(f), max_size=len(f))))
        c = data.draw(st.floats(0.01, 100))
        base = assistant_channel(f, g)
        assert assistant_channel(g, f) == pytest.approx(base, rel=1e-12, abs=1e-300)
        assert assistant_channel(c * f, g) == pytest.approx(c * base, rel=1e-12, abs=1e-300)
        assert assistant_channel(f, c * g) == pytest.approx(c * base, rel=1e-12, abs=1e-300)


class TestChannelParams:
    def test_defaults(self):
        p = ChannelParams()
        assert (p.sigma_h2, p.sigma_f2, p.sigma_g2, p.n_elements) == (1 / 64, 1 / 25, 1 / 9, 32)

    @pytest.mark.parametrize(
        "kwargs", [{"sigma_f2": 0}, {"sigma_g2": -1}, {"sigma_h2": -0.1}, {"n_elements": 0}, {"sigma_f2": math.inf}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            ChannelParams(**kwargs)


class TestChannelRealization:
    def test_rejects_inconsistent_eta(self):
        with pytest.raises(InvalidParameterError):
            ChannelRealization(0.1j, [1.0, 2.0], [3.0, 4.0], 11.0 + 1e-9)

    def test_accepts_consistent_eta(self):
        r = ChannelRealization(0.1j, [1.0, 2.0], [3.0, 4.0], 11.0)
        assert r.eta == 11.0 and r.n_elements == 2 and r.assistant_dominates

    def test_from_amplitudes(self):
        r = ChannelRealization.from_amplitudes(2.0, [1, 1], [1, 1])
        assert r.eta == 2.0 and not r.assistant_dominates


class TestSampleChannel:
    def test_reference_size(self):
        ch = sample_channel(ChannelParams(), RandomStream(1))
        assert ch.f_amp.shape == ch.g_amp.shape == (32,)
        assert ch.eta > 0
        assert np.all(ch.f_amp >= 0) and np.all(ch.g_amp >= 0)
        assert ch.eta == pytest.approx(assistant_channel(ch.f_amp, ch.g_amp), rel=1e-12)

    def test_zero_direct_variance(self):
        for ch in _draws(20, ChannelParams(sigma_h2=0.0)):
            assert ch.h == 0

    def test_deterministic(self):
        a = sample_channel(ChannelParams(), RandomStream(4, 9))
        b = sample_channel(ChannelParams(), RandomStream(4, 9))
        assert a.h == b.h and a.eta == b.eta
        np.testing.assert_array_equal(a.f_amp, b.f_amp)

    def test_statistics(self):
        draws = _draws(100_000, seed=123)
        h = np.array([d.h for d in draws])
        eta = np.array([d.eta for d in draws])
        assert abs(np.mean(np.abs(h) ** 2) / (1 / 64) - 1) < 0.03
        # E|f| E|g| N with Rayleigh means sqrt(pi var)/2
        expected_eta = 32 * (math.sqrt(math.pi / 25) / 2) * (math.sqrt(math.pi / 9) / 2)
        assert expected_eta == pytest.approx(8 * math.pi / 15)
        assert abs(np.mean(eta) / expected_eta - 1) < 0.02
        assert np.mean(eta[:10_000] > np.abs(h[:10_000])) > 0.99
