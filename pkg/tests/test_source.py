import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoex.errors import DomainError
from qcoex.raman import C_NM_THZ
from qcoex.source import (ChannelPair, EppSource, QuantumChannel, channel_grid, conjugate_wavelength,
                          energy_mismatch_ghz, relative_mu, spectral_weight)


class TestConjugate:
    def test_degenerate(self):
        assert conjugate_wavelength(1300.0, 1300.0) == pytest.approx(1300.0)

    def test_1287(self):
        assert conjugate_wavelength(1287.0, 1300.0) == pytest.approx(1313.27, abs=0.01)

    def test_1282(self):
        assert conjugate_wavelength(1282.0, 1300.0) == pytest.approx(1318.51, abs=0.01)

    @given(st.floats(1262.0, 1340.0))
    def test_involution(self, lam):
        assert conjugate_wavelength(conjugate_wavelength(lam, 1300.0), 1300.0) == pytest.approx(lam, rel=1e-12)

    def test_unphysical(self):
        with pytest.raises(DomainError):
            conjugate_wavelength(600.0, 1300.0)


class TestInvariants:
    def test_source(self):
        for kw in ({"mu": -0.1}, {"rep_rate": 0.0}, {"joint_fwhm": 0.0}):
            with pytest.raises(DomainError):
                EppSource(**kw)

    def test_channel(self):
        with pytest.raises(DomainError):
            QuantumChannel(1550.0)
        with pytest.raises(DomainError):
            QuantumChannel(1310.0, 0.0)

    def test_energy_conservation(self):
        with pytest.raises(DomainError):
            ChannelPair(QuantumChannel(1287.0), QuantumChannel(1320.0))
        ChannelPair.from_signal(1287.0)


class TestWeight:
    def test_center_is_maximum(self):
        src = EppSource()
        center = spectral_weight(src, ChannelPair.from_signal(1300.0))
        for lam in (1282.0, 1290.0, 1299.0):
            assert spectral_weight(src, ChannelPair.from_signal(lam)) < center

    def test_closer_pair_brighter(self):
        src = EppSource()
        assert spectral_weight(src, ChannelPair.from_signal(1287.0)) > spectral_weight(
            src, ChannelPair.from_signal(1282.0))

    def test_bandwidth_linear_at_center(self):
        src = EppSource()
        w50 = spectral_weight(src, ChannelPair.from_signal(1300.0, bandwidth=50.0))
        w100 = spectral_weight(src, ChannelPair.from_signal(1300.0, bandwidth=100.0))
        assert w100 / w50 == pytest.approx(2.0, rel=1e-3)

    def test_relative_mu(self):
        src = EppSource(mu=0.01)
        ref = ChannelPair.from_signal(1287.0)
        assert relative_mu(src, ref, ref) == pytest.approx(0.01)
        assert relative_mu(src, ChannelPair.from_signal(1282.0), ref) < 0.01
        flat = EppSource(mu=0.01, flat_spectrum=True)
        assert relative_mu(flat, ChannelPair.from_signal(1282.0), ref) == 0.01


class TestGrid:
    def test_default_band(self):
        grid = channel_grid(1282.0, 1318.0, 50.0)
        assert grid
        for p in grid:
            assert abs(energy_mismatch_ghz(p.signal.center, p.idler.center, 1300.0)) < 1e-6
            assert p.signal.center < 1300.0 < p.idler.center
            assert 1282.0 <= p.signal.center and p.idler.center <= 1318.0

    def test_contains_1287_pair(self):
        width = 1287.0 ** 2 * 50e-3 / C_NM_THZ  # one channel, nm
        grid = channel_grid(1282.0, 1318.0, 50.0)
        assert min(abs(p.signal.center - 1287.0) for p in grid) <= width

    def test_spacing(self):
        grid = channel_grid(1282.0, 1318.0, 50.0)
        nu = [C_NM_THZ / p.signal.center for p in grid]
        assert all(b - a == pytest.approx(0.05, abs=1e-9) for a, b in zip(nu, nu[1:]))

    def test_empty(self):
        assert channel_grid(1300.0, 1300.0, 50.0) == []

    def test_one_sided_band(self):
        grid = channel_grid(1282.0, 1290.0, 100.0)
        assert grid and all(1282.0 <= p.signal.center <= 1290.0 for p in grid)

    @given(st.floats(1262.0, 1298.0), st.floats(25.0, 400.0))
    def test_grid_property(self, lo, spacing):
        for p in channel_grid(lo, conjugate_wavelength(lo, 1300.0), spacing):
            assert abs(energy_mismatch_ghz(p.signal.center, p.idler.center, 1300.0)) < 1e-6
