import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoex import config
from qcoex.errors import DomainError, UndefinedVisibilityError
from qcoex.planner import ROUTINGS
from qcoex.rates import (ArmModel, CoincidenceConfig, DetectorModel, cascade_accidentals, coincidence_rates,
                         filter_window_scaling, mu_for_ccr, mu_from_visibility, singles_rate,
                         visibility_vs_ccr_sweep)
from qcoex.source import ChannelPair, EppSource

NOISELESS = DetectorModel(0.92, 0.0)


def arms(noise_s=0.0, noise_i=0.0, det=NOISELESS, loss=(20.0, 10.0)):
    return ArmModel(loss[0], noise_s, det), ArmModel(loss[1], noise_i, det)


class TestSingles:
    def test_darks_only(self):
        assert singles_rate(10.0, DetectorModel(0.9, 123.0), 0.0, EppSource(mu=0.0)) == 123.0

    def test_noise_linear(self):
        det = DetectorModel(0.9, 100.0)
        a = singles_rate(10.0, det, 1000.0, EppSource())
        b = singles_rate(10.0, det, 3000.0, EppSource())
        assert b - a == pytest.approx(0.9 * 2000.0)

    def test_pair_singles_arithmetic(self):
        assert singles_rate(19.7, NOISELESS, 0.0, EppSource(mu=0.01)) == pytest.approx(4.10e4, rel=0.005)

    def test_negative_loss(self):
        with pytest.raises(DomainError):
            singles_rate(-1.0, NOISELESS, 0.0, EppSource())

    def test_invariants(self):
        with pytest.raises(DomainError):
            DetectorModel(1.5)
        with pytest.raises(DomainError):
            DetectorModel(0.5, -1.0)
        with pytest.raises(DomainError):
            CoincidenceConfig(0.0)
        with pytest.raises(DomainError):
            ArmModel(-1.0)


class TestCoincidences:
    def test_noiseless_visibility(self):
        s, i = arms()
        p = coincidence_rates(EppSource(mu=0.02), s, i)
        assert p.visibility_HV == pytest.approx(1 / 1.02, rel=1e-12)
        assert p.mu_effective == pytest.approx(0.02, rel=1e-9)

    @pytest.mark.parametrize("mu", [0.001, 0.01, 0.1])
    def test_noiseless_law(self, mu):
        s, i = arms()
        assert coincidence_rates(EppSource(mu=mu), s, i).visibility_HV == pytest.approx(1 / (1 + mu), rel=1e-12)

    def test_mu_from_visibility(self):
        assert mu_from_visibility(0.95) == pytest.approx(0.0526, abs=1e-4)
        with pytest.raises(DomainError):
            mu_from_visibility(0.0)

    def test_decomposition(self):
        s, i = arms(3e4, 1e3, DetectorModel(0.92, 100.0))
        p = coincidence_rates(EppSource(mu=0.02), s, i)
        assert p.ccr == pytest.approx(p.parallel_rate + p.orthogonal_rate)
        assert p.visibility_HV == pytest.approx(p.true_coincidences / p.ccr)
        assert p.car == pytest.approx(p.parallel_rate / p.orthogonal_rate)
        assert p.delayed_window_accidentals == pytest.approx(p.accidentals + 2 * p.multipair_orthogonal)
        assert p.noise_fraction == pytest.approx(1 - p.visibility_HV)

    def test_undefined(self):
        s, i = arms()
        with pytest.raises(UndefinedVisibilityError):
            coincidence_rates(EppSource(mu=0.0), s, i)

    @given(st.floats(1e-4, 0.3), st.floats(0.0, 1e6), st.floats(0.0, 1e6),
           st.floats(0.0, 40.0), st.floats(0.0, 40.0), st.floats(0.0, 1e3))
    def test_bounds(self, mu, ns, ni, ls, li, dark):
        det = DetectorModel(0.9, dark)
        p = coincidence_rates(EppSource(mu=mu), ArmModel(ls, ns, det), ArmModel(li, ni, det))
        assert 0.0 <= p.visibility_HV <= 1.0
        for v in (p.singles_signal, p.singles_idler, p.true_coincidences, p.accidentals,
                  p.multipair_orthogonal):
            assert v >= 0.0

    @given(st.floats(1e-4, 0.3), st.floats(0.0, 1e6), st.floats(1.0, 1e5))
    def test_visibility_nonincreasing_in_noise(self, mu, noise, extra):
        det = DetectorModel(0.9, 100.0)
        src = EppSource(mu=mu)
        idl = ArmModel(10.0, 2e3, det)
        v1 = coincidence_rates(src, ArmModel(20.0, noise, det), idl).visibility_HV
        v2 = coincidence_rates(src, ArmModel(20.0, noise + extra, det), idl).visibility_HV
        assert v2 <= v1 + 1e-15


class TestSweep:
    def test_noiseless_monotone(self):
        s, i = arms()
        pts = visibility_vs_ccr_sweep(EppSource(), s, i, np.geomspace(1e-3, 0.2, 30))
        ccr = [p.ccr_ccps for p in pts]
        vis = [p.visibility for p in pts]
        assert all(b > a for a, b in zip(ccr, ccr[1:]))
        assert all(b < a for a, b in zip(vis, vis[1:]))

    def test_rise_and_fall_with_noise(self):
        s, i = arms(2e5, 0.0, DetectorModel(0.92, 100.0))
        pts = visibility_vs_ccr_sweep(EppSource(), s, i, np.geomspace(1e-4, 0.3, 60))
        vis = np.array([p.visibility for p in pts])
        k = int(np.argmax(vis))
        assert 0 < k < vis.size - 1

    def test_sorted_output_and_bad_mu(self):
        s, i = arms()
        pts = visibility_vs_ccr_sweep(EppSource(), s, i, [0.1, 0.01, 0.05])
        assert [p.mu for p in pts] == [0.01, 0.05, 0.1]
        with pytest.raises(DomainError):
            visibility_vs_ccr_sweep(EppSource(), s, i, [0.0])

    def test_1313_suffers_at_low_mu(self):
        cfg = config.load_config("fig3")
        sc = config.build_scenario(cfg, 18.1)
        pair = config.build_pair(cfg)
        v87 = sc.predict(pair, ROUTINGS["signal-lit"], 0.01).visibility_HV
        v13 = sc.predict(pair, ROUTINGS["idler-lit"], 0.01).visibility_HV
        assert v87 > 0.95 and v13 < 0.9
        assert 0.99 - v13 > 5 * (0.99 - v87)


class TestMuForCcr:
    def test_round_trip(self):
        s, i = arms(1e4, 0.0, DetectorModel(0.92, 100.0))
        mu = mu_for_ccr(EppSource(), s, i, 30.1)
        assert coincidence_rates(EppSource(mu=mu), s, i).ccr == pytest.approx(30.1, rel=1e-9)

    def test_unreachable(self):
        s, i = arms(loss=(60.0, 60.0))
        with pytest.raises(DomainError):
            mu_for_ccr(EppSource(), s, i, 1e6)


class TestCascade:
    def test_product_law(self):
        r = cascade_accidentals([1e5, 2e5, 3e5], 1000.0)
        assert r.rate == pytest.approx(1e5 * 2e5 * 3e5 * 1e-18)

    def test_halving_both(self):
        a = cascade_accidentals([1e5, 1e5], 600.0).rate
        b = cascade_accidentals([5e4, 5e4], 600.0).rate
        assert a / b == pytest.approx(4.0)

    def test_k_orders(self):
        r = cascade_accidentals([1e5] * 4, 200.0, [10.0] * 4)
        assert r.reduction == pytest.approx(1e4)
        assert r.rate / r.reduced_rate == pytest.approx(1e4)

    @given(st.integers(0, 4), st.floats(1.5, 20.0))
    def test_m_to_the_k(self, k, m):
        red = [m] * k + [1.0] * (4 - k)
        r = cascade_accidentals([1e5, 2e5, 3e5, 4e5], 300.0, red)
        assert r.rate / r.reduced_rate == pytest.approx(m ** k, rel=1e-9)

    def test_errors(self):
        with pytest.raises(DomainError):
            cascade_accidentals([1.0], 1.0)
        with pytest.raises(DomainError):
            cascade_accidentals([1.0, -1.0], 1.0)
        with pytest.raises(DomainError):
            cascade_accidentals([1.0, 1.0], 1.0, [1.0])


class TestFilterWindow:
    def test_values(self):
        assert filter_window_scaling(50, 5, 600, 100) == 60
        assert filter_window_scaling(50, 50, 600, 600) == 1
        assert filter_window_scaling(50, 25, 600, 600) == 2

    def test_errors(self):
        with pytest.raises(DomainError):
            filter_window_scaling(50, 0, 600, 100)


class TestScenario:
    def test_lit_arm_collects_noise(self):
        cfg = config.load_config("fig3")
        sc = config.build_scenario(cfg)
        sig, idl = sc.arms(config.build_pair(cfg), ROUTINGS["signal-lit"])
        assert sig.noise_cps > 0 and idl.noise_cps == 0

    def test_dark_network_has_no_noise(self):
        cfg = config.load_config("fig3")
        sc = config.build_scenario(cfg, -math.inf)
        sig, idl = sc.arms(config.build_pair(cfg), ROUTINGS["signal-lit"])
        assert sig.noise_cps == 0 and idl.noise_cps == 0

    def test_with_power_and_mu(self):
        cfg = config.load_config("fig3")
        sc = config.build_scenario(cfg, 14.0)
        pair = config.build_pair(cfg)
        hi = sc.with_power(18.1).arms(pair, ROUTINGS["signal-lit"])[0].noise_cps
        lo = sc.arms(pair, ROUTINGS["signal-lit"])[0].noise_cps
        assert hi / lo == pytest.approx(10 ** 0.41, rel=1e-9)
        assert sc.with_mu(0.05).predict(pair, ROUTINGS["signal-lit"]).mu == 0.05

    def test_routing_moves_noise_between_arms(self):
        cfg = config.load_config("fig3")
        sc = config.build_scenario(cfg)
        pair = ChannelPair.from_signal(1287.0)
        a = sc.predict(pair, ROUTINGS["signal-lit"])
        b = sc.predict(pair, ROUTINGS["idler-lit"])
        assert a.noise_signal > 0 and a.noise_idler == 0
        assert b.noise_idler > 0 and b.noise_signal == 0
