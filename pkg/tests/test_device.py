import math
import warnings
from statistics import NormalDist

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macpix.device import (
    FeFETParams,
    MosfetParams,
    PartialResetError,
    PhotodiodeParams,
    ProtocolWarning,
    effective_overdrive,
    fefet_conductance,
    load_params,
    mosfet_current,
    mosfet_current_derivs,
    new_fefet,
    photodiode_delta_v,
    program,
    remnant_polarization,
    reset_outer_loop,
)

pvas = st.floats(0.0, 5.0, allow_nan=False)


def programmed(pva, **kw):
    fresh = new_fefet(FeFETParams(**kw))
    return program(reset_outer_loop(fresh, -1.5 * max(fresh.domain_vc)), pva)


def scrambled(seed):
    # arbitrary history: a few program pulses without resets
    st_ = new_fefet()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProtocolWarning)
        for k in range(1 + seed % 4):
            st_ = program(st_, 1.0 + 0.37 * ((seed * 7 + k) % 9))
    return st_


class TestReset:
    def test_full_switching(self):
        s = reset_outer_loop(scrambled(3), -4.0)
        assert remnant_polarization(s) == -s.params.p_s

    def test_idempotent(self):
        s = reset_outer_loop(new_fefet(), -4.0)
        assert reset_outer_loop(s, -4.0) == s

    def test_history_erasure(self):
        a = reset_outer_loop(scrambled(1), -4.0)
        b = reset_outer_loop(scrambled(6), -4.0)
        assert a.domain_up == b.domain_up

    def test_partial_reset_rejected(self):
        s = programmed(5.0)
        with pytest.raises(PartialResetError):
            reset_outer_loop(s, -1.0)


class TestProgram:
    def test_zero_pva_is_noop(self):
        assert remnant_polarization(programmed(0.0)) == -1.0

    def test_median_gives_half(self):
        p = FeFETParams()
        s = programmed(p.e_c_mean * p.t_fe)
        assert s.f_up == pytest.approx(0.5, abs=1 / p.n_domains)
        assert remnant_polarization(s) == pytest.approx(0.0, abs=2 / p.n_domains)

    def test_saturation(self):
        assert remnant_polarization(programmed(5.0)) == 1.0

    def test_operating_range_spans_transition(self):
        assert remnant_polarization(programmed(1.5)) < remnant_polarization(programmed(2.8))
        assert programmed(1.5).f_up <= 0.05
        assert programmed(2.8).f_up >= 0.95

    def test_exact_switching_set(self):
        s = programmed(2.0)
        assert s.domain_up == tuple(vc < 2.0 for vc in s.domain_vc)

    def test_negative_pva(self):
        with pytest.raises(ValueError):
            program(new_fefet(), -0.1)

    def test_without_reset_warns(self):
        s = programmed(2.0)
        with pytest.warns(ProtocolWarning):
            program(s, 2.5)

    @settings(max_examples=300)
    @given(pvas, pvas)
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert remnant_polarization(programmed(lo)) <= remnant_polarization(programmed(hi))

    @given(st.floats(1.5, 2.8))
    def test_thickness_shift(self, pva):
        assert programmed(pva, t_fe=3.0).f_up <= programmed(pva, t_fe=2.0).f_up

    @pytest.mark.parametrize("n", [50, 200, 1000])
    @pytest.mark.parametrize("pva", [1.2, 1.8, 2.1, 2.4, 3.0])
    def test_gaussian_cdf_limit(self, n, pva):
        p = FeFETParams(n_domains=n)
        expected = NormalDist(p.e_c_mean * p.t_fe, p.e_c_sigma * p.t_fe).cdf(pva)
        assert abs(programmed(pva, n_domains=n).f_up - expected) <= 1 / n


class TestPolarization:
    def test_all_down(self):
        assert remnant_polarization(new_fefet()) == -1.0

    def test_half_up(self):
        s = new_fefet(FeFETParams(n_domains=4))
        s = type(s)(s.params, (True, True, False, False), s.domain_vc)
        assert remnant_polarization(s) == 0.0

    def test_three_quarters(self):
        s = new_fefet(FeFETParams(n_domains=4, p_s=1.0))
        s = type(s)(s.params, (True, True, True, False), s.domain_vc)
        assert remnant_polarization(s) == 0.5


class TestConductance:
    def test_off_floor(self):
        # read gate below the fully-reset threshold
        s = reset_outer_loop(new_fefet(FeFETParams(v_read=-0.5, g_min=1e-9)), -4.0)
        assert fefet_conductance(s) == pytest.approx(1e-9, rel=1e-3)

    def test_rises_with_pva(self):
        assert fefet_conductance(programmed(1.5)) < fefet_conductance(programmed(2.8))

    @pytest.mark.parametrize("pva", [2.0, 2.3, 2.6])
    def test_thicker_film_lower_conductance(self, pva):
        assert fefet_conductance(programmed(pva, t_fe=2.0)) > fefet_conductance(programmed(pva, t_fe=3.0))

    def test_reads_do_not_mutate(self):
        s = programmed(2.2)
        snapshot = (s.domain_up, s.domain_vc)
        for _ in range(10):
            fefet_conductance(s)
            remnant_polarization(s)
        assert (s.domain_up, s.domain_vc) == snapshot


NMOS = MosfetParams(polarity="n", v_th=0.35, beta=200e-6, lambda_=0.0, subthreshold_slope=80.0)
PMOS = MosfetParams(polarity="p", v_th=-0.35, beta=200e-6, lambda_=0.1, subthreshold_slope=80.0)


class TestMosfet:
    def test_cutoff(self):
        assert abs(mosfet_current(NMOS, -0.1, 0.0, 1.0)) < 1e-12
        assert abs(mosfet_current(PMOS, 1.1, 1.0, 0.0)) < 1e-12

    def test_zero_bias(self):
        assert mosfet_current(NMOS, 1.0, 0.3, 0.3) == 0.0
        assert mosfet_current(PMOS, 0.0, 0.7, 0.7) == 0.0

    def test_triode_closed_form(self):
        i = mosfet_current(NMOS, 0.75, 0.0, 0.05)
        assert i == pytest.approx(200e-6 * (0.4 * 0.05 - 0.05 ** 2 / 2), rel=1e-12)
        assert i == pytest.approx(3.75e-6, rel=1e-12)

    def test_saturation_closed_form(self):
        m = MosfetParams("n", 0.35, 200e-6, 0.1, 80.0)
        assert mosfet_current(m, 0.75, 0.0, 1.0) == pytest.approx(0.5 * 200e-6 * 0.16 * 1.1, rel=1e-12)

    def test_polarity_sign(self):
        assert mosfet_current(NMOS, 1.0, 0.0, 1.0) > 0
        assert mosfet_current(PMOS, 0.0, 1.0, 0.0) < 0

    def test_pmos_mirrors_nmos(self):
        n = MosfetParams("n", 0.35, 200e-6, 0.1, 80.0)
        assert mosfet_current(PMOS, 0.2, 1.0, 0.4) == pytest.approx(-mosfet_current(n, 0.8, 0.0, 0.6), rel=1e-15)

    def test_subthreshold_slope(self):
        i1 = mosfet_current(NMOS, 0.10, 0.0, 1.0)
        i2 = mosfet_current(NMOS, 0.18, 0.0, 1.0)
        assert math.log10(i2 / i1) == pytest.approx(1.0, rel=1e-9)

    @settings(max_examples=200)
    @given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.0), st.floats(-0.5, 1.5), st.floats(0.0, 0.3))
    def test_monotone_in_overdrive(self, vg, vs, vd, dv):
        a = mosfet_current(NMOS, vg, vs, vd)
        b = mosfet_current(NMOS, vg + dv, vs, vd)
        if vd >= vs:
            assert b >= a
        else:
            assert b <= a

    @settings(max_examples=200)
    @given(st.floats(-0.5, 1.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
           st.sampled_from([NMOS, PMOS]))
    def test_derivatives_match_finite_differences(self, vg, vs, vd, m):
        h = 1e-7
        _, dg, ds, dd = mosfet_current_derivs(m, vg, vs, vd)
        fd = [
            (mosfet_current(m, vg + h, vs, vd) - mosfet_current(m, vg - h, vs, vd)) / (2 * h),
            (mosfet_current(m, vg, vs + h, vd) - mosfet_current(m, vg, vs - h, vd)) / (2 * h),
            (mosfet_current(m, vg, vs, vd + h) - mosfet_current(m, vg, vs, vd - h)) / (2 * h),
        ]
        for an, num in zip((dg, ds, dd), fd):
            assert an == pytest.approx(num, rel=1e-4, abs=1e-10)

    def test_continuous_at_knee(self):
        knee = 2 * 80e-3 / math.log(10)
        lo, _ = effective_overdrive(knee - 1e-12, 80.0)
        hi, _ = effective_overdrive(knee + 1e-12, 80.0)
        assert hi - lo == pytest.approx(2e-12, rel=1e-3)

    def test_bad_params(self):
        with pytest.raises(ValueError):
            MosfetParams(beta=0.0)
        with pytest.raises(ValueError):
            MosfetParams(subthreshold_slope=-1.0)
        with pytest.raises(ValueError):
            MosfetParams(polarity="x")


class TestPhotodiode:
    def test_dark(self):
        assert photodiode_delta_v(0.0, 1e-3, PhotodiodeParams(1e-14, 0.0), 1.0) == 0.0

    def test_direct_law(self):
        pd = PhotodiodeParams(c_pd=1e-14)
        assert photodiode_delta_v(3e-12, 1e-3, pd, 1.0) == pytest.approx(0.3, rel=1e-12)

    def test_clamp(self):
        pd = PhotodiodeParams(c_pd=1e-14)
        assert photodiode_delta_v(2e-11, 1e-3, pd, 1.0) == 1.0

    @given(st.floats(0, 1e-11), st.floats(0, 2.0))
    def test_linear_below_clamp(self, i, s):
        pd = PhotodiodeParams(c_pd=1e-14)
        base = photodiode_delta_v(i, 1e-4, pd, 10.0)
        if base * max(s, 1) < 10.0:
            assert photodiode_delta_v(i * s, 1e-4, pd, 10.0) == pytest.approx(s * base, rel=1e-12, abs=1e-300)

    def test_negative_inputs(self):
        with pytest.raises(ValueError):
            photodiode_delta_v(-1e-12, 1.0, PhotodiodeParams(), 1.0)


def test_param_invariants():
    with pytest.raises(ValueError):
        FeFETParams(n_domains=0)
    with pytest.raises(ValueError):
        FeFETParams(t_fe=0.0)
    with pytest.raises(ValueError):
        PhotodiodeParams(c_pd=0.0)


def test_json_round_trip(tmp_path):
    import json

    doc = {"fefet": {"n_domains": 50, "t_fe": 3.0},
           "mosfet": {"polarity": "p", "v_th": -0.4, "beta": 1e-4, "lambda": 0.05, "subthreshold_slope": 70},
           "photodiode": {"c_pd": 2e-15, "i_dark": 1e-15}}
    path = tmp_path / "dev.json"
    path.write_text(json.dumps(doc))
    out = load_params(path)
    assert out["fefet"].n_domains == 50 and out["fefet"].t_fe == 3.0
    assert out["mosfet"].lambda_ == 0.05
    assert out["mosfet"].to_dict()["lambda"] == 0.05
    assert out["photodiode"].i_dark == 1e-15
