"""Composed RPDC behavior: routing, extinction, axis checks, sweeps, files."""

import json
import math

import numpy as np
import pytest

from rpdcsim.birefringence import RotatedRetarder, retarder_jones
from rpdcsim.coupling import CouplerParams
from rpdcsim.device import (
    RpdcDevice,
    axis_port_powers,
    device_from_dict,
    device_to_dict,
    extinction_db,
    extinction_ratios,
    load_device,
    make_pdc_device,
    port_transfer_matrices,
    rpdc_transfer,
    save_device,
    simulate_axis_check,
    sweep_coupling_length,
)
from rpdcsim.polarization import JonesVector, cardinal_state, rotation_deg


def ideal_device(alpha=45.0, retardance=math.pi, t=1.0):
    # quarter-wave slow / half-wave fast arguments at 23 + 5.5 mm
    return make_pdc_device(alpha, math.pi / 19, 2 * math.pi / 57, 23.0, 5.5,
                           t, retardance)


def shipped_device():
    return load_device("data/device_45deg.json")


def random_device(rng):
    return make_pdc_device(rng.uniform(0, 180), rng.uniform(0.1, 0.3),
                           rng.uniform(0.0, 0.1), rng.uniform(0, 40),
                           rng.uniform(0, 8), rng.uniform(0.2, 1.0),
                           rng.uniform(0, 2 * math.pi))


class TestConstruction:
    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            RpdcDevice(0.0,
                       CouplerParams.symmetric(0.0, 0.2, 23.0),
                       CouplerParams.symmetric(0.0, 0.1, 22.0))

    def test_coupling_ordering(self):
        with pytest.raises(ValueError, match="slow"):
            RpdcDevice(0.0,
                       CouplerParams.symmetric(0.0, 0.1, 23.0),
                       CouplerParams.symmetric(0.0, 0.2, 23.0))

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            make_pdc_device(180.0, 0.2, 0.1, 23.0)

    def test_transmittance_range(self):
        with pytest.raises(ValueError):
            make_pdc_device(45.0, 0.2, 0.1, 23.0,
                            amplitude_transmittance=1.2)

    def test_negative_bend(self):
        with pytest.raises(ValueError):
            make_pdc_device(45.0, 0.2, 0.1, 23.0, bend_length_mm=-1.0)

    def test_bend_phases_scale_with_k(self):
        dev = make_pdc_device(45.0, 0.2, 0.1, 23.0, bend_length_mm=5.5)
        assert dev.coupler_slow.bend_phase_rad == pytest.approx(1.1,
                                                                abs=1e-15)
        assert dev.coupler_fast.bend_phase_rad == pytest.approx(0.55,
                                                                abs=1e-15)


class TestTransfer:
    def test_zero_length_bar_passthrough(self):
        dev = make_pdc_device(30.0, 0.2, 0.1, 0.0)
        v = cardinal_state("D")
        out = rpdc_transfer(dev, v)
        assert out.port_t.power == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(out.port_r.as_array(), v.as_array(), atol=1e-12)

    def test_degenerate_coupler_polarization_insensitive(self):
        k = 0.15
        dev = RpdcDevice(0.0, CouplerParams.symmetric(0.0, k, 10.0),
                         CouplerParams.symmetric(0.0, k, 10.0))
        want_t = math.sin(k * 10.0) ** 2
        for label in ("H", "V", "D", "R"):
            out = rpdc_transfer(dev, cardinal_state(label))
            assert out.port_t.power == pytest.approx(want_t, abs=1e-12)
            assert out.port_r.power == pytest.approx(1 - want_t, abs=1e-12)

    def test_ideal_routing_d_and_a(self):
        # slow axis at 45: D crosses fully, A stays in the bar port
        dev = ideal_device()
        out_d = rpdc_transfer(dev, cardinal_state("D"))
        assert out_d.port_t.power == pytest.approx(1.0, abs=1e-12)
        assert out_d.port_r.power == pytest.approx(0.0, abs=1e-12)
        out_a = rpdc_transfer(dev, cardinal_state("A"))
        assert out_a.port_t.power == pytest.approx(0.0, abs=1e-12)
        assert out_a.port_r.power == pytest.approx(1.0, abs=1e-12)

    def test_energy_conservation(self):
        rng = np.random.default_rng(41)
        for _ in range(300):
            dev = random_device(rng)
            v = JonesVector(*(rng.normal(size=2) + 1j * rng.normal(size=2)))
            out = rpdc_transfer(dev, v)
            want = dev.amplitude_transmittance ** 2 * v.power
            assert out.total_power == pytest.approx(want, rel=1e-10)

    def test_frame_covariance(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            alpha = rng.uniform(0, 180)
            dev = make_pdc_device(alpha, 0.2, 0.1, 23.0, 5.5, 0.9, 2.5)
            dev0 = make_pdc_device(0.0, 0.2, 0.1, 23.0, 5.5, 0.9, 2.5)
            v = JonesVector(*(rng.normal(size=2) + 1j * rng.normal(size=2)))
            out = rpdc_transfer(dev, v)
            rot = rotation_deg(alpha)
            vin0 = JonesVector.from_array(rotation_deg(-alpha) @ v.as_array())
            out0 = rpdc_transfer(dev0, vin0)
            assert np.allclose(out.port_t.as_array(),
                               rot @ out0.port_t.as_array(), atol=1e-12)
            assert np.allclose(out.port_r.as_array(),
                               rot @ out0.port_r.as_array(), atol=1e-12)

    def test_retarder_coupler_commutation(self):
        # the residual retarder and the per-port coupler action are
        # simultaneously diagonal on the device axes, so composition
        # order cannot matter; also pins the slow axis to alpha
        dev = make_pdc_device(27.0, 0.2, 0.1, 17.0, 3.0, 1.0, 1.9)
        j_t, j_r = port_transfer_matrices(dev)
        bare = make_pdc_device(27.0, 0.2, 0.1, 17.0, 3.0, 1.0, 0.0)
        c_t, c_r = port_transfer_matrices(bare)
        # slow axis at 27 deg = fast axis of the same retarder at 117
        w = retarder_jones(RotatedRetarder(117.0, 1.9))
        for j, c in ((j_t, c_t), (j_r, c_r)):
            assert np.allclose(j, c @ w, atol=1e-12)
            assert np.allclose(j, w @ c, atol=1e-12)


class TestExtinction:
    def test_db_value(self):
        assert extinction_db(0.01, 1.0) == 20.0
        assert extinction_db(1.0, 0.01) == 20.0

    def test_db_clamp(self):
        assert extinction_db(0.0, 1.0) == 150.0
        assert extinction_db(0.0, 0.0) == 0.0

    def test_db_domain(self):
        with pytest.raises(ValueError):
            extinction_db(-0.1, 1.0)

    def test_ideal_device_clamp_limited(self):
        er_t, er_r = extinction_ratios(ideal_device())
        assert er_t >= 100.0 and er_r >= 100.0
        assert er_t == pytest.approx(150.0, abs=1e-9)
        assert er_r == pytest.approx(150.0, abs=1e-9)

    def test_shipped_device_values(self):
        er_t, er_r = extinction_ratios(shipped_device())
        assert er_t == pytest.approx(16.0, abs=1e-9)
        assert er_r == pytest.approx(20.0, abs=1e-9)

    def test_transmittance_invariance(self):
        # loss cancels in the port-power ratios (all ports above clamp)
        lossy = extinction_ratios(make_pdc_device(45.0, 0.2, 0.1, 17.0, 3.0,
                                                  amplitude_transmittance=0.5))
        clean = extinction_ratios(make_pdc_device(45.0, 0.2, 0.1, 17.0, 3.0))
        assert lossy == pytest.approx(clean, abs=1e-12)

    def test_design_point_without_bends(self):
        # straight device at L = pi/(2 dk) with K_F L = pi
        dev = make_pdc_device(45.0, math.pi / 19, 2 * math.pi / 57, 28.5)
        p = axis_port_powers(dev)
        assert p.t_slow == pytest.approx(1.0, abs=1e-12)
        assert p.t_fast == pytest.approx(0.0, abs=1e-12)
        er_t, er_r = extinction_ratios(dev)
        assert er_t >= 100.0 and er_r >= 100.0


class TestAxisCheck:
    def test_45_degree_mapping(self):
        dev = ideal_device()
        want = {"H": "V", "V": "H", "D": "D", "A": "A"}
        for label, expected in want.items():
            r = simulate_axis_check(dev, label)
            assert r.expected_label == expected
            assert r.visibility == pytest.approx(1.0, abs=1e-12)
            d = abs(r.orientation_deg - r.expected_angle_deg) % 180.0
            assert min(d, 180.0 - d) < 1e-6
            assert abs(r.ellipticity_deg) < 1e-6

    def test_shipped_device_visibility(self):
        dev = shipped_device()
        r_h = simulate_axis_check(dev, "H")
        assert r_h.expected_label == "V"
        assert r_h.visibility == pytest.approx(0.9991351502732795, abs=1e-12)
        assert r_h.visibility >= 0.98
        r_d = simulate_axis_check(dev, "D")
        assert r_d.expected_label == "D"
        assert r_d.visibility == pytest.approx(1.0, abs=1e-12)

    def test_zero_alpha_identity(self):
        dev = make_pdc_device(0.0, 0.2, 0.1, 23.0, retardance_rad=math.pi)
        for label in ("H", "V"):
            r = simulate_axis_check(dev, label)
            assert r.expected_label == label
            assert r.visibility == pytest.approx(1.0, abs=1e-12)

    def test_quarter_wave_region_makes_circular(self):
        # H through a quarter-wave region with slow axis at 45 gives R
        dev = make_pdc_device(45.0, 0.2, 0.1, 23.0,
                              retardance_rad=math.pi / 2)
        r = simulate_axis_check(dev, "H")
        assert r.ellipticity_deg == pytest.approx(45.0, abs=1e-9)
        assert r.stokes.s2 == pytest.approx(1.0, abs=1e-12)

    def test_bad_label(self):
        with pytest.raises(ValueError):
            simulate_axis_check(ideal_device(), "R")


class TestSweep:
    def test_zero_length_row(self):
        dev = make_pdc_device(45.0, 0.2, 0.1, 23.0)
        (pt,) = sweep_coupling_length(dev, [0.0])
        assert pt.p_t_slow == pytest.approx(0.0, abs=1e-15)
        assert pt.p_t_fast == pytest.approx(0.0, abs=1e-15)
        assert pt.p_r_slow == pytest.approx(1.0, abs=1e-15)

    def test_zero_length_with_bends(self):
        dev = make_pdc_device(45.0, 0.2, 0.1, 23.0, bend_length_mm=5.5)
        (pt,) = sweep_coupling_length(dev, [0.0])
        assert pt.p_t_slow == pytest.approx(math.sin(0.2 * 5.5) ** 2,
                                            abs=1e-12)
        assert pt.p_t_fast == pytest.approx(math.sin(0.1 * 5.5) ** 2,
                                            abs=1e-12)

    def test_perfect_point(self):
        (pt,) = sweep_coupling_length(ideal_device(), [23.0])
        assert pt.p_t_slow == pytest.approx(1.0, abs=1e-12)
        assert pt.p_t_fast == pytest.approx(0.0, abs=1e-12)

    def test_traces_are_sin_squared(self):
        dev = ideal_device()
        ks = math.pi / 19
        kf = 2 * math.pi / 57
        for pt in sweep_coupling_length(dev, np.linspace(0, 30, 61)):
            z = pt.length_mm
            assert pt.p_t_slow == pytest.approx(
                math.sin(ks * (z + 5.5)) ** 2, abs=1e-12)
            assert pt.p_t_fast == pytest.approx(
                math.sin(kf * (z + 5.5)) ** 2, abs=1e-12)

    def test_max_separation_at_shortened_length(self):
        # grid oracle for the first maximal slow/fast separation
        dev = ideal_device()
        zs = np.arange(20.0, 26.0, 0.002)
        pts = sweep_coupling_length(dev, zs)
        sep = np.array([p.p_t_slow - p.p_t_fast for p in pts])
        assert zs[int(np.argmax(sep))] == pytest.approx(23.0, abs=0.003)
        assert sep.max() == pytest.approx(1.0, abs=1e-6)

    def test_loss_divided_out(self):
        lossy = ideal_device(t=0.5)
        (pt,) = sweep_coupling_length(lossy, [23.0])
        assert pt.p_t_slow == pytest.approx(1.0, abs=1e-12)

    def test_negative_length_rejected(self):
        with pytest.raises(ValueError):
            sweep_coupling_length(ideal_device(), [-1.0])


class TestDeviceFiles:
    def test_round_trip(self, tmp_path):
        dev = make_pdc_device(45.0, 0.21, 0.11, 23.0, 5.5, 0.77, 3.1)
        p = tmp_path / "dev.json"
        save_device(dev, p)
        assert load_device(p) == dev

    def test_shipped_files_load(self):
        for name in ("data/device_45deg.json", "data/device_45deg_ideal.json",
                     "data/device_0deg.json"):
            dev = load_device(name)
            assert 0 <= dev.alpha_deg < 180

    def test_missing_field(self):
        d = device_to_dict(make_pdc_device(45.0, 0.2, 0.1, 23.0))
        del d["retardance_rad"]
        with pytest.raises(ValueError, match="retardance_rad"):
            device_from_dict(d)

    def test_unknown_field(self):
        d = device_to_dict(make_pdc_device(45.0, 0.2, 0.1, 23.0))
        d["wavelength_nm"] = 780
        with pytest.raises(ValueError, match="wavelength_nm"):
            device_from_dict(d)

    def test_non_numeric_field(self):
        d = device_to_dict(make_pdc_device(45.0, 0.2, 0.1, 23.0))
        d["length_mm"] = "23"
        with pytest.raises(ValueError, match="length_mm"):
            device_from_dict(d)
        d["length_mm"] = True
        with pytest.raises(ValueError, match="length_mm"):
            device_from_dict(d)

    def test_invalid_values_rejected(self):
        d = device_to_dict(make_pdc_device(45.0, 0.2, 0.1, 23.0))
        d["alpha_deg"] = 200.0
        with pytest.raises(ValueError):
            device_from_dict(d)

    def test_not_json(self, tmp_path):
        p = tmp_path / "dev.json"
        p.write_text("not json {")
        with pytest.raises(ValueError, match="JSON"):
            load_device(p)

    def test_not_an_object(self, tmp_path):
        p = tmp_path / "dev.json"
        p.write_text("[1, 2, 3]")
        with pytest.raises(ValueError, match="object"):
            load_device(p)

    def test_nonzero_beta_not_serializable(self):
        dev = RpdcDevice(0.0, CouplerParams.symmetric(1.0, 0.2, 23.0),
                         CouplerParams.symmetric(1.0, 0.1, 23.0))
        with pytest.raises(ValueError, match="beta"):
            device_to_dict(dev)
