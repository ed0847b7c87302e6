import math

import pytest
from hypothesis import given, strategies as st

from kerrmag import (
    ConfigError,
    InvalidParameterError,
    PhysicalConstants,
    SphereSpec,
    SystemParams,
    UnsupportedOperationError,
    apply_overrides,
    dumps_config,
    kerr_coefficient,
    load_config,
    params_from_mapping,
    power_from_rabi,
    rabi_from_power,
    resolve_params,
    spin_count,
    thermal_occupation,
)
from kerrmag.params import parse_key

TWO_PI = 2.0 * math.pi

BASE = {
    "omega_m_over_2pi_GHz": 10.0,
    "delta_m_over_2pi_MHz": -1.0,
    "delta_c_over_2pi_MHz": -30.0,
    "g_over_2pi_MHz": 41.0,
    "gamma_m_over_2pi_MHz": 8.8,
    "gamma_c_over_2pi_MHz": 1.9,
    "kerr_over_2pi_uHz": 1.0,
    "temperature_mK": 10.0,
    "drive_power_mW": 393.0,
}


def base_params(**extra):
    mapping = dict(BASE)
    mapping.update(extra)
    return params_from_mapping(mapping)


class TestParseKey:
    def test_over_2pi_suffixes_scale_by_two_pi(self):
        assert parse_key("gamma_c_over_2pi_MHz") == ("gamma_c", TWO_PI * 1e6)
        assert parse_key("omega_m1_over_2pi_GHz") == ("omega_m1", TWO_PI * 1e9)
        assert parse_key("kerr_over_2pi_uHz") == ("kerr", TWO_PI * 1e-6)

    def test_rad_per_s_suffix_is_identity(self):
        assert parse_key("G1_rad_per_s") == ("G1", 1.0)
        assert parse_key("delta_c_rad_per_s") == ("delta_c", 1.0)

    def test_special_keys_carry_their_own_units(self):
        assert parse_key("temperature_mK") == ("temperature", 1e-3)
        assert parse_key("drive_power_W") == ("power", 1.0)
        assert parse_key("drive_rabi_rad_per_s") == ("rabi", 1.0)

    @pytest.mark.parametrize(
        "key", ["gamma_c", "gamma_c_MHz", "bogus_over_2pi_MHz", "drive_power_uW", ""]
    )
    def test_unknown_keys_rejected(self, key):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_key(key)


class TestDriveConversion:
    def test_known_power_to_rabi(self):
        # sqrt(2 * 0.393 * 2pi*1.9e6 / (hbar * 2pi*10.001e9)), evaluated once
        # by hand with the scipy value of hbar and frozen.
        rabi = rabi_from_power(0.393, TWO_PI * 1.9e6, TWO_PI * 10.001e9)
        assert rabi == pytest.approx(1189948810798864.8, rel=1e-12)

    def test_zero_power_gives_zero_rabi(self):
        assert rabi_from_power(0.0, TWO_PI * 1.9e6, TWO_PI * 10e9) == 0.0

    @given(st.floats(min_value=1e-6, max_value=10.0))
    def test_round_trip_power(self, power):
        gamma_c = TWO_PI * 1.9e6
        omega_d = TWO_PI * 10e9
        back = power_from_rabi(rabi_from_power(power, gamma_c, omega_d), gamma_c, omega_d)
        assert back == pytest.approx(power, rel=1e-12)

    def test_invalid_arguments(self):
        with pytest.raises(InvalidParameterError):
            rabi_from_power(-1.0, 1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            rabi_from_power(1.0, 1.0, 0.0)
        with pytest.raises(InvalidParameterError):
            power_from_rabi(1.0, 0.0, 1.0)


class TestThermalOccupation:
    def test_known_value_dilution_fridge(self):
        # exp(-x)/(1-exp(-x)) at x = hbar*2pi*1e10/(kB*0.01), frozen.
        nbar = thermal_occupation(TWO_PI * 10e9, 0.010)
        assert nbar == pytest.approx(1.4359924589903149e-21, rel=1e-12)

    def test_zero_temperature_is_exactly_zero(self):
        assert thermal_occupation(TWO_PI * 10e9, 0.0) == 0.0

    def test_classical_limit(self):
        # kB T >> hbar omega: n approaches kB T / (hbar omega).
        omega = TWO_PI * 1e3
        nbar = thermal_occupation(omega, 300.0)
        k_over_hbar = PhysicalConstants().k_boltzmann / PhysicalConstants().hbar
        assert nbar == pytest.approx(k_over_hbar * 300.0 / omega, rel=1e-6)

    def test_monotone_in_temperature_and_frequency(self):
        temps = [0.005, 0.01, 0.05, 0.1, 1.0]
        occ = [thermal_occupation(TWO_PI * 10e9, t) for t in temps]
        assert occ == sorted(occ)
        freqs = [TWO_PI * f for f in (1e9, 5e9, 10e9, 50e9)]
        occ = [thermal_occupation(f, 0.1) for f in freqs]
        assert occ == sorted(occ, reverse=True)

    def test_huge_ratio_underflows_to_zero(self):
        assert thermal_occupation(TWO_PI * 1e14, 1e-6) == 0.0

    def test_invalid_arguments(self):
        with pytest.raises(InvalidParameterError):
            thermal_occupation(0.0, 1.0)
        with pytest.raises(InvalidParameterError):
            thermal_occupation(TWO_PI * 1e9, -1.0)


class TestSphere:
    def test_spin_count_forty_micron_sphere(self):
        # N = rho * (pi/6) d^3 and bound = 2 N s = 5 N for s = 5/2.
        n, bound = spin_count(SphereSpec(diameter=40e-6))
        assert n == pytest.approx(1.4141355731358856e14, rel=1e-12)
        assert bound == pytest.approx(7.070677865679428e14, rel=1e-12)
        assert bound == pytest.approx(5.0 * n, rel=1e-15)

    def test_spin_count_scales_cubically_in_diameter(self):
        n1, _ = spin_count(SphereSpec(diameter=40e-6))
        n2, _ = spin_count(SphereSpec(diameter=80e-6))
        assert n2 == pytest.approx(8.0 * n1, rel=1e-12)

    def test_spin_count_linear_in_density(self):
        n1, _ = spin_count(SphereSpec(diameter=40e-6, spin_density=1e27))
        n2, _ = spin_count(SphereSpec(diameter=40e-6, spin_density=3e27))
        assert n2 == pytest.approx(3.0 * n1, rel=1e-12)

    def test_kerr_coefficient_requires_material_data(self):
        with pytest.raises(UnsupportedOperationError):
            kerr_coefficient(SphereSpec(diameter=40e-6))

    def test_kerr_coefficient_round_trip(self):
        # Invert the formula: pick the anisotropy constant that lands on a
        # target value, then confirm the forward evaluation returns it.
        target = TWO_PI * 1e-6
        consts = PhysicalConstants()
        ms = 1.4e5
        sphere0 = SphereSpec(diameter=250e-6)
        k_an = target * ms**2 * sphere0.volume / (consts.mu0 * consts.gyromagnetic_ratio**2)
        sphere = SphereSpec(
            diameter=250e-6, anisotropy_constant=k_an, saturation_magnetization=ms
        )
        assert kerr_coefficient(sphere) == pytest.approx(target, rel=1e-12)

    def test_kerr_coefficient_inverse_volume_scaling(self):
        a = SphereSpec(diameter=100e-6, anisotropy_constant=610.0,
                       saturation_magnetization=1.4e5)
        b = SphereSpec(diameter=100e-6 * 2 ** (1 / 3), anisotropy_constant=610.0,
                       saturation_magnetization=1.4e5)
        assert kerr_coefficient(b) == pytest.approx(kerr_coefficient(a) / 2.0, rel=1e-12)

    def test_invalid_sphere(self):
        with pytest.raises(InvalidParameterError):
            SphereSpec(diameter=-1e-6)
        with pytest.raises(InvalidParameterError):
            SphereSpec(diameter=40e-6, spin_density=0.0)


class TestResolution:
    def test_baseline_mapping_resolves(self):
        p = base_params()
        assert p.omega_m1 == pytest.approx(TWO_PI * 10e9, rel=1e-15)
        assert p.delta_m1 == pytest.approx(-TWO_PI * 1e6, rel=1e-15)
        assert p.omega_d == pytest.approx(TWO_PI * 10.001e9, rel=1e-15)
        assert p.omega_c == pytest.approx(p.omega_d + p.delta_c, rel=1e-15)
        assert p.g1 == p.g2
        assert p.g1 == pytest.approx(TWO_PI * 41e6, rel=1e-15)
        assert p.temperature == pytest.approx(0.010)
        assert p.power == pytest.approx(0.393)
        assert p.drive_given == "power"
        assert p.rabi == pytest.approx(
            rabi_from_power(p.power, p.gamma_c, p.omega_d), rel=1e-12
        )
        assert not p.has_direct_couplings

    def test_resolve_params_from_canonical_quantities(self):
        p = base_params()
        q = resolve_params({
            "omega_m1": p.omega_m1, "omega_m2": p.omega_m2,
            "delta_m1": p.delta_m1, "delta_m2": p.delta_m2,
            "delta_c": p.delta_c,
            "g1": p.g1, "g2": p.g2,
            "gamma_m1": p.gamma_m1, "gamma_m2": p.gamma_m2, "gamma_c": p.gamma_c,
            "kerr1": p.kerr1, "kerr2": p.kerr2,
            "temperature": p.temperature, "power": p.power,
        })
        assert q == p

    def test_rabi_primary_drive(self):
        mapping = dict(BASE)
        del mapping["drive_power_mW"]
        mapping["drive_rabi_rad_per_s"] = 1.19e15
        p = params_from_mapping(mapping)
        assert p.drive_given == "rabi"
        assert p.rabi == 1.19e15
        assert p.power == pytest.approx(
            power_from_rabi(1.19e15, p.gamma_c, p.omega_d), rel=1e-12
        )

    def test_duplicate_quantity_rejected(self):
        with pytest.raises(ConfigError, match="more than once"):
            params_from_mapping({**BASE, "g1_over_2pi_MHz": 41.0})

    def test_missing_required_quantity(self):
        mapping = dict(BASE)
        del mapping["gamma_c_over_2pi_MHz"]
        with pytest.raises(ConfigError, match="gamma_c"):
            params_from_mapping(mapping)

    def test_underdetermined_drive_frequency(self):
        mapping = dict(BASE)
        del mapping["omega_m_over_2pi_GHz"]
        del mapping["delta_c_over_2pi_MHz"]
        with pytest.raises(ConfigError, match="underdetermined"):
            params_from_mapping(mapping)

    def test_inconsistent_overdetermined_set_rejected(self):
        with pytest.raises(ConfigError, match="inconsistent"):
            params_from_mapping({**BASE, "omega_d_over_2pi_GHz": 10.5})

    def test_consistent_overdetermined_set_accepted(self):
        p = params_from_mapping({**BASE, "omega_d_over_2pi_GHz": 10.001})
        assert p.omega_d == pytest.approx(TWO_PI * 10.001e9, rel=1e-12)

    def test_direct_couplings_all_or_none(self):
        p = base_params(G_rad_per_s=-38e6, F_rad_per_s=-28e6)
        assert p.has_direct_couplings
        assert p.G1 == p.G2 == -38e6
        with pytest.raises((ConfigError, InvalidParameterError)):
            base_params(G_rad_per_s=-38e6)

    def test_non_numeric_value_rejected(self):
        with pytest.raises(ConfigError, match="must be a number"):
            params_from_mapping({**BASE, "delta_c_over_2pi_MHz": "fast"})

    def test_numeric_string_coerced(self):
        # YAML 1.1 hands exponent literals without a sign through as
        # strings; the loader accepts them anyway.
        p = params_from_mapping({**BASE, "G_rad_per_s": "-38.0e6", "F_rad_per_s": "-28e6"})
        assert p.G1 == -38.0e6
        assert p.F1 == -28.0e6

    def test_negative_damping_rejected(self):
        with pytest.raises(InvalidParameterError, match="gamma_c"):
            params_from_mapping({**BASE, "gamma_c_over_2pi_MHz": -1.9})


class TestReplace:
    def test_delta_c_moves_cavity_not_drive(self):
        p = base_params()
        q = p.replace(delta_c=TWO_PI * 10e6)
        assert q.omega_d == p.omega_d
        assert q.delta_c == TWO_PI * 10e6
        assert q.omega_c == pytest.approx(p.omega_d + TWO_PI * 10e6, rel=1e-15)
        assert q.delta_m1 == p.delta_m1

    def test_delta_m_pair_moves_magnons_with_drive_pinned(self):
        p = base_params()
        q = p.replace(delta_m=-TWO_PI * 30e6)
        assert q.omega_d == p.omega_d
        assert q.delta_m1 == q.delta_m2 == -TWO_PI * 30e6
        assert q.omega_m1 == pytest.approx(p.omega_d - TWO_PI * 30e6, rel=1e-15)
        assert q.omega_c == p.omega_c

    def test_power_change_rederives_rabi(self):
        p = base_params()
        q = p.replace(power=0.1)
        assert q.drive_given == "power"
        assert q.rabi == pytest.approx(rabi_from_power(0.1, q.gamma_c, q.omega_d), rel=1e-12)

    def test_rabi_change_switches_primary(self):
        p = base_params()
        q = p.replace(rabi=1.0e15)
        assert q.drive_given == "rabi"
        assert q.rabi == 1.0e15

    def test_gamma_c_change_keeps_primary_drive_quantity(self):
        # With power primary, the Rabi frequency tracks the new leakage;
        # with rabi primary, the power does.
        p = base_params()
        q = p.replace(gamma_c=TWO_PI * 20e6)
        assert q.power == p.power
        assert q.rabi != p.rabi
        pr = p.replace(rabi=p.rabi)
        qr = pr.replace(gamma_c=TWO_PI * 20e6)
        assert qr.rabi == pr.rabi
        assert qr.power != pr.power

    def test_pair_shorthand_sets_both(self):
        p = base_params()
        q = p.replace(g=TWO_PI * 55e6)
        assert q.g1 == q.g2 == TWO_PI * 55e6

    def test_unknown_name_rejected(self):
        with pytest.raises(InvalidParameterError, match="unknown parameter"):
            base_params().replace(gee=1.0)


class TestConfigIO:
    def test_round_trip_is_bit_identical(self, tmp_path):
        p = base_params(G_rad_per_s=-38e6, F_rad_per_s=-28e6)
        path = tmp_path / "cfg.yaml"
        path.write_text(dumps_config(p))
        q = load_config(path)
        assert q == p

    def test_load_reports_line_of_bad_key(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("omega_m_over_2pi_GHz: 10.0\nwhatever: 3\n")
        with pytest.raises(ConfigError, match=r"line 2"):
            load_config(path)

    def test_missing_file_is_config_error(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.yaml")

    def test_non_mapping_file_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("")
        with pytest.raises(ConfigError, match="empty"):
            load_config(path)

    def test_shipped_configs_load(self):
        for name in ("baseline.yaml", "direct_couplings.yaml", "optimality.yaml"):
            p = load_config(f"configs/{name}")
            assert p.gamma_c > 0.0


class TestOverrides:
    def test_override_applies_unit_factor(self):
        p = base_params()
        q = apply_overrides(p, {"delta_c_over_2pi_MHz": "-28.4"})
        assert q.delta_c == pytest.approx(-TWO_PI * 28.4e6, rel=1e-12)

    def test_conflicting_overrides_rejected(self):
        with pytest.raises(ConfigError, match="set twice|conflicts"):
            apply_overrides(base_params(), {"g_over_2pi_MHz": 41.0, "g1_over_2pi_MHz": 40.0})

    def test_non_numeric_override_rejected(self):
        with pytest.raises(ConfigError, match="numeric"):
            apply_overrides(base_params(), {"delta_c_over_2pi_MHz": "wat"})

    def test_invalid_physical_value_is_config_error(self):
        with pytest.raises(ConfigError):
            apply_overrides(base_params(), {"gamma_c_over_2pi_MHz": -1.0})


class TestSystemParamsValidation:
    def test_as_mapping_resolves_to_identical_params(self):
        p = base_params()
        q = params_from_mapping(p.as_mapping())
        assert q == p

    def test_drive_given_whitelist(self):
        p = base_params()
        with pytest.raises(InvalidParameterError, match="drive_given"):
            SystemParams(**{**p.__dict__, "drive_given": "both"})

    def test_nan_rejected(self):
        p = base_params()
        with pytest.raises(InvalidParameterError):
            SystemParams(**{**p.__dict__, "delta_c": float("nan")})
