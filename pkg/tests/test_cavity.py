"""Cavity transfer functions, impedance matching and linewidth analysis."""

import numpy as np
import pytest

from afcsim import (
    CavitySpec,
    CombSpec,
    FrequencyGrid,
    NoResonanceError,
    build_comb_profile,
    cavity_reflection,
    cavity_transmission,
    check_impedance,
    flat_profile,
    resonance_linewidth,
    round_trip_phase,
    single_pass_transfer,
    unity_transfer,
)

GRID = FrequencyGrid(span=200.0, n_points=2**16)
PAPER_CAVITY = CavitySpec(r_in=0.40, r_out=0.97, round_trip_loss=0.0,
                          round_trip_time=0.02)


def airy_fwhm_oracle(cav: CavitySpec) -> float:
    """Absolute-half-maximum width of the empty-cavity Airy transmission peak."""
    rho = np.sqrt(cav.r_in * cav.r_out) * np.sqrt(1.0 - cav.round_trip_loss)
    # |t|^2 drops to half its peak when 2 rho (1 - cos(theta)) = (1 - rho)^2
    theta_half = np.arccos(1.0 - (1.0 - rho) ** 2 / (2.0 * rho))
    return 2.0 * theta_half / (2.0 * np.pi * cav.round_trip_time)


class TestCheckImpedance:
    def test_paper_matching_point(self):
        assert check_impedance(0.40, 0.97, 0.0, 0.4428) == pytest.approx(0.0, abs=1e-4)

    def test_equal_mirrors_no_absorber(self):
        assert check_impedance(0.4, 0.4, 0.0, 0.0) == 0.0

    def test_loss_shifts_the_matching_point(self):
        # direct evaluation: 0.4 - 0.94 exp(-0.8856) = +0.0123, so with loss
        # the input mirror reflects too much and a shallower comb is needed
        residual = check_impedance(0.40, 0.97, 0.03, 0.4428)
        assert residual == pytest.approx(0.0123, abs=2e-4)
        assert check_impedance(0.40, 0.97, 0.03,
                               0.5 * np.log(0.94 / 0.40)) == pytest.approx(0.0, abs=1e-12)


class TestCavityReflection:
    def test_matched_flat_medium_reflection_vanishes(self):
        d_match = 0.5 * np.log(0.97 / 0.40)
        medium = single_pass_transfer(flat_profile(GRID, d_match))
        r = cavity_reflection(medium, PAPER_CAVITY)
        center = GRID.n_points // 2
        assert abs(r.values[center]) ** 2 < 1e-4

    def test_lossless_empty_unitarity(self):
        medium = unity_transfer(GRID)
        r = cavity_reflection(medium, PAPER_CAVITY)
        t = cavity_transmission(medium, PAPER_CAVITY)
        total = r.magnitude_squared() + t.magnitude_squared()
        assert np.max(np.abs(total - 1.0)) < 1e-9

    def test_blocked_cavity_reflects_input_mirror(self):
        blocked = single_pass_transfer(flat_profile(GRID, 200.0))
        r = cavity_reflection(blocked, PAPER_CAVITY)
        assert np.allclose(r.magnitude_squared(), 0.40, atol=1e-12)
        t = cavity_transmission(blocked, PAPER_CAVITY)
        assert np.max(t.magnitude_squared()) < 1e-12

    def test_passivity_random_inputs(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            od = np.convolve(np.abs(rng.normal(0, 2, GRID.n_points)),
                             np.ones(128) / 128, mode="same")
            medium = single_pass_transfer(
                build_od_profile(od))
            cav = CavitySpec(r_in=rng.uniform(0.05, 0.95),
                             r_out=rng.uniform(0.05, 0.95),
                             round_trip_loss=rng.uniform(0.0, 0.2),
                             round_trip_time=rng.uniform(0.005, 0.05))
            assert np.max(np.abs(cavity_reflection(medium, cav).values)) <= 1 + 1e-9
            assert np.max(np.abs(cavity_transmission(medium, cav).values)) <= 1 + 1e-9

    def test_matched_zero_property_random(self):
        # whenever the residual is zero and the cavity is on resonance the
        # reflection dies, also with loss folded in
        rng = np.random.default_rng(9)
        center = GRID.n_points // 2
        for _ in range(10):
            r_out = rng.uniform(0.9, 1.0)
            loss = rng.uniform(0.0, 0.08)
            d_eff = rng.uniform(0.1, 1.0)
            r_in = (r_out - loss) * np.exp(-2.0 * d_eff)
            assert check_impedance(r_in, r_out, loss, d_eff) == pytest.approx(0.0, abs=1e-12)
            cav = CavitySpec(r_in=r_in, r_out=r_out, round_trip_loss=loss,
                             round_trip_time=0.02)
            medium = single_pass_transfer(flat_profile(GRID, d_eff))
            refl = cavity_reflection(medium, cav)
            assert abs(refl.values[center]) ** 2 < 1e-4


def build_od_profile(od):
    from afcsim import AbsorptionProfile
    return AbsorptionProfile(GRID, od)


class TestResonanceLinewidth:
    def test_empty_cavity_matches_airy_oracle(self):
        medium = unity_transfer(GRID)
        t = cavity_transmission(medium, PAPER_CAVITY)
        report = resonance_linewidth(
            t, round_trip_phase_values=round_trip_phase(medium, PAPER_CAVITY))
        assert report.fwhm == pytest.approx(airy_fwhm_oracle(PAPER_CAVITY), rel=0.02)
        assert report.effective_fsr == pytest.approx(1.0 / PAPER_CAVITY.round_trip_time,
                                                     rel=1e-6)
        # bare finesse of the measured mirror pair
        assert report.effective_fsr / report.fwhm == pytest.approx(6.5, abs=0.2)

    def test_dispersive_pit_narrows_linewidth(self):
        comb = CombSpec(tooth_spacing=0.5, finesse=5.8, peak_od=0.0, bandwidth=10.0)
        pit = single_pass_transfer(build_comb_profile(comb, GRID,
                                                      pit_width=18.0, line_od=8.0))
        empty = unity_transfer(GRID)
        fwhm_pit = resonance_linewidth(
            cavity_transmission(pit, PAPER_CAVITY),
            round_trip_phase_values=round_trip_phase(pit, PAPER_CAVITY)).fwhm
        fwhm_empty = resonance_linewidth(
            cavity_transmission(empty, PAPER_CAVITY),
            round_trip_phase_values=round_trip_phase(empty, PAPER_CAVITY)).fwhm
        assert fwhm_pit < fwhm_empty

    def test_monotone_narrowing_with_pit_depth(self):
        comb = CombSpec(tooth_spacing=0.5, finesse=5.8, peak_od=0.0, bandwidth=10.0)
        widths = []
        for line_od in (0.0, 2.0, 5.0, 10.0):
            medium = single_pass_transfer(build_comb_profile(
                comb, GRID, pit_width=18.0, line_od=line_od))
            report = resonance_linewidth(
                cavity_transmission(medium, PAPER_CAVITY),
                round_trip_phase_values=round_trip_phase(medium, PAPER_CAVITY))
            widths.append(report.fwhm)
        assert all(b <= a + 1e-12 for a, b in zip(widths, widths[1:]))

    def test_flat_transfer_raises(self):
        with pytest.raises(NoResonanceError):
            resonance_linewidth(unity_transfer(GRID))

    def test_effective_fsr_exceeds_fwhm(self):
        medium = unity_transfer(GRID)
        t = cavity_transmission(medium, PAPER_CAVITY)
        report = resonance_linewidth(t)
        assert report.effective_fsr > report.fwhm

    def test_nearest_resonance_reported(self):
        # FSR 50 MHz on a 200 MHz grid: several peaks, center one wins
        medium = unity_transfer(GRID)
        t = cavity_transmission(medium, PAPER_CAVITY)
        report = resonance_linewidth(t)
        assert abs(report.resonance_frequency) < 1.0
