import json

import numpy as np
import pytest

from hybridsea.errors import ConfigError, DataError
from hybridsea.metrics import compare, l2_error
from hybridsea.network import TableCorrector
from hybridsea.vessel import (DOF_NAMES, FDS_ADDED_MASS, FDS_STIFFNESS, ExcitationModel,
                              OracleNonlinearity, Particulars, VesselModel, assemble_vessel,
                              decay_test, encounter_frequency, extract_delta, linear_response,
                              read_matrix_csv, sized_nonlinearity, synthetic_high_fidelity,
                              wave_excitation)
from hybridsea.waves import SpectrumSpec, WaveRealization, sample_realization


@pytest.fixture(scope="module")
def fds():
    return assemble_vessel()


@pytest.fixture(scope="module")
def exc(fds):
    return ExcitationModel(speed=fds.speed)


@pytest.fixture(scope="module")
def sea():
    return sample_realization(SpectrumSpec.jonswap(4.0, 8.5, 1.0), 300.0, 5)


@pytest.fixture(scope="module")
def linear_run(fds, exc, sea):
    return linear_response(fds, exc, sea, 300.0, 0.1)


def zero_crossing_frequency(t, z):
    up = np.flatnonzero((z[:-1] < 0) & (z[1:] >= 0))
    tc = t[up] - z[up] * (t[up + 1] - t[up]) / (z[up + 1] - z[up])
    return 2 * np.pi / np.diff(tc).mean()


class TestAssembly:
    def test_mass(self, fds):
        assert fds.M[2, 2] == pytest.approx(1.6076e6)
        assert fds.M[0, 0] == fds.M[1, 1] == fds.M[2, 2]
        assert fds.M[4, 4] == pytest.approx(1.0048e9, rel=1e-4)
        assert np.count_nonzero(fds.M - np.diag(np.diag(fds.M))) == 0

    def test_damping(self, fds):
        assert fds.B[2, 2] == pytest.approx(0.1 * 2 * np.sqrt(1.01e7 * (1.6076e6 + 4.3e6)))
        assert fds.B[2, 2] == pytest.approx(1.545e6, rel=1e-3)
        diag = np.diag(fds.B)
        assert np.all(diag[[2, 3, 4]] > 0) and np.all(diag[[0, 1, 5]] == 0)
        assert np.count_nonzero(fds.B - np.diag(diag)) == 0

    def test_matrices_verbatim(self, fds):
        assert np.array_equal(fds.A, FDS_ADDED_MASS)
        assert np.array_equal(fds.C, FDS_STIFFNESS)
        nz = np.argwhere(fds.C != 0)
        assert set(nz.ravel()) <= {2, 3, 4}

    def test_undamped(self):
        assert np.all(assemble_vessel(alpha=0.0).B == 0)

    def test_speed(self, fds):
        assert fds.speed == pytest.approx(18.2, abs=0.02)
        assert fds.heading == 180.0

    def test_non_positive_stiffness(self):
        C = FDS_STIFFNESS.copy()
        C[3, 3] = 0.0
        with pytest.raises(ConfigError):
            assemble_vessel(stiffness=C)

    def test_bad_particulars(self):
        with pytest.raises(ConfigError):
            assemble_vessel(Particulars(displacement_t=0.0))

    def test_natural_frequency(self, fds):
        assert fds.heave_natural_frequency == pytest.approx(1.307, abs=1e-3)

    def test_json_round_trip(self, fds, tmp_path):
        p = tmp_path / "fds.json"
        fds.save(p)
        back = VesselModel.load(p)
        for name in "MABC":
            assert np.array_equal(getattr(back, name), getattr(fds, name))
        assert back.particulars == fds.particulars
        assert json.loads(p.read_text())["particulars"]["kyy"] == 25.0

    def test_matrix_csv(self, tmp_path):
        p = tmp_path / "A.csv"
        np.savetxt(p, FDS_ADDED_MASS, delimiter=",")
        assert np.array_equal(read_matrix_csv(p), FDS_ADDED_MASS)
        np.savetxt(p, np.eye(3), delimiter=",")
        with pytest.raises(DataError):
            read_matrix_csv(p)


class TestExcitation:
    def test_encounter_frequency(self):
        assert encounter_frequency(0.5, 18.2) == pytest.approx(0.5 + 0.25 * 18.2 / 9.81)

    def test_zero_waves(self, exc):
        still = WaveRealization.single(0.7, 0.0)
        assert np.array_equal(wave_excitation(exc, still, np.linspace(0, 10, 5)), np.zeros((5, 6)))

    def test_single_component_frequency(self, exc, fds):
        w = 0.6
        single = WaveRealization.single(w, 1.0, 0.3)
        t = np.arange(0, 200, 0.01)
        f = wave_excitation(exc, single, t)[:, 2]
        assert zero_crossing_frequency(t, f) == pytest.approx(w + w**2 * fds.speed / 9.81, rel=1e-4)

    def test_linear_in_amplitude(self, exc, sea):
        t = np.linspace(0, 50, 11)
        assert np.allclose(wave_excitation(exc, sea.scaled(2.0), t), 2 * wave_excitation(exc, sea, t))

    def test_head_seas_only_surge_heave_pitch(self, exc, sea):
        f = wave_excitation(exc, sea, np.linspace(0, 50, 101))
        assert np.all(f[:, [1, 3, 5]] == 0)

    def test_tabulated_curves(self, fds):
        tab = ExcitationModel(speed=fds.speed, frequencies=[0.5, 1.5], heave_amplitude=[1.0, 3.0],
                              heave_phase=[0.0, 0.0], pitch_amplitude=[0.0], pitch_phase=[0.0])
        w = 0.5
        single = WaveRealization.single(w, 1.0)
        we = encounter_frequency(w, fds.speed)
        assert wave_excitation(tab, single, 0.0)[2] == pytest.approx(np.interp(we, [0.5, 1.5], [1, 3]))

    def test_curve_length_mismatch(self, fds):
        with pytest.raises(ConfigError):
            ExcitationModel(speed=fds.speed, frequencies=[0.5, 1.0, 1.5], heave_amplitude=[1.0, 2.0])

    def test_oblique_rejected(self, fds):
        with pytest.raises(ConfigError):
            ExcitationModel(speed=fds.speed, heading=150.0)

    def test_dict_round_trip(self, exc):
        back = ExcitationModel.from_dict(exc.to_dict())
        assert np.array_equal(back.heave_amplitude, exc.heave_amplitude)


class TestLinearResponse:
    def test_head_seas_symmetry(self, linear_run):
        rms = np.sqrt(np.mean(linear_run.pos[:, 2] ** 2))
        for i in (1, 3, 5):
            assert np.abs(linear_run.pos[:, i]).max() < 1e-10 * rms
            assert np.abs(linear_run.vel[:, i]).max() < 1e-10 * rms

    def test_fixed_surge(self, linear_run, fds):
        assert np.abs(linear_run.vel[:, 0] - fds.speed).max() < 1e-12
        # earth-frame advance is u cos(theta) + w sin(theta): close to U t, not equal
        x = linear_run.pos[1:, 0]
        assert np.all(np.abs(x / (fds.speed * linear_run.t[1:]) - 1) < 0.01)

    def test_heave_and_pitch_respond(self, linear_run):
        w = linear_run.window_mask(50.0)
        assert linear_run.pos[w, 2].std() > 0.1
        assert linear_run.pos[w, 4].std() > 0.005
        assert linear_run.dof_names == DOF_NAMES


class TestDecay:
    @pytest.fixture(scope="class")
    @staticmethod
    def decay(fds):
        return decay_test(fds, offset=1.0, duration=30.0, dt=0.01)

    def test_frequency(self, decay, fds):
        wd = zero_crossing_frequency(decay.t, decay.pos[:, 2])
        assert wd == pytest.approx(fds.heave_natural_frequency, rel=0.02)
        assert wd == pytest.approx(fds.heave_natural_frequency * np.sqrt(1 - 0.01), rel=1e-3)

    def test_log_decrement(self, decay):
        z = decay.pos[:, 2]
        peaks = [i for i in range(1, len(z) - 1) if z[i] > 0 and z[i - 1] < z[i] >= z[i + 1]][:5]
        dec = np.log(z[peaks[:-1]] / z[peaks[1:]])
        assert np.allclose(dec, 2 * np.pi * 0.1 / np.sqrt(1 - 0.01), rtol=0.05)

    def test_other_dofs_restrained(self, decay):
        assert np.all(decay.pos[:, [0, 1, 3, 4, 5]] == 0)


class TestOracle:
    def test_zero_gains_match_linear(self, fds, exc, sea, linear_run):
        hf = synthetic_high_fidelity(fds, exc, sea, OracleNonlinearity(), 300.0, 0.1)
        rms = np.sqrt(np.mean(linear_run.acc[:, 2] ** 2))
        assert l2_error(hf.acc[:, 2], linear_run.acc[:, 2]) < 1e-10 * rms

    def test_cubic_heave_cancellation(self, fds, exc, sea):
        nl = OracleNonlinearity(heave_cubic=2e5)
        hf = synthetic_high_fidelity(fds, exc, sea, nl, 150.0, 0.1)
        d = extract_delta(fds, exc, sea, hf)
        assert np.abs(d[:, 2] + 2e5 * hf.pos[:, 2] ** 3).max() < 1e-6 * np.abs(d[:, 2]).max()
        assert np.abs(d[:, 4]).max() < 1e-6 * np.abs(d[:, 2]).max()

    def test_all_gains_cancellation(self, fds, exc, sea):
        nl = OracleNonlinearity(1e5, 5e10, 2e5, 1e9)
        hf = synthetic_high_fidelity(fds, exc, sea, nl, 150.0, 0.1)
        d = extract_delta(fds, exc, sea, hf)
        expected = np.array([nl.force(np.r_[p, v]) for p, v in zip(hf.pos, hf.vel)])
        scale = np.abs(expected).max(axis=0)
        assert np.all(np.abs(d[:, [2, 4]] - expected[:, [2, 4]]).max(axis=0) < 1e-6 * scale[[2, 4]])

    def test_sized_gains(self, fds):
        nl = sized_nonlinearity(fds, 1.0, 0.05, fraction=0.1)
        assert nl.heave_cubic * 2.0**3 == pytest.approx(0.1 * fds.C[2, 2] * 2.0)
        assert nl.pitch_cubic * 0.1**3 == pytest.approx(0.1 * fds.C[4, 4] * 0.1)

    def test_non_finite_gain(self):
        with pytest.raises(ConfigError):
            OracleNonlinearity(heave_cubic=np.nan)

    def test_tails_differ(self, fds, exc):
        waves = sample_realization(SpectrumSpec.jonswap(4.0, 8.5, 1.0), 600.0, 21)
        lin = linear_response(fds, exc, waves, 600.0, 0.1)
        w = lin.window_mask(50.0)
        nl = sized_nonlinearity(fds, lin.pos[w, 2].std(), lin.pos[w, 4].std())
        hf = synthetic_high_fidelity(fds, exc, waves, nl, 600.0, 0.1)
        assert compare(lin.acc[w, 2], hf.acc[w, 2]).jsd > 0.001

    def test_exact_correction_reproduces_oracle(self, fds, exc, sea):
        nl = OracleNonlinearity(heave_cubic=1e5, pitch_cubic=5e10)
        hf = synthetic_high_fidelity(fds, exc, sea, nl, 150.0, 0.1)
        d = extract_delta(fds, exc, sea, hf)
        hyb = linear_response(fds, exc, sea, 150.0, 0.1, corrector=TableCorrector(d[:, [2, 4]]))
        for i in (2, 4):
            assert l2_error(hyb.pos[:, i], hf.pos[:, i]) < 1e-6 * np.sqrt(np.mean(hf.pos[:, i] ** 2))
