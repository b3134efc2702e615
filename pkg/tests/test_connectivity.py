import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import band
from napeeg.connectivity import (
    WpliMatrix,
    cross_spectrum,
    region_wpli,
    wpli,
    wpli_bands,
)
from napeeg.model import (
    Condition,
    DEFAULT_BANDS,
    EpochSet,
    REGION_PAIRS,
    Session,
    ValidationError,
    default_region_map,
)
from napeeg.preproc import segment_fixed
from napeeg.synth import MONTAGE_10, PairLag, SynthSpec, gen_recording


def epochs_from(data, fs=250.0, channels=None):
    n_ep, n_ch, _ = data.shape
    return EpochSet(
        channels=channels or tuple(f"ch{i}" for i in range(n_ch)),
        fs=fs,
        data=data,
        condition=Condition.NAP,
        session=Session.NAP,
        rejected=np.zeros(n_ep, dtype=bool),
        start_times_s=np.arange(n_ep, dtype=float),
    )


class TestCrossSpectrum:
    def test_identical_signals_zero_imag(self, rng):
        x = rng.standard_normal((5, 1, 300))
        data = np.concatenate([x, x], axis=1)
        cs = cross_spectrum(epochs_from(data))
        assert np.all(cs.pair(0, 1).imag == 0.0)

    def test_quarter_period_delay_phase(self):
        # analytic oracle: y(t) = x(t - T/4) of a pure sine gives a
        # cross-spectrum phase of +pi/2 at the carrier
        fs, f0, n = 250.0, 10.0, 500
        t = np.arange(n) / fs
        x = np.sin(2 * np.pi * f0 * t)
        y = np.sin(2 * np.pi * f0 * (t - 1 / (4 * f0)))
        data = np.stack([np.stack([x, y])] * 3, axis=0)
        cs = cross_spectrum(epochs_from(data, fs))
        k = np.argmin(np.abs(cs.freqs - f0))
        phases = np.angle(cs.pair(0, 1)[:, k])
        assert np.all(np.abs(np.abs(phases) - np.pi / 2) < 1e-3)

    def test_hermitian_symmetry_exact(self, rng):
        data = rng.standard_normal((4, 3, 200))
        cs = cross_spectrum(epochs_from(data))
        for i in range(3):
            for j in range(3):
                np.testing.assert_array_equal(
                    cs.pair(i, j), np.conj(cs.pair(j, i))
                )

    def test_auto_spectrum_real_nonnegative(self, rng):
        data = rng.standard_normal((4, 2, 200))
        cs = cross_spectrum(epochs_from(data))
        auto = cs.pair(1, 1)
        assert np.all(auto.imag == 0.0)
        assert np.all(auto.real >= 0.0)

    def test_rejected_only_refused(self, rng):
        eps = epochs_from(rng.standard_normal((2, 2, 100)))
        eps = eps.with_rejected(np.array([True, True]))
        with pytest.raises(ValidationError, match="non-rejected"):
            cross_spectrum(eps)

    def test_fmax_truncation(self, rng):
        eps = epochs_from(rng.standard_normal((3, 2, 250)))
        cs = cross_spectrum(eps, fmax=50.0)
        assert cs.freqs.max() <= 50.0


def lagged_pair_epochs(lag=np.pi / 2, n_epochs=100, noise=0.0, seed=0, amplitude=1.0):
    spec = SynthSpec(
        fs=250.0,
        duration_s=3.0 * n_epochs,
        channels=("A", "B"),
        pair_lags=(PairLag(0, 1, lag, 14.0, amplitude_uv=amplitude),),
        noise_sigma_uv=noise,
        seed=seed,
    )
    return segment_fixed(gen_recording(spec), 3.0)


class TestWpli:
    def test_constant_quarter_lag_saturates(self):
        eps = lagged_pair_epochs()
        m = wpli(cross_spectrum(eps, fmax=50.0), band("spindle"))
        assert m.values[0, 0, 1] >= 0.99

    def test_zero_lag_identical_signals_exactly_zero(self, rng):
        x = rng.standard_normal((1, 250 * 30))
        data = np.vstack([x, x])
        eps = segment_fixed(
            epochs_recording(data, rng), 3.0
        )
        m = wpli(cross_spectrum(eps, fmax=50.0), band("spindle"))
        assert m.values[0, 0, 1] == 0.0

    def test_independent_noise_null(self, rng):
        data = rng.standard_normal((400, 2, 750))
        m = wpli_bands(
            cross_spectrum(epochs_from(data), fmax=50.0), DEFAULT_BANDS
        )
        assert np.all(m.values[:, 0, 1] < 0.1)

    def test_needs_two_epochs(self, rng):
        eps = epochs_from(rng.standard_normal((1, 2, 250)))
        with pytest.raises(ValidationError, match="2 epochs"):
            wpli(cross_spectrum(eps), band("alpha"))

    def test_band_without_bins_refused(self, rng):
        eps = epochs_from(rng.standard_normal((4, 2, 50)))  # df = 5 Hz
        with pytest.raises(ValidationError, match="no frequency bins"):
            wpli(cross_spectrum(eps), band("delta"))

    def test_diagonal_masked(self, rng):
        eps = epochs_from(rng.standard_normal((4, 3, 250)))
        m = wpli(cross_spectrum(eps), band("alpha"))
        assert np.all(np.isnan(np.diagonal(m.values[0])))

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_range_and_symmetry(self, seed):
        local = np.random.default_rng(seed)
        data = local.standard_normal((6, 3, 250))
        m = wpli_bands(cross_spectrum(epochs_from(data)), DEFAULT_BANDS)
        off = ~np.eye(3, dtype=bool)
        vals = m.values[:, off]
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
        for k in range(m.values.shape[0]):
            np.testing.assert_array_equal(m.values[k], m.values[k].T)

    def test_sign_flip_invariance(self):
        eps = lagged_pair_epochs(noise=0.3, n_epochs=40)
        m1 = wpli(cross_spectrum(eps), band("spindle")).values[0, 0, 1]
        flipped = eps.data.copy()
        flipped[:, 1, :] *= -1.0
        m2 = wpli(
            cross_spectrum(epochs_from(flipped)), band("spindle")
        ).values[0, 0, 1]
        assert m2 == pytest.approx(m1, abs=1e-12)

    def test_amplitude_invariance(self):
        eps = lagged_pair_epochs(noise=0.0, n_epochs=40)
        m1 = wpli(cross_spectrum(eps), band("spindle")).values[0, 0, 1]
        scaled = eps.data.copy()
        scaled[:, 0, :] *= 7.5
        m2 = wpli(
            cross_spectrum(epochs_from(scaled)), band("spindle")
        ).values[0, 0, 1]
        assert m2 == pytest.approx(m1, abs=1e-9)

    def test_volume_conduction_robustness(self, rng):
        # mixing a common zero-lag source into a lagged pair must not
        # inflate wPLI above the unmixed value (checked over seeds)
        inflations = 0
        for seed in range(6):
            eps = lagged_pair_epochs(noise=0.2, n_epochs=60, seed=seed)
            base = wpli(cross_spectrum(eps), band("spindle")).values[0, 0, 1]
            local = np.random.default_rng(seed + 100)
            t = np.arange(eps.n_samples) / eps.fs
            mixed = eps.data.copy()
            for e in range(eps.n_epochs):
                common = 1.5 * np.sin(
                    2 * np.pi * 14.0 * t + local.uniform(0, 2 * np.pi)
                )
                mixed[e, 0, :] += common
                mixed[e, 1, :] += common
            contaminated = wpli(
                cross_spectrum(epochs_from(mixed)), band("spindle")
            ).values[0, 0, 1]
            if contaminated > base + 1e-9:
                inflations += 1
        assert inflations == 0


def epochs_recording(data, rng):
    from napeeg.model import Recording

    return Recording(
        channels=tuple(f"ch{i}" for i in range(data.shape[0])), fs=250.0, data=data
    )


class TestAgainstBruteForce:
    def test_matches_literal_definition(self, rng):
        # independent oracle: per-bin |mean Im X| / mean |Im X| computed
        # with plain python loops straight from the definition
        fs, n_ep, n = 250.0, 12, 200
        data = rng.standard_normal((n_ep, 3, n))
        data[:, 1, :] += 0.5 * np.roll(data[:, 0, :], 3, axis=1)
        eps = epochs_from(data, fs)
        cs = cross_spectrum(eps)
        got = wpli(cs, band("alpha")).values[0]

        from scipy.signal import get_window

        w = get_window("hann", n, fftbins=True)
        freqs = np.fft.rfftfreq(n, 1 / fs)
        in_band = np.flatnonzero((freqs >= 7.0) & (freqs < 12.0))
        spectra = [np.fft.rfft(data[e] * w, axis=1) for e in range(n_ep)]
        expected = np.full((3, 3), np.nan)
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                ratios = []
                for k in in_band:
                    ims = [
                        (spectra[e][i, k] * np.conj(spectra[e][j, k])).imag
                        for e in range(n_ep)
                    ]
                    denom = np.mean(np.abs(ims))
                    ratios.append(abs(np.mean(ims)) / denom if denom > 0 else 0.0)
                expected[i, j] = np.mean(ratios)
        off = ~np.eye(3, dtype=bool)
        np.testing.assert_allclose(got[off], expected[off], rtol=1e-9)


class TestRegionWpli:
    def _matrix(self, values, channels):
        n_ch = len(channels)
        grid = np.asarray(values, dtype=float)
        np.fill_diagonal(grid, np.nan)
        return WpliMatrix(
            bands=(band("alpha"),),
            values=grid[None],
            channels=channels,
            n_epochs_used=10,
            df=1 / 3,
        )

    def test_constant_matrix_gives_constant_cells(self):
        m = self._matrix(np.full((10, 10), 0.37), MONTAGE_10)
        table = region_wpli(m, default_region_map(MONTAGE_10))
        np.testing.assert_allclose(table.values, 0.37)
        assert table.values.shape == (1, 15)

    def test_two_channel_frontal_within_cell(self):
        grid = np.full((10, 10), 0.1)
        grid[0, 1] = grid[1, 0] = 0.4  # F3-F4
        table = region_wpli(self._matrix(grid, MONTAGE_10), default_region_map(MONTAGE_10))
        assert table.cell("alpha", "F-F") == pytest.approx(0.4)

    def test_block_structure_max_at_fp(self):
        grid = np.full((10, 10), 0.05)
        # frontal channels 0,1; parietal channels 6,7
        for i in (0, 1):
            for j in (6, 7):
                grid[i, j] = grid[j, i] = 0.9
        table = region_wpli(self._matrix(grid, MONTAGE_10), default_region_map(MONTAGE_10))
        values = {c: table.cell("alpha", c) for c in REGION_PAIRS}
        assert max(values, key=values.get) == "F-P"

    def test_single_channel_region_within_cell_error(self):
        channels = ("F3", "F4", "C3", "C4", "T7", "T8", "P3", "P4", "O1")  # one occipital
        grid = np.full((9, 9), 0.2)
        with pytest.raises(ValidationError, match="zero channel pairs"):
            region_wpli(self._matrix(grid, channels), default_region_map(channels))

    def test_full_pipeline_table_is_6x15(self, rng):
        data = rng.standard_normal((6, 10, 750))
        eps = epochs_from(data, channels=MONTAGE_10)
        m = wpli_bands(cross_spectrum(eps, fmax=50.0), DEFAULT_BANDS)
        table = region_wpli(m, default_region_map(MONTAGE_10))
        assert table.values.shape == (6, 15)
        assert table.metric == "wpli"
        assert table.columns == REGION_PAIRS
