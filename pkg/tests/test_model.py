import numpy as np
import pytest
from hypothesis import given, strategies as st

from napeeg.model import (
    BandRegionTable,
    BandSpec,
    DEFAULT_BANDS,
    REGION_PAIRS,
    Recording,
    Region,
    ValidationError,
    default_region_map,
)


class TestRecording:
    def test_valid_construction(self):
        rec = Recording(channels=("A", "B"), fs=250.0, data=np.zeros((2, 100)))
        assert rec.n_channels == 2
        assert rec.n_samples == 100
        assert rec.duration_s == pytest.approx(0.4)

    def test_channel_count_mismatch(self):
        with pytest.raises(ValidationError, match="channel count mismatch"):
            Recording(channels=("A",), fs=250.0, data=np.zeros((2, 10)))

    def test_nonpositive_fs(self):
        with pytest.raises(ValidationError, match="fs"):
            Recording(channels=("A",), fs=0.0, data=np.zeros((1, 10)))

    def test_duplicate_labels(self):
        with pytest.raises(ValidationError, match="unique"):
            Recording(channels=("A", "A"), fs=1.0, data=np.zeros((2, 10)))

    def test_data_is_read_only(self):
        rec = Recording(channels=("A",), fs=1.0, data=np.zeros((1, 10)))
        with pytest.raises(ValueError):
            rec.data[0, 0] = 1.0


class TestBands:
    def test_default_table(self):
        table = {(b.name, b.f1, b.f2) for b in DEFAULT_BANDS}
        assert table == {
            ("delta", 0.5, 4.0),
            ("theta", 4.0, 7.0),
            ("alpha", 7.0, 12.0),
            ("spindle", 12.0, 16.0),
            ("beta", 16.0, 30.0),
            ("gamma", 30.0, 50.0),
        }

    def test_invalid_edges(self):
        with pytest.raises(ValidationError):
            BandSpec("bad", 4.0, 4.0)
        with pytest.raises(ValidationError):
            BandSpec("bad", 0.0, 4.0)


class TestRegionMap:
    def test_midline_labels(self):
        rm = default_region_map(["Fz", "Cz", "Pz", "Oz", "T7"])
        assert rm.assignment == {
            "Fz": Region.FRONTAL,
            "Cz": Region.CENTRAL,
            "Pz": Region.PARIETAL,
            "Oz": Region.OCCIPITAL,
            "T7": Region.TEMPORAL,
        }

    def test_two_letter_prefixes_win(self):
        rm = default_region_map(["FCz", "CP3", "TP7", "PO4", "Fp1", "AF3", "FT9"])
        assert rm.assignment["FCz"] == Region.CENTRAL
        assert rm.assignment["CP3"] == Region.PARIETAL
        assert rm.assignment["TP7"] == Region.TEMPORAL
        assert rm.assignment["PO4"] == Region.OCCIPITAL
        assert rm.assignment["Fp1"] == Region.FRONTAL
        assert rm.assignment["AF3"] == Region.FRONTAL
        assert rm.assignment["FT9"] == Region.TEMPORAL

    def test_configured_reference_is_excluded(self):
        rm = default_region_map(["FCz", "Cz"], exclude=("FCz",))
        assert "FCz" in rm.excluded
        assert rm.assignment == {"Cz": Region.CENTRAL}

    def test_unknown_label_excluded_with_warning(self):
        rm = default_region_map(["XX9"])
        assert "XX9" in rm.excluded
        assert any("XX9" in w for w in rm.warnings)

    def test_override(self):
        rm = default_region_map(["XX9"], override={"XX9": Region.FRONTAL})
        assert rm.assignment["XX9"] == Region.FRONTAL

    @given(
        st.lists(
            st.text(
                alphabet="FCTPOAzp123456789", min_size=1, max_size=4
            ),
            max_size=20,
            unique=True,
        )
    )
    def test_total_every_label_assigned_or_excluded(self, labels):
        rm = default_region_map(labels)
        for label in labels:
            assert (label in rm.assignment) != (label in rm.excluded)


class TestRegionPairs:
    def test_enumeration_oracle(self):
        # independent enumeration over the five region codes
        codes = ["F", "C", "T", "P", "O"]
        expected = []
        for i, a in enumerate(codes):
            for b in codes[i:]:
                expected.append(f"{a}-{b}")
        assert list(REGION_PAIRS) == expected
        assert len(REGION_PAIRS) == 15

    def test_fixed_order(self):
        assert REGION_PAIRS == (
            "F-F", "F-C", "F-T", "F-P", "F-O",
            "C-C", "C-T", "C-P", "C-O",
            "T-T", "T-P", "T-O",
            "P-P", "P-O", "O-O",
        )


class TestBandRegionTable:
    def _psd(self):
        return BandRegionTable(
            metric="psd_db",
            bands=tuple(b.name for b in DEFAULT_BANDS),
            columns=tuple(r.value for r in Region),
            values=np.zeros((6, 5)),
            n_epochs_used=np.ones((6, 5), dtype=int),
        )

    def test_psd_cell_count_default(self):
        assert self._psd().values.size == 30

    def test_wpli_cell_count_default(self):
        table = BandRegionTable(
            metric="wpli",
            bands=tuple(b.name for b in DEFAULT_BANDS),
            columns=REGION_PAIRS,
            values=np.full((6, 15), 0.5),
            n_epochs_used=np.ones((6, 15), dtype=int),
        )
        assert table.values.size == 90

    def test_wpli_range_enforced(self):
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            BandRegionTable(
                metric="wpli",
                bands=("delta",),
                columns=REGION_PAIRS,
                values=np.full((1, 15), 1.5),
                n_epochs_used=np.ones((1, 15), dtype=int),
            )

    def test_reported_cells_need_epochs(self):
        with pytest.raises(ValidationError, match="n_epochs_used"):
            BandRegionTable(
                metric="psd_db",
                bands=("delta",),
                columns=tuple(r.value for r in Region),
                values=np.zeros((1, 5)),
                n_epochs_used=np.zeros((1, 5), dtype=int),
            )

    def test_nan_cells_allowed_without_epochs(self):
        table = BandRegionTable(
            metric="psd_db",
            bands=("delta",),
            columns=tuple(r.value for r in Region),
            values=np.full((1, 5), np.nan),
            n_epochs_used=np.zeros((1, 5), dtype=int),
        )
        assert np.isnan(table.cell("delta", "frontal"))
