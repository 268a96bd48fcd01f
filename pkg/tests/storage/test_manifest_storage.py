"""Tests for src/storage/manifest_storage.py - JSON Lines manifests and feature sidecars."""

import json

import numpy as np
import pytest

from src.core.errors import FeatureFileError, ManifestError
from src.storage.manifest_storage import (
    HEADER,
    TrainingUtterance,
    Utterance,
    decode_features,
    encode_features,
    load_manifest,
    read_feature_file,
    write_feature_file,
    write_manifest,
)
from tests.factories import UtteranceFactory


class TestUtterance:
    """Tests for the Utterance record."""

    def test_features_coerced_to_float32(self):
        """Test float64 features are stored as contiguous float32."""
        utt = UtteranceFactory(features=np.ones((3, 2), dtype=np.float64))
        assert utt.features.dtype == np.float32
        assert utt.features.flags["C_CONTIGUOUS"]

    def test_zero_frames_rejected(self):
        """Test an utterance needs at least one frame."""
        with pytest.raises(ManifestError) as exc:
            UtteranceFactory(id="empty", features=np.zeros((0, 4)))
        assert exc.value.utterance_id == "empty"

    def test_one_dimensional_features_rejected(self):
        """Test features must be a matrix."""
        with pytest.raises(ManifestError):
            UtteranceFactory(features=np.zeros(4))

    def test_duration_cap(self):
        """Test durations above 30 s are rejected and exactly 30 s is accepted."""
        UtteranceFactory(duration_ms=30_000)
        with pytest.raises(ManifestError):
            UtteranceFactory(duration_ms=30_001)

    def test_training_view_has_no_reference(self):
        """Test the training view drops the reference field entirely."""
        view = UtteranceFactory().training_view()
        assert isinstance(view, TrainingUtterance)
        assert not hasattr(view, "reference")

    def test_with_pseudo_leaves_original(self):
        """Test with_pseudo returns a copy."""
        utt = UtteranceFactory(pseudo_transcript="old")
        new = utt.with_pseudo("new")
        assert utt.pseudo_transcript == "old"
        assert new.pseudo_transcript == "new"
        assert new.reference == utt.reference

    def test_equality_is_bitwise_on_features(self):
        """Test a one-ulp feature change breaks equality."""
        a = UtteranceFactory(id="x")
        features = a.features.copy()
        features[0, 0] = np.nextafter(features[0, 0], np.float32(np.inf))
        b = Utterance(a.id, features, a.subtitle, a.pseudo_transcript, a.duration_ms, a.reference)
        assert a != b
        assert a == Utterance(a.id, a.features.copy(), a.subtitle, a.pseudo_transcript, a.duration_ms, a.reference)


class TestFeatureSidecar:
    """Tests for the SBRF feature format."""

    def test_layout(self):
        """Test magic, little-endian header and float32 payload."""
        matrix = np.arange(6, dtype=np.float32).reshape(3, 2)
        data = encode_features(matrix)
        assert data[:4] == b"SBRF"
        assert HEADER.unpack_from(data) == (b"SBRF", 3, 2)
        assert len(data) == 12 + 6 * 4
        np.testing.assert_array_equal(decode_features(data), matrix)

    def test_bad_magic(self):
        """Test a wrong magic is rejected."""
        data = b"XXXX" + encode_features(np.zeros((1, 1)))[4:]
        with pytest.raises(FeatureFileError, match="bad magic"):
            decode_features(data, "u1")

    def test_truncated_payload_names_sizes(self):
        """Test a truncated file reports declared and actual sizes."""
        data = encode_features(np.zeros((4, 3)))[:-12]
        with pytest.raises(FeatureFileError) as exc:
            decode_features(data, "u1")
        message = str(exc.value)
        assert "N=4" in message and "d_feat=3" in message and "3 rows" in message
        assert exc.value.utterance_id == "u1"

    def test_shorter_than_header(self):
        """Test a file shorter than the header is rejected."""
        with pytest.raises(FeatureFileError):
            decode_features(b"SBR")

    def test_nan_rejected(self):
        """Test NaN values are rejected on read."""
        with pytest.raises(FeatureFileError, match="NaN"):
            decode_features(encode_features(np.array([[np.nan]])))

    def test_missing_file(self, tmp_path):
        """Test a missing sidecar names the path."""
        with pytest.raises(FeatureFileError, match="not found"):
            read_feature_file(tmp_path / "nope.sbrf", "u9")

    def test_file_round_trip(self, tmp_path):
        """Test writing then reading a sidecar preserves bits."""
        matrix = np.random.default_rng(0).normal(size=(5, 3)).astype(np.float32)
        write_feature_file(tmp_path / "a.sbrf", matrix)
        assert read_feature_file(tmp_path / "a.sbrf").tobytes() == matrix.tobytes()


class TestManifest:
    """Tests for write_manifest / load_manifest."""

    def test_round_trip(self, tmp_path):
        """Test load(write(m)) == m including features."""
        utterances = UtteranceFactory.build_batch(3)
        utterances[1] = utterances[1].with_pseudo("")
        path = tmp_path / "m.jsonl"
        write_manifest(utterances, path)
        assert load_manifest(path) == utterances

    def test_record_layout(self, tmp_path):
        """Test one JSON object per line with a relative sidecar path."""
        utt = UtteranceFactory(id="a-1", reference=None)
        path = tmp_path / "m.jsonl"
        write_manifest([utt], path)
        record = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert list(record) == ["id", "subtitle", "pseudo_transcript", "duration_ms", "feature_file"]
        assert record["feature_file"] == "features/a-1.sbrf"
        assert (tmp_path / "features" / "a-1.sbrf").exists()

    def test_missing_reference_loads_as_none(self, tmp_path):
        """Test absent references round-trip as None."""
        path = tmp_path / "m.jsonl"
        write_manifest([UtteranceFactory(reference=None)], path)
        assert load_manifest(path)[0].reference is None

    def test_unicode_text(self, tmp_path):
        """Test non-ASCII subtitles are written verbatim."""
        path = tmp_path / "m.jsonl"
        write_manifest([UtteranceFactory(subtitle="één café")], path)
        assert "één café" in path.read_text(encoding="utf-8")
        assert load_manifest(path)[0].subtitle == "één café"

    def test_duplicate_ids(self, tmp_path):
        """Test duplicate ids are rejected."""
        with pytest.raises(ManifestError):
            write_manifest([UtteranceFactory(id="d"), UtteranceFactory(id="d")], tmp_path / "m.jsonl")

    def test_invalid_json_names_line(self, tmp_path):
        """Test a corrupt line is reported with its line number."""
        path = tmp_path / "m.jsonl"
        write_manifest([UtteranceFactory()], path)
        with path.open("a", encoding="utf-8") as handle:
            handle.write("{not json\n")
        with pytest.raises(ManifestError, match=r"m\.jsonl:2"):
            load_manifest(path)

    def test_missing_field_names_utterance(self, tmp_path):
        """Test a record without a required field names its id."""
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps({"id": "u7", "subtitle": ""}) + "\n", encoding="utf-8")
        with pytest.raises(ManifestError) as exc:
            load_manifest(path)
        assert exc.value.utterance_id == "u7"

    def test_missing_sidecar(self, tmp_path):
        """Test a deleted sidecar is reported for its utterance."""
        path = tmp_path / "m.jsonl"
        write_manifest([UtteranceFactory(id="gone")], path)
        (tmp_path / "features" / "gone.sbrf").unlink()
        with pytest.raises(FeatureFileError) as exc:
            load_manifest(path)
        assert exc.value.utterance_id == "gone"

    def test_missing_manifest(self, tmp_path):
        """Test loading a nonexistent manifest raises."""
        with pytest.raises(ManifestError):
            load_manifest(tmp_path / "none.jsonl")
