"""Tests for src/storage/files.py - atomic writes."""

import json
import os

import pytest

from src.storage.files import atomic_write_bytes, atomic_write_json, atomic_write_text


class TestAtomicWrites:
    """Tests for the atomic write helpers."""

    def test_creates_parent_directories(self, tmp_path):
        """Test missing parents are created."""
        atomic_write_text(tmp_path / "a" / "b" / "c.txt", "hi")
        assert (tmp_path / "a" / "b" / "c.txt").read_text(encoding="utf-8") == "hi"

    def test_json_format(self, tmp_path):
        """Test JSON is indented, unescaped and newline-terminated."""
        atomic_write_json(tmp_path / "x.json", {"naïve": 1})
        text = (tmp_path / "x.json").read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert "naïve" in text
        assert json.loads(text) == {"naïve": 1}

    def test_failed_replace_keeps_old_file(self, tmp_path, mocker):
        """Test a failure during replace leaves the previous content and no temp files."""
        target = tmp_path / "data.bin"
        atomic_write_bytes(target, b"old")
        mocker.patch("src.storage.files.os.replace", side_effect=OSError("disk full"))
        with pytest.raises(OSError):
            atomic_write_bytes(target, b"new")
        assert target.read_bytes() == b"old"
        assert os.listdir(tmp_path) == ["data.bin"]
