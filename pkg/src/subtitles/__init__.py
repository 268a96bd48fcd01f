"""Subtitle ingestion."""

from .srt import SubtitleCue, cues_in_window, parse_srt, render_srt

__all__ = ["SubtitleCue", "parse_srt", "render_srt", "cues_in_window"]
