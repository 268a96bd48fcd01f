"""subrefine - subtitle-prompted refinement of weakly supervised transcripts."""
