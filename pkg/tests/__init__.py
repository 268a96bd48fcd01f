"""subrefine test suite."""
