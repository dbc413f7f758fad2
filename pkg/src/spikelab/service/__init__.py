"""HTTP service wrapping the harness commands."""
