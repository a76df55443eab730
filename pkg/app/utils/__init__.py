"""CSV tables and the verification suite."""
