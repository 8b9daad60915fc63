"""Cross-cutting wrappers around CLI commands."""
