"""Configuration-driven experiment runner, CSV/JSON output and plots."""
