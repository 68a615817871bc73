"""Ranking metrics, significance testing and query-grouped cross-validation."""
