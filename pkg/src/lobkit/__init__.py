"""Limit order book engine and microstructure analytics."""
