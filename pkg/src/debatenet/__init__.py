"""Retweet-network opinion groups and reply-network engagement analysis."""

__version__ = "0.1.0"
