"""aiotphy: link-level PHY simulator and codec library for 3GPP Ambient-IoT."""

__version__ = "0.1.0"
