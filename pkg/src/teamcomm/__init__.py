"""Team voice-communication networks around in-game moments."""
__version__ = "0.1.0"
