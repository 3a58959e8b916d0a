"""Link-level simulator and beam/slot scheduler for a tri-sectoral mmWave smart repeater."""
__version__ = "0.1.0"
