"""GSM-controlled street-light switching station: controller, simulator, service."""

__version__ = "0.1.0"
