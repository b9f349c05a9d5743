"""Host arbitrary Python prediction callables behind the pgmx wire protocol."""

from .serve import canonical_payload, checksum_handler, prediction_handler, serve

__version__ = "0.1.0"
