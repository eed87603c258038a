"""Tiny HTTP stub serving the sunset/sunrise JSON the station downloads.

GET /solar?lat=<f>&lon=<f>&date=<YYYY-MM-DD> answers
{"sunset": "HH:MM", "sunrise": "HH:MM"} computed for those coordinates,
where sunrise is the next morning's. Exists so fetch-path tests and demo
runs need no external service.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from datetime import date
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .solar import GeoLocation, NoSolarEvent, compute_solar_times


class _Handler(BaseHTTPRequestHandler):
    utc_offset_minutes = 0

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        parsed = urllib.parse.urlparse(self.path)
        if parsed.path != "/solar":
            self._reply(404, {"error": "not found"})
            return
        q = urllib.parse.parse_qs(parsed.query)
        try:
            loc = GeoLocation(
                float(q["lat"][0]), float(q["lon"][0]), self.utc_offset_minutes
            )
            day = date.fromisoformat(q["date"][0])
            st = compute_solar_times(loc, day)
        except NoSolarEvent as exc:
            self._reply(404, {"error": exc.kind.value})
            return
        except (KeyError, ValueError) as exc:
            self._reply(400, {"error": str(exc)})
            return
        self._reply(200, {"sunset": str(st.sunset), "sunrise": str(st.sunrise_next)})

    def _reply(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args) -> None:  # quiet under pytest
        pass


class SolarStubServer:
    """Background-thread server; use as a context manager in tests."""

    def __init__(self, utc_offset_minutes: int = 0, port: int = 0):
        handler = type(
            "BoundHandler", (_Handler,), {"utc_offset_minutes": utc_offset_minutes}
        )
        self._httpd = ThreadingHTTPServer(("127.0.0.1", port), handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/solar"

    def __enter__(self) -> "SolarStubServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
