"""In-process HTTP stub for the chat-completion endpoint."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubLlmServer:
    """Answers every POST with a canned (or computed) chat reply.

    reply can be a string or a callable prompt -> string. delay simulates a
    slow upstream; status overrides the HTTP code.
    """

    def __init__(self, reply="OK", delay: float = 0.0, status: int = 200):
        self.reply = reply
        self.delay = delay
        self.status = status
        self.requests: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length)) if length else {}
                stub.requests.append(body)
                if stub.delay:
                    time.sleep(stub.delay)
                prompt = ""
                for msg in body.get("messages", []):
                    prompt = msg.get("content", "")
                text = stub.reply(prompt) if callable(stub.reply) else stub.reply
                payload = json.dumps(
                    {"choices": [{"message": {"role": "assistant", "content": text}}]}
                ).encode()
                try:
                    self.send_response(stub.status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                except BrokenPipeError:
                    pass  # client gave up (timeout tests)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self) -> "StubLlmServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
