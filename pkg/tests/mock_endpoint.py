"""A tiny chat-completions look-alike served from a background thread."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer


class MockEndpoint:
    """Replies from a script: each entry is ``(status, content)`` or ``("stall", seconds)``."""

    def __init__(self, script):
        self.script = list(script)
        self.requests = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                n = int(self.headers.get("Content-Length", 0))
                outer.requests.append({"body": json.loads(self.rfile.read(n)),
                                       "auth": self.headers.get("Authorization")})
                kind, val = outer.script.pop(0) if outer.script else (200, "")
                if kind == "stall":
                    time.sleep(val)
                    kind, val = 200, '{"vx":0,"vy":0}'
                body = json.dumps({"choices": [{"message": {"role": "assistant", "content": val}}]})
                self.send_response(kind)
                self.send_header("Content-Type", "application/json")
                self.end_headers()
                self.wfile.write(body.encode())

            def log_message(self, *args):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_port}/v1/chat/completions"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
