"""Newline-delimited JSON serving: TCP (one worker thread per connection)
and a stdio variant for subprocess embedding. Responses are emitted in
request order per connection; malformed requests get error responses and
never take the process down."""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import sys
import threading

from .providers import ProviderError

log = logging.getLogger("tikzlab_sidecar")

KINDS = ("embed_text", "embed_image", "caption_image")


def hello_line(provider, dim: int) -> str:
    return json.dumps({"hello": {"dim": dim, "model_id": provider.model_id}})


def handle_request(provider, lock: threading.Lock, line: str) -> str:
    """One request line in, one response line out; all failures become
    per-request error payloads."""
    req_id = None
    try:
        request = json.loads(line)
        if not isinstance(request, dict):
            raise ValueError("request must be a JSON object")
        req_id = request.get("id")
        kind = request.get("kind")
        if kind not in KINDS:
            raise ValueError(f"unknown kind: {kind!r}")
        if kind == "embed_text":
            if not isinstance(request.get("text"), str):
                raise ValueError("embed_text requires a text field")
            with lock:  # inference backends are not re-entrant
                vector = provider.embed_text(request["text"])
            payload = {"embedding": vector.tolist()}
        else:
            if not isinstance(request.get("image_path"), str):
                raise ValueError(f"{kind} requires an image_path field")
            with lock:
                if kind == "embed_image":
                    payload = {
                        "embedding": provider.embed_image(
                            request["image_path"]
                        ).tolist()
                    }
                else:
                    payload = {
                        "candidates": provider.caption_image(
                            request["image_path"]
                        )
                    }
        response = {"id": req_id, **payload, "model_id": provider.model_id}
    except (ValueError, KeyError, TypeError, ProviderError) as exc:
        response = {"id": req_id, "error": str(exc)}
    except Exception as exc:  # survive anything a request can throw at us
        log.exception("request failed unexpectedly")
        response = {"id": req_id, "error": f"internal error: {exc}"}
    return json.dumps(response, ensure_ascii=False)


def _serve_stream(provider, lock, dim, reader, writer) -> None:
    writer.write(hello_line(provider, dim) + "\n")
    writer.flush()
    for line in reader:
        line = line.strip()
        if not line:
            continue
        writer.write(handle_request(provider, lock, line) + "\n")
        writer.flush()


class SidecarServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, addr: tuple[str, int], provider, dim: int):
        self.provider = provider
        self.dim = dim
        self.inference_lock = threading.Lock()
        super().__init__(addr, _ConnectionHandler)


class _ConnectionHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: SidecarServer = self.server
        rfile = self.connection.makefile("r", encoding="utf-8", newline="\n")
        wfile = self.connection.makefile("w", encoding="utf-8", newline="\n")
        try:
            _serve_stream(
                server.provider, server.inference_lock, server.dim, rfile, wfile
            )
        except (BrokenPipeError, ConnectionResetError, socket.error):
            pass  # client went away; nothing to do
        finally:
            rfile.close()
            wfile.close()


def serve_tcp(host: str, port: int, provider, dim: int) -> SidecarServer:
    """Bind and return the server; the caller drives serve_forever (or a
    thread around it)."""
    return SidecarServer((host, port), provider, dim)


def serve_stdio(provider, dim: int) -> None:
    lock = threading.Lock()
    _serve_stream(provider, lock, dim, sys.stdin, sys.stdout)
