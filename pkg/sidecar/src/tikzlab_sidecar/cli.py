"""Entry point: pick a provider (mock or CLIP) and serve over TCP or stdio."""

from __future__ import annotations

import argparse
import logging
import sys

from .providers import MOCK_DIM, ClipProvider, MockProvider, ProviderError
from .server import serve_stdio, serve_tcp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tikzlab-sidecar",
        description="CLIP embedding sidecar (newline-delimited JSON)",
    )
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--listen", metavar="HOST:PORT", help="serve over TCP")
    mode.add_argument("--stdio", action="store_true",
                      help="serve over stdin/stdout")
    parser.add_argument("--model", default="ViT-B-32", help="CLIP model name")
    parser.add_argument("--mock", action="store_true",
                        help="hash-derived vectors, no model downloads")
    parser.add_argument("--seed", type=int, default=0, help="mock seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if args.mock:
        provider = MockProvider(seed=args.seed)
        dim = MOCK_DIM
    else:
        try:
            provider = ClipProvider(model_name=args.model)
        except ProviderError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        dim = provider.dim

    if args.stdio:
        serve_stdio(provider, dim)
        return 0

    host, _, port = args.listen.rpartition(":")
    try:
        port = int(port)
    except ValueError:
        print(f"error: bad listen address {args.listen!r}", file=sys.stderr)
        return 2
    server = serve_tcp(host or "127.0.0.1", port, provider, dim)
    actual = server.server_address
    print(f"listening on {actual[0]}:{actual[1]} ({provider.model_id})",
          file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
