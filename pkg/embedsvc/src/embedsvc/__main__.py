"""Command-line entry point: run the service under uvicorn."""

from __future__ import annotations

import argparse

import uvicorn

from .service import DEFAULT_BATCH_CAP, ServiceConfig, create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedsvc",
        description="Serve text embeddings over HTTP.",
    )
    parser.add_argument("--host", default="127.0.0.1",
                        help="bind address (default: %(default)s)")
    parser.add_argument("--port", type=int, default=8100,
                        help="bind port (default: %(default)s)")
    parser.add_argument("--backend", choices=("sentence", "hashing"),
                        default="sentence",
                        help="encoder backend (default: %(default)s)")
    parser.add_argument("--model-id", default=None, metavar="ID",
                        help="encoder model id; defaults per backend")
    parser.add_argument("--batch-cap", type=int, default=DEFAULT_BATCH_CAP,
                        metavar="N",
                        help="max texts per request (default: %(default)s)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = ServiceConfig(backend=args.backend, model_id=args.model_id,
                           batch_cap=args.batch_cap)
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
