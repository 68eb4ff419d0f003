"""Console entry point: load a backend directory and serve it."""

from __future__ import annotations

import argparse
import logging

import uvicorn

from .app import DEFAULT_MICRO_BATCH_SIZE, create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="serve conditional log-likelihood scoring")
    parser.add_argument("--model-dir", required=True)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8400)
    parser.add_argument("--micro-batch-size", type=int, default=DEFAULT_MICRO_BATCH_SIZE)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    app = create_app(model_dir=args.model_dir, micro_batch_size=args.micro_batch_size)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
