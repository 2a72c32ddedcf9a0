"""Run the HTTP service under uvicorn."""

from __future__ import annotations

import argparse

import uvicorn

from .service import app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="regimesim-serve", description="Serve the simulation HTTP API."
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
