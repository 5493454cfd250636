"""Serve the adapter: python -m vidadapter [--config x.json | --stub-fixtures DIR]."""

import argparse
import logging

import uvicorn

from .config import AdapterConfig
from .server import create_app


def main():
    parser = argparse.ArgumentParser(description="perception adapter service")
    parser.add_argument("--config", help="AdapterConfig JSON file")
    parser.add_argument("--stub-fixtures",
                        help="run every role stubbed against this fixture directory")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8790)
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO)
    if args.config:
        config = AdapterConfig.from_file(args.config)
    elif args.stub_fixtures:
        config = AdapterConfig.stub_only(args.stub_fixtures)
    else:
        parser.error("one of --config or --stub-fixtures is required")
    uvicorn.run(create_app(config), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
