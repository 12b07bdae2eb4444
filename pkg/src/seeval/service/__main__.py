"""Run the listening-test service: python -m seeval.service --data-dir DIR"""

import argparse

import uvicorn

from .app import create_app


def main():
    parser = argparse.ArgumentParser(description="P.835 listening-test service")
    parser.add_argument("--data-dir", required=True, help="experiment state directory")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()
    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
