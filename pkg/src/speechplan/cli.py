"""Command-line entry point: run the API server or submit a WAV file."""

from __future__ import annotations

import argparse
import json
import sys
import time


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="speechplan",
        description="Stuttering analysis and therapy-planning service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API server")
    serve.add_argument("--bind", default=None, help="host:port (default from BIND_ADDR)")

    submit = sub.add_parser("submit", help="submit a WAV file to a running server")
    submit.add_argument("wav_path")
    submit.add_argument("--server", default="http://127.0.0.1:8000")
    submit.add_argument("--mode", choices=["classification_only", "full"], default="full")
    submit.add_argument("--wait", action="store_true", help="poll until processing ends")

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .api import create_app
        from .config import Settings
        from .service import SessionService

        settings = Settings.from_env()
        bind = args.bind or settings.bind_addr
        host, _, port = bind.partition(":")
        app = create_app(SessionService(settings))
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
        return 0

    if args.command == "submit":
        import httpx

        with open(args.wav_path, "rb") as fh:
            audio = fh.read()
        metadata = json.dumps({"mode": args.mode, "patient": {}, "seg_config": {},
                               "orch_config": {}})
        resp = httpx.post(
            f"{args.server}/api/sessions",
            data={"metadata": metadata},
            files={"audio": ("input.wav", audio, "audio/wav")},
        )
        resp.raise_for_status()
        session_id = resp.json()["sessionId"]
        print(f"session: {session_id}")
        if args.wait:
            while True:
                status = httpx.get(f"{args.server}/api/sessions/{session_id}").json()
                print(f"  {status['lifecycle']} {status.get('stage') or ''} "
                      f"{status.get('progress', 0):.0%}")
                if status["lifecycle"] in ("ResultsReady", "PendingReview",
                                           "Approved", "Rejected", "Failed"):
                    break
                time.sleep(1)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
