#!/usr/bin/env python3
"""Start the render service and an HTTP server for the browser viewer.

    python3 scripts/serve_viewer.py --dataset shell:dims=128,radius=48,thickness=2

Then open http://localhost:8080/ (the page connects to ws://localhost:9000
by default; pass ?ws=ws://host:port to point it elsewhere).
"""

import argparse
import asyncio
import functools
import http.server
import sys
import threading
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from voxelskip import serve


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="menger:level=3")
    ap.add_argument("--tf", default=None)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=9000, help="WebSocket port")
    ap.add_argument("--http-port", type=int, default=8080, help="static viewer port")
    ap.add_argument("--viewport", type=int, default=512)
    ap.add_argument("--dt", type=float, default=0.5)
    args = ap.parse_args()

    frontend = ROOT / "frontend"
    if not (frontend / "dist" / "main.js").exists():
        print("frontend/dist missing - run `npm run build` in frontend/ first",
              file=sys.stderr)
        return 1

    handler = functools.partial(
        http.server.SimpleHTTPRequestHandler, directory=str(frontend)
    )
    httpd = http.server.ThreadingHTTPServer((args.host, args.http_port), handler)
    threading.Thread(target=httpd.serve_forever, daemon=True).start()
    print(f"viewer:  http://{args.host}:{args.http_port}/")
    print(f"service: ws://{args.host}:{args.port}")

    try:
        asyncio.run(
            serve(dataset=args.dataset, tf=args.tf, host=args.host,
                  port=args.port, viewport=args.viewport, dt=args.dt)
        )
    except KeyboardInterrupt:
        pass
    finally:
        httpd.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
