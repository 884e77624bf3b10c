"""Serve the fixture corpus with scripted backends, for manual UI work and
for the frontend's live round-trip tests:

    python3 scripts/serve_fixture.py [--port 8000] [workdir]

then open http://127.0.0.1:8000/ (after `npm run build` in frontend/), or:

    cd frontend && RAGKIT_UI_BASE_URL=http://127.0.0.1:8000 npm test
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "tests"))

import uvicorn

from conftest import make_workspace
from ragkit.app import Engine
from ragkit.config import AppConfig
from ragkit.service import create_app


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("workdir", nargs="?", default=None)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="ragkit-ui-"))
    config_path = make_workspace(workdir)
    engine = Engine(AppConfig.from_file(config_path))
    counts = engine.ingest()
    print(f"fixture corpus ready: {counts}")
    uvicorn.run(create_app(engine), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
