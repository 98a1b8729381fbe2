"""Launcher for the TWSO restoration toolkit.

Loads .env (when present) so TWSO_* settings reach the command line front
end, then hands the arguments to src.cli.
"""
from __future__ import annotations

import sys
from pathlib import Path

from dotenv import load_dotenv

ROOT = Path(__file__).resolve().parent
ENV_PATH = ROOT / ".env"


def main() -> int:
    if ENV_PATH.exists():
        load_dotenv(dotenv_path=ENV_PATH)

    from src.cli import main as cli_main

    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
