"""radialwave-lab command-line entry point."""

from src.cli.commands import run

if __name__ == "__main__":
    raise SystemExit(run())
