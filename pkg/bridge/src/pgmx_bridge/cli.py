"""Command line: load a user callable and serve it over stdin/stdout.

    bridge --module user_model --fn predict --mode node --classes K

`--module` takes an importable module name or a path to a .py file. The
callable receives the request's graph document (a plain dict) and returns
the class scores: one row per node in node mode, a single row in graph mode.
"""

from __future__ import annotations

import argparse
import importlib
import importlib.util
import sys
from pathlib import Path

from .serve import checksum_handler, prediction_handler, serve


def _load_module(ref: str):
    path = Path(ref)
    if path.suffix == ".py" and path.exists():
        module_spec = importlib.util.spec_from_file_location(path.stem, path)
        module = importlib.util.module_from_spec(module_spec)
        module_spec.loader.exec_module(module)
        return module
    return importlib.import_module(ref)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridge",
        description="Host a Python prediction callable behind the oracle wire protocol.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--module", help="module name or .py path holding the callable")
    parser.add_argument("--fn", default="predict", help="callable attribute name")
    parser.add_argument("--mode", choices=["node", "graph"], default="node",
                        help="prediction task mode")
    parser.add_argument("--classes", type=int, help="number of classes K")
    parser.add_argument("--checksum", action="store_true",
                        help="verification mode: reply with a payload digest instead "
                             "of scores")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.checksum:
        return serve(checksum_handler())
    if not args.module or not args.classes:
        print("bridge: --module and --classes are required (or use --checksum)",
              file=sys.stderr)
        return 2
    try:
        module = _load_module(args.module)
        model = getattr(module, args.fn)
    except (ImportError, AttributeError, OSError) as e:
        print(f"bridge: cannot load {args.fn!r} from {args.module!r}: {e}", file=sys.stderr)
        return 2
    if not callable(model):
        print(f"bridge: {args.module}.{args.fn} is not callable", file=sys.stderr)
        return 2
    return serve(prediction_handler(model, args.mode, args.classes))


if __name__ == "__main__":
    sys.exit(main())
