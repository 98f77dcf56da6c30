"""Command-line entry point: ``lidexport export``."""
from __future__ import annotations

import argparse
import sys

from .capture import InputSpec, export_activations
from .errors import ExportError
from .models import load_model


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lidexport",
        description="Dump per-(layer, op) activation batches from a torch supernet.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    export = sub.add_parser(
        "export", help="run one forward pass and write blobs plus a manifest"
    )
    export.add_argument("--model", required=True, help="torch-saved module file")
    export.add_argument("--space", required=True, help="space description JSON")
    export.add_argument("--batch", required=True, type=int, help="input batch size")
    export.add_argument("--seed", type=int, default=0, help="input batch seed")
    export.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return 0 if exc.code in (0, None) else 1
    try:
        model = load_model(args.model)
        spec = InputSpec(batch=args.batch, seed=args.seed)
        manifest = export_activations(model, args.space, spec, args.out)
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {len(manifest.entries)} blobs and manifest.json to {args.out} "
        f"(batch={manifest.batch}, source={manifest.data_source})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
