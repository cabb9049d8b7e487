"""CLI: embed-export export --corpus PATH --field {description,comments}
[--encoder NAME] [--out PATH] [--batch-size N]"""

from __future__ import annotations

import argparse
import sys

from .corpus import CorpusError
from .encoders import DEFAULT_ENCODER, EncoderUnavailable
from .export import FIELDS, ExportJob, export
from .writer import WriteFailure


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-export")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="encode one text field of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--field", required=True, choices=FIELDS)
    p.add_argument("--encoder", default=DEFAULT_ENCODER)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            corpus=args.corpus, field=args.field, out=args.out,
            encoder=args.encoder, batch_size=args.batch_size,
        )
        path = export(job)
    except (CorpusError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (EncoderUnavailable, WriteFailure) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
