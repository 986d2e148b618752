"""annokit-bridge: feed the main toolkit from real ML components.

  embed  texts JSONL -> embedding pool file (jsonl or binmat)
  score  pool + demonstrations + LM endpoint -> confidence table
"""

from __future__ import annotations

import argparse
import sys

from .embed import InputError, embed_texts
from .encoders import EncoderError
from .lmscore import ScoringError, score_pool_remote


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annokit-bridge",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="encode texts into a pool file")
    p.add_argument("--in", dest="in_path", required=True,
                   help="JSONL of {id, text, label?}")
    p.add_argument("--out", required=True)
    p.add_argument("--encoder", default="hash:256",
                   help="hash:<dim> or st:<model-name>")
    p.add_argument("--format", choices=("jsonl", "binmat"), default="jsonl")
    p.add_argument("--ids-out", default=None, help="sidecar id file (binmat)")
    p.add_argument("--batch-size", type=int, default=32)

    p = sub.add_parser("score", help="confidence table from an LM endpoint")
    p.add_argument("--pool", required=True, help="pool JSONL (needs id + text)")
    p.add_argument("--demos", required=True, help="JSON list of {input, output}")
    p.add_argument("--out", required=True)
    p.add_argument("--lm-url", default=None)
    p.add_argument("--lm-token", default=None)
    p.add_argument("--max-tokens", type=int, default=64)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "embed":
            count = embed_texts(
                args.in_path, args.out,
                encoder_spec=args.encoder,
                out_format=args.format,
                ids_out=args.ids_out,
                batch_size=args.batch_size,
            )
            print(f"embedded {count} texts ({args.encoder}) -> {args.out}")
        else:
            count = score_pool_remote(
                args.pool, args.demos, args.out,
                url=args.lm_url, token=args.lm_token,
                max_tokens=args.max_tokens,
            )
            print(f"scored {count} instances -> {args.out}")
        return 0
    except (InputError, EncoderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScoringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
