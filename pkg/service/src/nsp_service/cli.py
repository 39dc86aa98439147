"""Service entry point: ``nsp-service serve`` and ``nsp-service precompute``."""

from __future__ import annotations

import argparse
import sys

from .config import ServiceConfig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nsp-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the scoring service")
    _add_model_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8100)
    p.add_argument("--max-batch", type=int, default=64)
    p.set_defaults(handler=cmd_serve)

    p = sub.add_parser("precompute", help="write a score file for a normalized dataset")
    _add_model_flags(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(handler=cmd_precompute)

    args = parser.parse_args(argv)
    return args.handler(args)


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default="bert-base-uncased",
                        help="checkpoint identifier or local path")
    parser.add_argument("--device", choices=("cpu", "accelerator"), default="cpu")
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                        default=True)


def _load_scorer(args: argparse.Namespace):
    from .scoring import TransformerNspScorer

    try:
        return TransformerNspScorer(
            args.model, device=args.device, deterministic=args.deterministic
        )
    except Exception as e:
        print(f"error: cannot load model {args.model!r}: {e}", file=sys.stderr)
        return None


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .app import create_app

    config = ServiceConfig(
        model=args.model,
        device=args.device,
        port=args.port,
        max_batch=args.max_batch,
        deterministic=args.deterministic,
    )
    scorer = _load_scorer(args)
    if scorer is None:
        return 1
    app = create_app(config, scorer=scorer)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_precompute(args: argparse.Namespace) -> int:
    from .precompute import precompute

    scorer = _load_scorer(args)
    if scorer is None:
        return 1
    count = precompute(args.dataset, args.output, scorer, batch_size=args.batch_size)
    print(f"wrote {count} score entries -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
