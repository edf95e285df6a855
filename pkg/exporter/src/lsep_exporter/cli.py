"""Standalone exporter entry point; flag naming mirrors the consumer CLI."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .export import ExportJob, export_llm, export_ssl
from .tensor_format import ExportError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsep-export",
        description="Serialize SSL / language-model hidden states for the lsep toolkit",
    )
    parser.add_argument("--manifest", required=True, help="input manifest JSON")
    parser.add_argument("--out-dir", required=True, help="output directory")
    parser.add_argument("--ssl-model", help="speech model id or local path")
    parser.add_argument("--text-model", help="sentence-embedding model id or local path")
    parser.add_argument("--llm-model", help="language model id or local path")
    hint = parser.add_mutually_exclusive_group()
    hint.add_argument("--hint", dest="hint", action="store_true", default=True,
                      help="prepend the task hint to each dialogue (default)")
    hint.add_argument("--no-hint", dest="hint", action="store_false")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        manifest=Path(args.manifest),
        out_dir=Path(args.out_dir),
        ssl_model=args.ssl_model,
        text_model=args.text_model,
        llm_model=args.llm_model,
        hint=args.hint,
    )
    try:
        did = False
        if job.ssl_model or job.text_model:
            export_ssl(job)
            did = True
            # chain the LLM pass off the rewritten manifest so refs compose
            job = dataclasses.replace(job, manifest=job.out_dir / "manifest.json")
        if job.llm_model:
            export_llm(job)
            did = True
        if not did:
            print("nothing to do: pass --ssl-model/--text-model and/or --llm-model", file=sys.stderr)
            return 2
    except ExportError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
