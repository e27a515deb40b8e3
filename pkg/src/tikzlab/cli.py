"""Command-line orchestration: extract, compile, generate, augment,
evaluate, analyze, and bws subcommands with reproducible, provenance-stamped
outputs."""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from . import analysis, augment, bws, compiler, corpus, metrics, repair
from .config import Config, load_config
from .embedder import open_embedder
from .errors import ConfigInvalid, TikzLabError

log = logging.getLogger("tikzlab")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def _hash_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_meta(out_path: Path, config: Config, inputs: dict[str, str]) -> None:
    """Sidecar provenance: version, effective config, input hashes. The
    timestamp lives only here so primary outputs stay byte-identical."""
    meta = {
        "toolkit_version": __version__,
        "config": config.as_dict(),
        "inputs": {name: _hash_file(p) for name, p in inputs.items()},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _dump_json(obj, path: Path) -> None:
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# subcommands

def cmd_extract(args, config: Config) -> int:
    src = Path(args.src)
    rules = corpus.RuleSet.from_file(args.rules) if args.rules else corpus.default_rules()
    origin = corpus.Origin(args.origin)

    projects = []
    subdirs = sorted(d for d in src.iterdir() if d.is_dir())
    roots = subdirs if subdirs else [src]
    for proj_dir in roots:
        files = {}
        for tex in sorted(proj_dir.rglob("*.tex")):
            text, _ = corpus.decode_lossy(tex.read_bytes())
            files[str(tex.relative_to(proj_dir))] = text
        if not files:
            continue
        root = next(
            (name for name, text in sorted(files.items()) if "\\documentclass" in text),
            sorted(files)[0],
        )
        projects.append(corpus.TexProject(root_file=root, files=files, origin=origin))

    records = []
    failures = 0
    for project in projects:
        try:
            records.extend(corpus.extract_records(project, rules))
        except TikzLabError as exc:
            log.warning("project %s failed: %s", project.root_file, exc)
            failures += 1

    records, duplicates = corpus.dedupe_records(records)
    rejected = 0
    if not args.no_compile:
        if not compiler.engine_available(config.engine_cmd):
            log.warning(
                "engine %r unavailable, skipping compilability filtering",
                config.engine_cmd,
            )
        else:
            compile_fn = compiler.make_compile_fn(
                config.engine_cmd, config.timeout_s
            )
            records, rejected = corpus.filter_compilable(records, compile_fn)

    out = Path(args.out)
    corpus.write_jsonl(records, out)
    _write_meta(out, config, {})
    print(
        f"extracted {len(records)} records "
        f"({duplicates} duplicates, {rejected} uncompilable, {failures} failed projects)"
    )
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_compile(args, config: Config) -> int:
    records = list(corpus.read_jsonl(args.infile))
    compile_fn = compiler.make_compile_fn(
        config.engine_cmd,
        config.timeout_s,
        scratch_root=args.workdir,
        keep_scratch=args.keep_scratch,
    )

    def run(rec):
        report = compile_fn(rec.code)
        return {
            "id": rec.id,
            "success": report.success,
            "produced_image": report.produced_image,
            "errors": len(report.errors),
            "diagnostics": [
                {
                    "severity": d.severity.value,
                    "message": d.message,
                    "line": d.line,
                }
                for d in report.diagnostics
            ],
        }

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        results = list(pool.map(run, records))

    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        for row in results:
            f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    _write_meta(out, config, {"in": args.infile})
    failed = sum(1 for r in results if not r["produced_image"])
    print(f"compiled {len(results)} records, {failed} without image")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_generate(args, config: Config) -> int:
    captions = [
        line.strip()
        for line in Path(args.captions).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    compile_fn = compiler.make_compile_fn(config.engine_cmd, config.timeout_s)
    failures = 0
    out = Path(args.out)
    with repair.SubprocessSampler(args.sampler_cmd) as sampler:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            for caption in captions:
                outcome = repair.generate_with_repair(
                    caption,
                    sampler,
                    compile_fn,
                    max_attempts=config.max_attempts,
                )
                if not outcome.success:
                    failures += 1
                row = {
                    "id": corpus.record_id(outcome.code),
                    "caption": caption,
                    "code": outcome.code,
                    "success": outcome.success,
                    "sampled_units": outcome.sampled_units,
                    "final_errors": outcome.final_errors,
                    "attempts": [dataclasses.asdict(a) for a in outcome.attempts],
                }
                f.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")
    _write_meta(out, config, {"captions": args.captions})
    print(f"generated {len(captions)} documents, {failures} failed")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_augment(args, config: Config) -> int:
    records = list(corpus.read_jsonl(args.infile))
    embedder = open_embedder(config.embedder_addr, seed=config.seed)
    try:
        augmented, count = augment.augment_records(
            records, args.images, embedder, always=args.always
        )
    finally:
        embedder.close()
    out = Path(args.out)
    corpus.write_jsonl(augmented, out)
    _write_meta(out, config, {"in": args.infile})
    print(f"augmented {count} of {len(records)} records")
    return EXIT_OK


def _read_record_dicts(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def cmd_evaluate(args, config: Config) -> int:
    pred = _read_record_dicts(args.pred)
    ref = _read_record_dicts(args.ref)
    wanted = (
        tuple(m.strip() for m in args.metrics.split(","))
        if args.metrics
        else metrics.REPORT_COLUMNS
    )
    unknown = set(wanted) - set(metrics.REPORT_COLUMNS)
    if unknown:
        raise ConfigInvalid(f"unknown metrics: {sorted(unknown)}")

    embedder = None
    if config.embedder_addr and set(wanted) & {"clip", "clip_img", "kid"}:
        embedder = open_embedder(config.embedder_addr, seed=config.seed)
    try:
        report = metrics.metric_report(
            pred,
            ref,
            embedder=embedder,
            metrics=wanted,
            crystalbleu_k=config.crystalbleu_k,
            kid_subset_size=config.kid_subset_size,
            kid_subsets=config.kid_subsets,
            clipscore_weighted=config.clipscore_weighted,
            seed=config.seed,
            dpi=config.dpi,
        )
    finally:
        if embedder is not None:
            embedder.close()
    out = Path(args.out)
    _dump_json(report.as_dict(), out)
    _write_meta(out, config, {"pred": args.pred, "ref": args.ref})
    print(f"wrote {out}")
    return EXIT_OK


def cmd_analyze(args, config: Config) -> int:
    pred = _read_record_dicts(args.pred)
    pred_tokens = [
        analysis.tokenize(analysis.strip_comments(r["code"])) for r in pred
    ]
    results = []
    if args.mode == "novelty":
        train = _read_record_dicts(args.train)
        train_tokens = [
            analysis.tokenize(analysis.strip_comments(r["code"])) for r in train
        ]
        for n in range(1, args.n_max + 1):
            index = analysis.build_index(train_tokens, n)
            results.append([n, analysis.ngram_novelty(pred_tokens, index)])
        inputs = {"train": args.train, "pred": args.pred}
    else:  # copying
        for n in range(1, args.n_max + 1):
            copied = 0
            total = 0
            for rec, code_tokens in zip(pred, pred_tokens):
                caption_tokens = analysis.tokenize(rec["caption"])
                grams = analysis.ngrams(caption_tokens, n)
                if not grams:
                    continue
                code_grams = set(analysis.ngrams(code_tokens, n))
                copied += sum(1 for g in grams if g in code_grams)
                total += len(grams)
            results.append([n, copied / total if total else 0.0])
        inputs = {"pred": args.pred}

    out = Path(args.out)
    _dump_json(results, out)
    _write_meta(out, config, inputs)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_bws(args, config: Config) -> int:
    annotations = bws.read_annotations(args.annotations)
    if args.mode == "score":
        scores = bws.bws_scores(annotations)
        out = Path(args.out)
        _dump_json(scores, out)
        _write_meta(out, config, {"annotations": args.annotations})
        print(f"wrote {out}")
    else:  # shr
        rho = bws.split_half_reliability(
            annotations, seed=config.seed, repeats=args.repeats
        )
        payload = {"shr": rho, "repeats": args.repeats, "seed": config.seed}
        if args.out:
            out = Path(args.out)
            _dump_json(payload, out)
            _write_meta(out, config, {"annotations": args.annotations})
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tikzlab",
        description="TikZ corpus construction, compile-repair, and evaluation toolkit",
    )
    parser.add_argument("--version", action="store_true", help="print version and exit")
    parser.add_argument("--json", action="store_true", help="machine-readable version output")
    parser.add_argument("--config", help="config file (key=value lines)")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--jobs", type=int, help="worker pool size (default: logical cores)")
    parser.add_argument("--engine-cmd", help="TeX engine command (default pdflatex)")
    parser.add_argument("--raster-cmd", help="PDF-to-PNG converter (default pdftoppm)")
    parser.add_argument("--embedder", dest="embedder_addr",
                        help="embedder address HOST:PORT, or mock[:SEED]")
    parser.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("extract", help="extract TikZ records from TeX source trees")
    p.add_argument("--src", required=True, help="directory of project subdirectories")
    p.add_argument("--origin", default="arxiv",
                   choices=[o.value for o in corpus.Origin])
    p.add_argument("--rules", help="preamble rule file (default: shipped rules)")
    p.add_argument("--no-compile", action="store_true",
                   help="skip compilability filtering")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compile", help="compile a record file and report diagnostics")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--workdir", help="scratch root (default: temp)")
    p.add_argument("--keep-scratch", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("generate", help="sample documents through the repair loop")
    p.add_argument("--captions", required=True, help="one caption per line")
    p.add_argument("--sampler-cmd", required=True,
                   help="sampler subprocess command (ndjson protocol)")
    p.add_argument("--max-attempts", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("augment", help="augment short captions via the embedder")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--images", required=True, help="directory of <id>.png images")
    p.add_argument("--always", action="store_true", help="augment all captions")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="compute automatic metrics")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--metrics", help="comma list of " + ",".join(metrics.REPORT_COLUMNS))
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="memorization analysis")
    p.add_argument("mode", choices=["novelty", "copying"])
    p.add_argument("--train", help="training records (novelty only)")
    p.add_argument("--pred", required=True)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bws", help="best-worst scaling scores and reliability")
    p.add_argument("mode", choices=["score", "shr"])
    p.add_argument("--annotations", required=True)
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--out")

    return parser


_DISPATCH = {
    "extract": cmd_extract,
    "compile": cmd_compile,
    "generate": cmd_generate,
    "augment": cmd_augment,
    "evaluate": cmd_evaluate,
    "analyze": cmd_analyze,
    "bws": cmd_bws,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.version:
        if args.json:
            print(json.dumps({"name": "tikzlab", "version": __version__}))
        else:
            print(f"tikzlab {__version__}")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_FATAL

    overrides = {
        "seed": args.seed,
        "jobs": args.jobs,
        "engine_cmd": args.engine_cmd,
        "raster_cmd": args.raster_cmd,
        "embedder_addr": args.embedder_addr,
    }
    if getattr(args, "max_attempts", None) is not None:
        overrides["max_attempts"] = args.max_attempts
    try:
        config = load_config(args.config, overrides)
        if args.command == "analyze" and args.mode == "novelty" and not args.train:
            raise ConfigInvalid("analyze novelty requires --train")
        return _DISPATCH[args.command](args, config)
    except TikzLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
