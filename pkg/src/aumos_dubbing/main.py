"""AumOS Dubbing command-line entry point.

Subcommands: prepare | train | translate | evaluate | vad | analyze | toy.
Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, NoReturn

from aumos_dubbing import __version__
from aumos_dubbing.adapters.artifacts import UNIGRAM_FILE
from aumos_dubbing.core.config import TrainingMode
from aumos_dubbing.core.corpus import render_pause_table
from aumos_dubbing.core.metrics import render_table
from aumos_dubbing.core.services import (
    DEFAULT_THRESHOLDS,
    AnalyzeService,
    EvaluateService,
    PrepareService,
    ToyCorpusService,
    TrainService,
    TranslateService,
    VadService,
)
from aumos_dubbing.errors import DubbingError
from aumos_dubbing.observability import configure_logging, get_logger
from aumos_dubbing.settings import Settings, load_settings

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA_ERROR = 2


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage-error code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _system_spec(value: str) -> tuple[str, Path]:
    name, sep, path = value.partition("=")
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {value!r}")
    return name, Path(path)


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return number


def build_parser() -> argparse.ArgumentParser:
    """Parser with the global overrides and one sub-parser per subcommand."""
    parser = _ArgumentParser(prog="aumos-dubbing", description="Isochrony-aware translation for automatic dubbing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--seed", type=int, help="root seed")
    parser.add_argument("--mode", choices=[mode.value for mode in TrainingMode], help="training mode")
    parser.add_argument("--sigma", type=float, help="duration noise sigma")
    parser.add_argument("--bins", type=int, help="number of duration bins")
    parser.add_argument("--frame-ms", type=int, help="duration frame length in ms")
    parser.add_argument("--preset", choices=["desk", "base"], help="model size preset")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-json", action="store_true", default=None, help="JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True)

    prepare = sub.add_parser("prepare", help="derive records, bins, vocabularies and lexicon from alignments")
    prepare.add_argument("alignments", type=Path)
    prepare.add_argument("--out", type=Path, required=True, help="prepared directory")

    train = sub.add_parser("train", help="train one mode on a prepared directory")
    train.add_argument("--prepared", type=Path, required=True)
    train.add_argument("--out", type=Path, required=True, help="run directory for checkpoint and log")
    train.add_argument("--epochs", type=int, help="maximum epochs")
    train.add_argument("--oversample", type=int, help="noisy copies per training record")
    train.add_argument("--resume", action="store_true", help="continue from the run directory's checkpoint")

    translate = sub.add_parser("translate", help="translate text with durations or WAV timing")
    translate.add_argument("--checkpoint", type=Path, required=True)
    translate.add_argument("--prepared", type=Path, required=True)
    translate.add_argument("--input", type=Path, required=True, help="JSONL of {id, src, seg_ms | wav}")
    translate.add_argument("--out", type=Path, required=True, help="hypothesis JSONL")

    evaluate = sub.add_parser("evaluate", help="score hypotheses for BLEU and speech overlap")
    evaluate.add_argument("--refs", type=Path, required=True, help="reference record file, e.g. test.jsonl")
    evaluate.add_argument(
        "--system", type=_system_spec, action="append", required=True, help="NAME=PATH, repeatable"
    )
    evaluate.add_argument("--out", type=Path, help="report JSON; the table goes next to it as .txt")

    vad = sub.add_parser("vad", help="speech segments of a WAV file")
    vad.add_argument("wav", type=Path)
    vad.add_argument("--bins-file", type=Path, help="bins.json to also report bin indices")
    vad.add_argument("--out", type=Path, help="segments JSON; stdout when omitted")

    analyze = sub.add_parser("analyze", help="pause statistics over thresholds")
    analyze.add_argument("alignments", type=Path)
    analyze.add_argument("--thresholds", type=int, nargs="+", default=list(DEFAULT_THRESHOLDS))
    analyze.add_argument("--lexicon", type=Path, help="also report word recovery of a lexicon")

    toy = sub.add_parser("toy", help="write a generated toy corpus")
    toy.add_argument("--n", type=_positive_int, default=2000, help="number of utterances")
    toy.add_argument("--out", type=Path, required=True, help="alignment JSONL")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Nested settings overrides from the command-line flags that were given."""
    overrides: dict[str, Any] = {}
    flat = {
        "seed": args.seed,
        "mode": args.mode,
        "bins": args.bins,
        "frame_ms": args.frame_ms,
        "model_preset": args.preset,
        "log_level": args.log_level,
        "log_json": args.log_json,
    }
    overrides.update({key: value for key, value in flat.items() if value is not None})
    noise = {"sigma": args.sigma, "oversample": getattr(args, "oversample", None)}
    if any(value is not None for value in noise.values()):
        overrides["noise"] = {key: value for key, value in noise.items() if value is not None}
    if getattr(args, "epochs", None) is not None:
        overrides["model"] = {"max_epochs": args.epochs}
    return overrides


# ─────────────────────────────────────────────
# Subcommand handlers
# ─────────────────────────────────────────────


def cmd_prepare(args: argparse.Namespace, settings: Settings) -> int:
    """Prepare a corpus and print pause statistics per split."""
    result = PrepareService(settings).run(args.alignments, args.out)
    sys.stdout.write(render_pause_table(result.stats))
    return EXIT_OK


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    """Train and report the best epoch."""
    result = TrainService(settings).run(args.prepared, args.out, resume=args.resume)
    sys.stdout.write(f"best_epoch={result.best_epoch} best_bleu={result.best_bleu} checkpoint={result.checkpoint}\n")
    return EXIT_OK


def cmd_translate(args: argparse.Namespace, settings: Settings) -> int:
    """Translate an input file."""
    TranslateService(settings).run(args.checkpoint, args.prepared, args.input, args.out)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    """Score systems and print the comparison table."""
    reports = EvaluateService(settings).run(args.refs, args.system, args.out)
    sys.stdout.write(render_table(reports))
    return EXIT_OK


def cmd_vad(args: argparse.Namespace, settings: Settings) -> int:
    """Detect speech segments."""
    result = VadService(settings).run(args.wav, args.bins_file)
    text = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, settings: Settings) -> int:
    """Print pause statistics per threshold and, optionally, lexicon recovery."""
    service = AnalyzeService(settings)
    sys.stdout.write(render_pause_table(service.pause_stats(args.alignments, args.thresholds)))
    if args.lexicon is not None:
        recovered, total, rate = service.lexicon_recovery(args.lexicon, args.lexicon.with_name(UNIGRAM_FILE))
        sys.stdout.write(f"lexicon recovery: {recovered}/{total} ({100 * rate:.1f}%)\n")
    return EXIT_OK


def cmd_toy(args: argparse.Namespace, settings: Settings) -> int:
    """Write a toy corpus."""
    ToyCorpusService(settings).run(args.n, args.out)
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "translate": cmd_translate,
    "evaluate": cmd_evaluate,
    "vad": cmd_vad,
    "analyze": cmd_analyze,
    "toy": cmd_toy,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings(args.config, overrides_from_args(args))
        configure_logging(settings.log_level, settings.log_json)
        return COMMANDS[args.command](args, settings)
    except DubbingError as exc:
        logger.error("command_failed", command=args.command, reason=exc.message, context=exc.context)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
