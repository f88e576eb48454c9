"""Command line entry point: ``bayesgate serve|score|sweep|verify-example|lexicon``.

Exit codes: 0 success, 1 user/input error, 2 storage error, 3 network error.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import socket
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .classifier import CorpusStats, FilterConfig, Label, as_fraction, classify, format_score
from .config import AppConfig, ConfigError, load_config
from .evalharness import DEFAULT_THRESHOLDS, CorpusFormatError, EmptyCorpus, format_table, load_corpus, sweep, to_csv
from .lexicon import (
    LexiconFileError,
    LexiconKind,
    MultiTokenTerm,
    default_spamwords,
    default_stopwords,
    format_lexicon_text,
    parse_lexicon_text,
)
from .service import analyze_text, utcnow
from .store import StorageFailure, Store, StoreError, replay_file

log = logging.getLogger("bayesgate")

EXIT_OK, EXIT_USER, EXIT_STORAGE, EXIT_NETWORK = 0, 1, 2, 3

EXAMPLE_TEXT = (
    "yesterday I went to a restaurant it was a bad experience food were disgusting "
    "and also waiters were stupid but the view was not bad"
)
EXAMPLE_STATS = CorpusStats(total_comments=358, spam_labeled=286, with_spam_words=295, total_content_tokens=3335)
EXAMPLE_SCORE = "0.323163841808"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USER):
        super().__init__(message)
        self.code = code


def _fail(message: str, code: int = EXIT_USER) -> CliError:
    return CliError(message, code)


def _load_cfg(args: argparse.Namespace) -> AppConfig:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise _fail(str(exc)) from None
    if args.store:
        cfg.storage_path = Path(args.store)
    return cfg


def _parse_stats(value: str) -> CorpusStats:
    text = value
    if not value.lstrip().startswith("{"):
        try:
            text = Path(value).read_text(encoding="utf-8")
        except OSError as exc:
            raise _fail(f"cannot read stats file {value}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("stats must be a JSON object")
        return CorpusStats.from_dict(data)
    except (ValueError, TypeError) as exc:
        raise _fail(f"invalid stats: {exc}") from None


def _replay(path: Path):
    try:
        return replay_file(path)
    except (OSError, StoreError) as exc:
        raise _fail(f"cannot read store {path}: {exc}", EXIT_STORAGE) from None


def _open_store(path: Path, **kw) -> Store:
    try:
        return Store(path, **kw)
    except (OSError, StoreError) as exc:
        raise _fail(f"cannot open store {path}: {exc}", EXIT_STORAGE) from None


def _parse_thresholds(value: Optional[str]) -> list[Fraction]:
    if not value:
        return list(DEFAULT_THRESHOLDS)
    try:
        return [as_fraction(part.strip()) for part in value.split(",") if part.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise _fail(f"invalid thresholds {value!r}: {exc}") from None


# -- commands -------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app
    from .service import ModerationService

    cfg = _load_cfg(args)
    store = _open_store(cfg.storage_path, snapshot_every=cfg.snapshot_every)
    try:
        try:
            sock = socket.create_server((cfg.host, cfg.port), family=_family(cfg.host))
        except OSError as exc:
            raise _fail(f"cannot bind {cfg.listen}: {exc.strerror or exc}", EXIT_NETWORK) from None
        service = ModerationService(store, cfg.filter, cfg.policy)
        app = create_app(service, admin_token=cfg.admin_token, trust_forwarded_for=cfg.trust_forwarded_for)
        if not cfg.admin_token:
            log.warning("no admin token configured; admin endpoints will refuse every request")
        server = uvicorn.Server(uvicorn.Config(app, log_level="info" if args.verbose else "warning"))
        print(f"bayesgate listening on {cfg.listen} (store {cfg.storage_path})", file=sys.stderr)
        # uvicorn re-raises the shutdown signal once it has drained; turn it into an exception
        previous = signal.signal(signal.SIGTERM, _raise_interrupt)
        try:
            server.run(sockets=[sock])
        except KeyboardInterrupt:
            pass
        finally:
            signal.signal(signal.SIGTERM, previous)
    finally:
        try:
            store.close(snapshot=True)
        except StorageFailure as exc:
            raise _fail(str(exc), EXIT_STORAGE) from None
    return EXIT_OK


def _raise_interrupt(signum, frame):
    raise KeyboardInterrupt


def _family(host: str) -> socket.AddressFamily:
    return socket.AF_INET6 if ":" in host else socket.AF_INET


def _read_text_arg(args: argparse.Namespace) -> str:
    if args.text is not None:
        return args.text
    try:
        if args.file == "-":
            return sys.stdin.read()
        return Path(args.file).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _fail(f"cannot read {args.file}: {exc}") from None


def cmd_score(args: argparse.Namespace) -> int:
    text = _read_text_arg(args)
    stopwords, spamwords = default_stopwords(), default_spamwords()
    stats = CorpusStats()
    threshold = None
    if args.store or (args.config and not args.stats):
        cfg = _load_cfg(args)
        state = _replay(cfg.storage_path)
        stats, stopwords, spamwords = state.stats, state.stopwords, state.spamwords
        threshold = (state.filter_config or cfg.filter).threshold
    if args.stats:
        stats = _parse_stats(args.stats)
    if args.threshold is not None:
        threshold = args.threshold
    try:
        if threshold is None:
            config = FilterConfig()
        else:
            t = as_fraction(threshold)
            # auto-learn is irrelevant here; keep its threshold from undercutting the filter's
            config = FilterConfig(threshold=t, autolearn_threshold=max(t, FilterConfig.autolearn_threshold))
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise _fail(f"invalid threshold: {exc}") from None

    analysis = analyze_text(text, stopwords, spamwords, stats)
    b = analysis.breakdown
    verdict = classify(b, config)
    print(f"content tokens: {b.content_token_count}")
    print(f"spam tokens: {b.spam_token_count}")
    print(f"likelihood: {format_score(b.likelihood)}")
    print(f"prior: {format_score(b.prior)}")
    print(f"evidence: {format_score(b.evidence)}")
    print(f"threshold: {float(config.threshold):g}")
    print(f"score {b.score_str}, {verdict.label.value.upper()}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        corpus = load_corpus(args.corpus)
    except OSError as exc:
        raise _fail(f"cannot read corpus {args.corpus}: {exc.strerror or exc}") from None
    except CorpusFormatError as exc:
        raise _fail(f"malformed corpus {args.corpus}: {exc}") from None
    stats = _parse_stats(args.stats) if args.stats else CorpusStats()
    stopwords = spamwords = None
    if args.store:
        state = _replay(Path(args.store))
        stopwords, spamwords = state.stopwords, state.spamwords
        if not args.stats:
            stats = state.stats
    try:
        rows = sweep(corpus, _parse_thresholds(args.thresholds), stats, stopwords, spamwords)
    except EmptyCorpus:
        raise _fail("empty corpus") from None
    except ValueError as exc:
        raise _fail(str(exc)) from None
    sys.stdout.write(format_table(rows))
    if args.csv == "-":
        sys.stdout.write("\n" + to_csv(rows))
    elif args.csv:
        try:
            Path(args.csv).write_text(to_csv(rows), encoding="utf-8")
        except OSError as exc:
            raise _fail(f"cannot write {args.csv}: {exc.strerror or exc}") from None
    return EXIT_OK


def verify_example() -> list[tuple[str, bool, str]]:
    """The worked restaurant example end to end; returns (check, ok, observed) rows."""
    analysis = analyze_text(EXAMPLE_TEXT, default_stopwords(), default_spamwords(), EXAMPLE_STATS)
    b = analysis.breakdown
    verdict = classify(b, FilterConfig(threshold=Fraction(35, 100)))
    return [
        ("content tokens = 12", b.content_token_count == 12, str(b.content_token_count)),
        ("spam tokens = 4", b.spam_token_count == 4, str(b.spam_token_count)),
        (f"score = {EXAMPLE_SCORE}", b.score_str == EXAMPLE_SCORE, b.score_str),
        ("verdict = HAM", verdict.label is Label.HAM, verdict.label.value.upper()),
    ]


def cmd_verify_example(args: argparse.Namespace) -> int:
    for name, ok, observed in verify_example():
        print(f"{'PASS' if ok else 'FAIL'}  {name}  (got {observed})")
        if not ok:
            print(f"verification failed at: {name}", file=sys.stderr)
            return EXIT_USER
    return EXIT_OK


def cmd_lexicon(args: argparse.Namespace) -> int:
    kind = LexiconKind(args.kind)
    cfg = _load_cfg(args)
    if args.action in ("list", "export"):
        lex = _replay(cfg.storage_path).lexicon(kind)
        text = format_lexicon_text(lex)
        if args.action == "export" and args.arg not in (None, "-"):
            Path(args.arg).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK

    if args.arg is None:
        raise _fail(f"lexicon {args.action} needs an argument")
    if args.action == "import":
        try:
            terms = parse_lexicon_text(Path(args.arg).read_text(encoding="utf-8"))
        except OSError as exc:
            raise _fail(f"cannot read {args.arg}: {exc.strerror or exc}") from None
        except LexiconFileError as exc:
            raise _fail(f"{args.arg}: {exc}") from None
        action = "replace"
    else:
        terms, action = [args.arg], args.action

    store = _open_store(cfg.storage_path)
    try:
        lex = store.change_lexicon(kind, action, terms, utcnow())
    except MultiTokenTerm as exc:
        raise _fail(str(exc)) from None
    except StorageFailure as exc:
        raise _fail(str(exc), EXIT_STORAGE) from None
    finally:
        store.close()
    sys.stdout.write(format_lexicon_text(lex))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesgate", description="Bayesian comment-spam filter")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--store", help="event log path (overrides storage_path from the config)")
    parser.add_argument("--config", help="JSON config file (default: $BAYESGATE_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP moderation API")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("score", help="score a comment without storing it")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text")
    src.add_argument("--file", help="read the comment from a file ('-' for stdin)")
    p.add_argument("--stats", help="corpus stats as inline JSON or a JSON file path")
    p.add_argument("--threshold", type=str)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="threshold sweep over a labeled JSON-lines corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--stats", help="corpus stats as inline JSON or a JSON file path")
    p.add_argument("--thresholds", help="comma separated, strictly increasing (default 0.1..0.9)")
    p.add_argument("--csv", help="also write CSV to this path ('-' for stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-example", help="check the worked restaurant example")
    p.set_defaults(func=cmd_verify_example)

    p = sub.add_parser("lexicon", help="list or edit the stopword / spam word lists")
    p.add_argument("kind", choices=[k.value for k in LexiconKind])
    p.add_argument("action", choices=["list", "add", "remove", "import", "export"])
    p.add_argument("arg", nargs="?", help="term for add/remove, file for import/export")
    p.set_defaults(func=cmd_lexicon)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"bayesgate: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
