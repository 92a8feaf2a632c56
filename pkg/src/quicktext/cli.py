"""Command-line front end: ``quicktext train|test|predict|predict-prob``."""

from __future__ import annotations

import argparse
import math
import sys
import time

from quicktext import persistence
from quicktext.config import LOSS_KINDS, TrainConfig
from quicktext.dictionary import LABEL_PREFIX, tokenize
from quicktext.errors import QuicktextError
from quicktext.metrics import evaluate
from quicktext.predictor import predict
from quicktext.trainer import train


class _Parser(argparse.ArgumentParser):
    def _get_option_tuples(self, option_string):
        # before Python 3.12 single-dash flags were prefix-matched even with
        # allow_abbrev=False, so "-inp" would silently mean "-input"
        return []

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quicktext", allow_abbrev=False,
                     description="Fast linear text classification.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = TrainConfig()
    tr = sub.add_parser("train", allow_abbrev=False, help="train a supervised model")
    tr.add_argument("-input", required=True, help="training file, one __label__ line per example")
    tr.add_argument("-output", required=True, help="model path; .bin is appended")
    tr.add_argument("-lr", type=float, default=d.lr, help="base learning rate [%(default)s]")
    tr.add_argument("-dim", type=int, default=d.dim, help="hidden dimension [%(default)s]")
    tr.add_argument("-epoch", type=int, default=d.epochs, help="number of epochs [%(default)s]")
    tr.add_argument("-wordNgrams", type=int, default=d.ngram_order,
                    help="max word n-gram length [%(default)s]")
    tr.add_argument("-bucket", type=int, default=None,
                    help="hash bins for n-grams [10M for bigrams, 100M above]")
    tr.add_argument("-minCount", type=int, default=d.min_count,
                    help="minimal word count [%(default)s]")
    tr.add_argument("-minCountLabel", type=int, default=d.label_min_count,
                    help="minimal label count [%(default)s]")
    tr.add_argument("-thread", type=int, default=d.threads, help="worker threads [%(default)s]")
    tr.add_argument("-loss", choices=LOSS_KINDS, default=d.loss,
                    help="softmax, hs, or auto (hs above 64 labels) [%(default)s]")
    tr.add_argument("-seed", type=int, default=d.seed, help="random seed [%(default)s]")
    tr.add_argument("-verbose", type=int, default=1, help="0 silences progress [%(default)s]")

    te = sub.add_parser("test", allow_abbrev=False, help="evaluate P@k and R@k")
    te.add_argument("model")
    te.add_argument("test_data")
    te.add_argument("k", nargs="?", type=int, default=1)

    for name, helptext in (("predict", "print the top-k labels per line"),
                           ("predict-prob", "print the top-k labels with probabilities")):
        p = sub.add_parser(name, allow_abbrev=False, help=helptext)
        p.add_argument("model")
        p.add_argument("input", help="file to classify, or - for standard input")
        p.add_argument("k", nargs="?", type=int, default=1)
        p.add_argument("-placeholder", default="",
                       help="output for lines without known words [empty line]")
    return parser


def cmd_train(args) -> int:
    config = TrainConfig(
        dim=args.dim, epochs=args.epoch, lr=args.lr, ngram_order=args.wordNgrams,
        bucket=args.bucket, min_count=args.minCount, label_min_count=args.minCountLabel,
        loss=args.loss, threads=args.thread, seed=args.seed, verbose=args.verbose,
    )
    start = time.perf_counter()
    result = train(args.input, config, stream=sys.stderr if args.verbose else None)
    out = args.output + ".bin"
    persistence.save(result.model, result.dictionary, out)
    elapsed = time.perf_counter() - start
    stats = result.stats
    print(f"Read {stats.tokens_total // config.epochs} words, "
          f"{result.dictionary.nwords} in vocabulary, {result.dictionary.nlabels} labels")
    print(f"Trained {result.model.loss_kind} model in {elapsed:.3f}s "
          f"({stats.elapsed:.3f}s SGD, {stats.tokens_per_second:.0f} tokens/sec, "
          f"{stats.threads} threads, {stats.backend} kernels)")
    return 0


def cmd_test(args) -> int:
    model, dictionary = persistence.load(args.model)
    report = evaluate(model, dictionary, args.test_data, args.k)
    print(report)
    return 0


def _format(dictionary, prediction, with_probabilities: bool) -> str:
    parts = []
    for label, lp in prediction.entries:
        parts.append(LABEL_PREFIX + dictionary.labels[label][0])
        if with_probabilities:
            parts.append(f"{math.exp(lp):.6g}")
    return " ".join(parts)


def cmd_predict(args, with_probabilities: bool) -> int:
    if args.k < 1:
        raise QuicktextError("k must be >= 1")
    model, dictionary = persistence.load(args.model)
    source = sys.stdin if args.input == "-" else open(args.input, "r", encoding="utf-8")
    out = sys.stdout
    try:
        for line in source:
            _, words = tokenize(line)
            features = dictionary.featurize(words)
            if len(features) == 0:
                out.write(args.placeholder + "\n")
                continue
            out.write(_format(dictionary, predict(model, features, args.k),
                              with_probabilities) + "\n")
    finally:
        if source is not sys.stdin:
            source.close()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "test":
            return cmd_test(args)
        return cmd_predict(args, args.command == "predict-prob")
    except (QuicktextError, OSError, ValueError) as exc:
        print(f"quicktext {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
