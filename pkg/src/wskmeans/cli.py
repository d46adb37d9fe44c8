"""Command-line interface.

Exit status: 0 on success, 2 for invalid arguments, the ``code`` of a
``FormatError`` subclass for malformed files (11-16), 3 for an infeasible
ratio budget or insufficient support, 4 for numerical failures, 1 otherwise.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io as wio
from .core import OUTSIDE
from .estep import InfeasibleBudgetError
from .initialization import InsufficientSupportError
from .pipeline import FitConfig, as_sequences, fit, mention_f1, predict
from .synth import SynthConfig, gen_synth

log = logging.getLogger("wskmeans")

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"ratio must lie in [0, 1], got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def cmd_fit(args) -> int:
    X = wio.read_dmat(args.x)
    phi = wio.read_tag_list(args.tags, args.o_protos)
    labels = wio.read_labels(args.labels, phi)
    if len(labels) != X.shape[0]:
        raise UsageError(f"{len(labels)} labels for {X.shape[0]} rows")
    cfg = FitConfig(
        variant=args.variant,
        ratio=args.ratio,
        o_prototypes=args.o_protos,
        acs_iters=args.iters,
        use_subspace=not args.no_subspace,
        bregman_iters=args.bregman_iters,
        bregman_tol=args.bregman_tol,
        strict_init=not args.allow_short_support,
    )
    model = fit(X, labels, phi, cfg)
    wio.save_model(args.out, model)
    if args.trace_csv:
        with open(args.trace_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(wio.TRACE_HEADER + "\n")
            fh.writelines(wio.trace_line(r) + "\n" for r in model.trace)
    return 0


def cmd_predict(args) -> int:
    model = wio.load_model_file(args.model)
    X = wio.read_dmat(args.x)
    tags = predict(X, model).tolist()
    lengths = [len(tags)]
    if args.segments:
        lengths = [len(s) for s in wio.read_label_names(args.segments)]
        if sum(lengths) != len(tags):
            raise UsageError(f"segment file covers {sum(lengths)} rows, X has {len(tags)}")
    seqs, pos = [], 0
    for n in lengths:
        seqs.append(tags[pos:pos + n])
        pos += n
    wio.write_labels(args.out, seqs, model.tag_map)
    return 0


def _indexed(names: list[list[str]], index: dict[str, int]) -> list[list[int]]:
    out = []
    for seq in names:
        row = []
        for name in seq:
            if name == "-":
                raise UsageError("evaluation files cannot contain unlabeled rows ('-')")
            row.append(index.setdefault(name, len(index)))
        out.append(row)
    return out


def cmd_eval(args) -> int:
    gold_names = wio.read_label_names(args.gold)
    pred_names = wio.read_label_names(args.pred)
    index = {OUTSIDE: 0}
    gold = _indexed(gold_names, index)
    pred = _indexed(pred_names, index)
    if [len(s) for s in gold] != [len(s) for s in pred]:
        raise UsageError("gold and predicted files differ in sequence layout")
    g = [s for seq in gold for s in as_sequences(seq, [len(seq)])]
    p = [s for seq in pred for s in as_sequences(seq, [len(seq)])]
    precision, recall, f1 = mention_f1(g, p)
    print(f"{precision!r} {recall!r} {f1!r}")
    return 0


def cmd_synth(args) -> int:
    cfg = SynthConfig.from_json(args.config)
    data = gen_synth(cfg)
    phi = data.tag_map(1)
    prefix = args.out_prefix
    wio.write_dmat(f"{prefix}.dmat", data.X)
    bounds = np.cumsum([0] + data.lengths)

    def split(v):
        return [v[a:b].tolist() for a, b in zip(bounds[:-1], bounds[1:])]

    wio.write_labels(f"{prefix}.labels", split(data.labels), phi)
    wio.write_labels(f"{prefix}.gold", split(data.gold), phi)
    with open(f"{prefix}.tags", "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(t + "\n" for t in data.tags)
    return 0


def cmd_export_linear(args) -> int:
    model = wio.load_model_file(args.model)
    W, bias = model.linear_model()
    with open(args.out, "wb") as fh:
        wio.dump_dmat(fh, W)
        wio.dump_dmat(fh, bias.reshape(1, -1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wskmeans", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit prototypes on a feature matrix with partial labels")
    p.add_argument("--x", required=True, help="DMAT feature matrix")
    p.add_argument("--labels", required=True, help="label file ('-' = unlabeled)")
    p.add_argument("--tags", required=True, help="tag list, O first")
    p.add_argument("--variant", choices=("hard", "soft"), default="hard")
    p.add_argument("--ratio", type=_ratio, default=None, help="expected O ratio in [0, 1]")
    p.add_argument("--o-protos", type=_positive, default=10)
    p.add_argument("--iters", type=int, default=10, help="alternate convex search rounds")
    p.add_argument("--no-subspace", action="store_true")
    p.add_argument("--bregman-iters", type=_positive, default=100)
    p.add_argument("--bregman-tol", type=float, default=1e-9)
    p.add_argument(
        "--allow-short-support", action="store_true",
        help="let a tag with fewer labeled rows than prototypes reuse its centroids",
    )
    p.add_argument("--trace-csv", help="write per-round objective and residuals")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="tag rows with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--segments", help="label file whose blank lines give the sequence layout")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="mention-level precision, recall and F1")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--config", required=True, help="JSON SynthConfig")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export-linear", help="write the equivalent linear model (weights, bias)")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_linear)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except wio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleBudgetError, InsufficientSupportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
