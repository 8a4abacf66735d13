"""Command-line entry point: mine, synth, train, eval, predict, gradcheck.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on any
runtime failure (including a failed gradient check).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ConfigError, TrainConfig, load_config
from .jparse import JParseError
from .labels import DefectLabel
from .metrics import (
    BleuConfig,
    SingleClass,
    auc_binary,
    auc_multiclass,
    bleu,
    confusion_counts,
    corpus_bleu,
    exact_match_accuracy,
    macro_prf,
    mean_sentence_bleu,
    per_class_prf,
    precision_recall_f1,
)
from .model import CompDefectModel, function_tokens
from .triples import FunctionTriple, read_jsonl, write_jsonl

log = logging.getLogger("compdefect")

TASKS = ("identify", "classify", "repair")
COLUMNS = {
    "identify": ("Precision", "Recall", "F1-score", "AUC"),
    "classify": ("Precision", "Recall", "F1-score", "AUC_OVO", "AUC_OVR"),
    "repair": ("BLEU", "Accuracy"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2; usage errors are 1 here
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# evaluation tables


@dataclass
class ItemPrediction:
    id: str
    label: int
    probabilities: list[float] | None = None
    patch: str | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "label": DefectLabel(self.label).name}
        if self.probabilities is not None:
            d["probabilities"] = [round(float(p), 12) for p in self.probabilities]
        if self.patch is not None:
            d["patch"] = self.patch
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ItemPrediction":
        probs = d.get("probabilities")
        if "label" in d:
            label = int(DefectLabel.parse(d["label"]))
        elif probs is not None:
            label = int(np.argmax(probs))
        else:
            raise ValueError(f"prediction {d.get('id')!r} has neither label nor probabilities")
        return cls(str(d["id"]), label, probs, d.get("patch"))


@dataclass
class TaskReport:
    task: str
    header: tuple[str, ...]
    row: list
    per_class: list[tuple] = field(default_factory=list)
    confusion: np.ndarray | None = None
    confusion_names: list[str] = field(default_factory=list)
    sentence_bleu: list[float] = field(default_factory=list)


def _safe_auc(fn, *args) -> float | str:
    try:
        return fn(*args)
    except SingleClass as exc:
        log.warning("AUC undefined: %s", exc)
        return "n/a"


def _need_probs(preds: Sequence[ItemPrediction], task: str) -> np.ndarray:
    if any(p.probabilities is None for p in preds):
        raise ValueError(f"--task {task} needs class probabilities for every prediction")
    return np.asarray([p.probabilities for p in preds], dtype=np.float64)


def identify_report(gold: Sequence[FunctionTriple], preds: Sequence[ItemPrediction]) -> TaskReport:
    """Binary view: a function is defective iff its label is not Clean."""
    y = [t.label is not DefectLabel.CLEAN for t in gold]
    yhat = [p.label != DefectLabel.CLEAN for p in preds]
    c = confusion_counts(yhat, y, True)
    p, r, f = precision_recall_f1(c)
    P = _need_probs(preds, "identify")
    auc = _safe_auc(auc_binary, 1.0 - P[:, int(DefectLabel.CLEAN)], y)
    conf = np.array([[c.tn, c.fp], [c.fn, c.tp]])
    return TaskReport("identify", COLUMNS["identify"], [p, r, f, auc], confusion=conf, confusion_names=["clean", "defective"])


def classify_report(gold: Sequence[FunctionTriple], preds: Sequence[ItemPrediction]) -> TaskReport:
    y = [int(t.label) for t in gold]
    yhat = [p.label for p in preds]
    p, r, f = macro_prf(yhat, y)
    P = _need_probs(preds, "classify")
    ovo = _safe_auc(auc_multiclass, P, y, "ovo")
    ovr = _safe_auc(auc_multiclass, P, y, "ovr")
    per = [(DefectLabel(k).name, *v) for k, v in sorted(per_class_prf(yhat, y).items())]
    n = len(DefectLabel)
    conf = np.zeros((n, n), dtype=np.int64)
    for a, b in zip(y, yhat):
        conf[a, b] += 1
    return TaskReport(
        "classify", COLUMNS["classify"], [p, r, f, ovo, ovr], per_class=per, confusion=conf, confusion_names=[lbl.name for lbl in DefectLabel]
    )


def _code_tokens(src: str) -> list[str]:
    try:
        return function_tokens(src)
    except JParseError:
        return src.split()


def repair_report(gold: Sequence[FunctionTriple], preds: Sequence[ItemPrediction], bleu_mode: str = "sentence") -> TaskReport:
    """BLEU and exact-match accuracy on the defective items only."""
    pairs = [(t, p) for t, p in zip(gold, preds) if t.label is not DefectLabel.CLEAN]
    if not pairs:
        raise ValueError("repair evaluation needs at least one defective item")
    cands = [_code_tokens(p.patch or "") for _, p in pairs]
    refs = [_code_tokens(t.fixed_src) for t, _ in pairs]
    cfg = BleuConfig()
    score = mean_sentence_bleu(cands, refs, cfg) if bleu_mode == "sentence" else corpus_bleu(cands, refs, cfg)
    acc = exact_match_accuracy([" ".join(c) for c in cands], [" ".join(r) for r in refs])
    per = [bleu(c, r, cfg) if c else 0.0 for c, r in zip(cands, refs)]
    return TaskReport("repair", COLUMNS["repair"], [score, acc], sentence_bleu=per)


def task_report(task: str, gold: Sequence[FunctionTriple], preds: Sequence[ItemPrediction], bleu_mode: str = "sentence") -> TaskReport:
    if task == "identify":
        return identify_report(gold, preds)
    if task == "classify":
        return classify_report(gold, preds)
    return repair_report(gold, preds, bleu_mode)


def predict_items(model: CompDefectModel, triples: Sequence[FunctionTriple], task: str, beam_width: int) -> list[ItemPrediction]:
    out = []
    for t in triples:
        if task == "repair":
            pr = model.predict(t.clean_src, t.buggy_src, beam_width, always_generate=True)
            out.append(ItemPrediction(t.id, int(pr.label), [float(x) for x in pr.probabilities], pr.patch))
        else:
            cls_out, _ = model.classify(t.clean_src, t.buggy_src)
            probs = [float(x) for x in cls_out.probabilities]
            out.append(ItemPrediction(t.id, int(np.argmax(probs)), probs))
    return out


# ---------------------------------------------------------------------------
# commands


def _config(args) -> TrainConfig:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "beam_width", None) is not None:
        overrides.append(f"beam_width={args.beam_width}")
    return load_config(args.config, overrides)


def _out_dir(args) -> Path:
    if not args.out:
        raise UsageError(f"{args.command} needs --out")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_mine(args) -> int:
    from .mining import mine_repository

    if not args.repo:
        raise UsageError("mine needs --repo")
    if not args.out:
        raise UsageError("mine needs --out")
    report = mine_repository(args.repo)
    write_jsonl(report.triples, args.out)
    summary = report.summary()
    from .report import pretty_table

    rows = [["triples", summary["triples"]]] + [[k, v] for k, v in summary["rejected"].items()]
    sys.stderr.write(pretty_table(["outcome", "count"], rows))
    return 0


def cmd_synth(args) -> int:
    from .patterns import SynthSpec, generate_corpus

    cfg = _config(args)
    if not args.out:
        raise UsageError("synth needs --out")
    triples = generate_corpus(SynthSpec(seed=cfg.seed, count_per_label=cfg.count_per_label, clean_fraction=cfg.clean_fraction))
    write_jsonl(triples, args.out)
    log.info("wrote %d triples to %s", len(triples), args.out)
    return 0


def cmd_train(args) -> int:
    from .report import plot_loss_curve
    from .train import DatasetSplit, stratified_split, train_model

    cfg = _config(args)
    if not args.data:
        raise UsageError("train needs --data")
    out = _out_dir(args)
    data = read_jsonl(args.data)
    if args.overfit:
        split = DatasetSplit(list(data), list(data), [])
    else:
        split = stratified_split(data, cfg.split_ratios, cfg.seed)
        write_jsonl(split.test, out / "test.jsonl", validate=False)
    res = train_model(cfg, split, out / "train_log.jsonl", on_epoch=lambda r: log.info("%s", r))
    (out / "model.ckpt").write_bytes(res.checkpoint)
    if res.history:
        plot_loss_curve(res.history, out / "loss_curve.png")
    sys.stderr.write(f"best epoch {res.best_epoch}, validation score {res.best_score:.4f}\n")
    return 0


def cmd_eval(args) -> int:
    from .report import format_table, plot_bleu_histogram, plot_confusion, plot_per_class, pretty_table

    cfg = _config(args)
    if not args.data:
        raise UsageError("eval needs --data")
    if bool(args.ckpt) == bool(args.predictions):
        raise UsageError("eval needs exactly one of --ckpt or --predictions")
    gold = read_jsonl(args.data)
    if args.predictions:
        by_id = {}
        with open(args.predictions, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    p = ItemPrediction.from_dict(json.loads(line))
                    by_id[p.id] = p
        missing = [t.id for t in gold if t.id not in by_id]
        if missing:
            raise ValueError(f"{len(missing)} items have no prediction, first {missing[0]!r}")
        preds = [by_id[t.id] for t in gold]
    else:
        model, _ = CompDefectModel.load(args.ckpt)
        preds = predict_items(model, gold, args.task, cfg.beam_width)
    rep = task_report(args.task, gold, preds, cfg.bleu_mode)
    table = format_table(rep.header, [rep.row])
    sys.stdout.write(table)
    sys.stderr.write(pretty_table(rep.header, [rep.row]))
    meta = {"task": rep.task, "items": len(gold)}
    if rep.task == "repair":
        meta["bleu_mode"] = cfg.bleu_mode
        sys.stderr.write(f"BLEU mode: {cfg.bleu_mode}\n")
    if args.out:
        out = _out_dir(args)
        (out / f"eval_{rep.task}.tsv").write_text(table, encoding="utf-8")
        (out / f"eval_{rep.task}_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if not args.predictions:
            with open(out / f"predictions_{rep.task}.jsonl", "w", encoding="utf-8") as fh:
                for p in preds:
                    fh.write(json.dumps(p.to_dict(), sort_keys=True) + "\n")
        if rep.per_class:
            (out / "eval_classify_per_class.tsv").write_text(format_table(("Label", "Precision", "Recall", "F1-score"), rep.per_class), encoding="utf-8")
            plot_per_class([r[0] for r in rep.per_class], [r[3] for r in rep.per_class], out / "per_class_f1.png")
        if rep.confusion is not None:
            plot_confusion(rep.confusion, rep.confusion_names, out / f"confusion_{rep.task}.png")
        if rep.sentence_bleu:
            plot_bleu_histogram(rep.sentence_bleu, out / "bleu_histogram.png")
    return 0


def cmd_predict(args) -> int:
    from .mining import apply_to_commit
    from .report import pretty_table

    cfg = _config(args)
    if not (args.repo and args.commit and args.ckpt):
        raise UsageError("predict needs --repo, --commit and --ckpt")
    model, _ = CompDefectModel.load(args.ckpt)
    result = apply_to_commit(args.repo, args.commit, model, cfg.beam_width)
    sys.stdout.write(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    rows = [[f.file, f.name, f.label.name, f.top(1)[0][1]] for f in result.functions]
    sys.stderr.write(f"verdict: {result.verdict}\n")
    if rows:
        sys.stderr.write(pretty_table(["file", "function", "label", "p"], rows))
    return 0


def cmd_gradcheck(args) -> int:
    from .model import build_vocabulary
    from .patterns import SynthSpec, generate_corpus
    from .train import joint_grad_check

    cfg = _config(args)
    data = read_jsonl(args.data) if args.data else generate_corpus(SynthSpec(seed=cfg.seed, count_per_label=1))
    batch = data[: max(1, args.batch)]
    vocab = build_vocabulary(batch, 1)
    mcfg = cfg.model_config(len(vocab))
    # finite differences need 64-bit floats and a deterministic forward pass
    from dataclasses import replace

    mcfg = replace(mcfg, dropout=0.0, dtype="float64")
    model = CompDefectModel.initialize(mcfg, vocab, cfg.seed)
    rep = joint_grad_check(model, batch, cfg.loss_weights, args.tolerance, args.max_coords, cfg.seed)
    status = "PASS" if rep.passed else "FAIL"
    sys.stdout.write(
        f"{status}\tmax_rel_error={rep.max_rel_error:.3e}\tworst={rep.worst_parameter}{list(rep.worst_index)}\tcoordinates={rep.coordinates_checked}\n"
    )
    return 0 if rep.passed else 2


COMMANDS = {
    "mine": cmd_mine,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one configuration key (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--data", help="triples in JSONL")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--ckpt", help="model checkpoint")
    common.add_argument("--repo", help="git repository path")
    common.add_argument("--commit", help="commit hash or ref")
    common.add_argument("--task", choices=TASKS, default="classify")
    common.add_argument("--beam-width", type=int, default=None, help="beam width for repair generation (default 10)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="compdefect", description="Commit-level defect identification, classification and repair for Java functions.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    sub.add_parser("mine", parents=[common], help="mine function triples from a git repository")
    sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p = sub.add_parser("train", parents=[common], help="train a model")
    p.add_argument("--overfit", action="store_true", help="train and select on the whole dataset")
    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint or a predictions file")
    p.add_argument("--predictions", help="JSONL predictions instead of a checkpoint")
    sub.add_parser("predict", parents=[common], help="classify and repair the functions changed by one commit")
    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of the joint loss")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--max-coords", type=int, default=3)
    p.add_argument("--batch", type=int, default=2)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        msg = str(exc)
        sys.stderr.write(msg if "usage:" in msg else f"{parser.format_usage()}compdefect: error: {msg}")
        sys.stderr.write("\n")
        return 1
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 1
    except Exception as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        log.debug("traceback", exc_info=True)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
