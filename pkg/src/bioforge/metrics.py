"""Precision/recall/F1 scoring and Cohen's kappa for annotation agreement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .matcher import LABEL_ORDER


@dataclass(frozen=True)
class LabelScores:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    per_label: dict[str, LabelScores]
    macro: LabelScores
    support: dict[str, int]


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    observed_agreement: float
    expected_agreement: float
    n: int


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def compute_metrics(pred: Sequence, gold: Sequence) -> EvalReport:
    """One-vs-rest multiclass P/R/F1 with an unweighted macro average.

    Labels absent from both vectors are excluded from the report and the
    macro; 0/0 ratios resolve to zero.
    """
    if len(pred) != len(gold):
        raise ValueError(f"pred has {len(pred)} labels, gold has {len(gold)}")
    if not gold:
        raise ValueError("cannot score empty label vectors")
    pred = [str(p) for p in pred]
    gold = [str(g) for g in gold]

    present = set(pred) | set(gold)
    known_order = [l.value for l in LABEL_ORDER]
    labels = [l for l in known_order if l in present]
    labels += sorted(present - set(known_order))

    per_label: dict[str, LabelScores] = {}
    support: dict[str, int] = {}
    for label in labels:
        tp = sum(1 for p, g in zip(pred, gold) if p == label and g == label)
        fp = sum(1 for p, g in zip(pred, gold) if p == label and g != label)
        fn = sum(1 for p, g in zip(pred, gold) if p != label and g == label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_label[label] = LabelScores(precision, recall, _f1(precision, recall))
        support[label] = tp + fn

    macro = LabelScores(
        precision=sum(s.precision for s in per_label.values()) / len(labels),
        recall=sum(s.recall for s in per_label.values()) / len(labels),
        f1=sum(s.f1 for s in per_label.values()) / len(labels),
    )
    return EvalReport(per_label=per_label, macro=macro, support=support)


def cohen_kappa(a: Sequence, b: Sequence) -> AgreementReport:
    """Chance-corrected agreement between two annotators.

    po is the fraction of identical decisions; pe sums, per label, the product
    of both annotators' marginal probabilities.  Identical vectors score 1.0
    even when pe degenerates to 1.
    """
    if len(a) != len(b):
        raise ValueError(f"annotator vectors differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("cannot compute agreement on empty vectors")
    a = [str(x) for x in a]
    b = [str(x) for x in b]
    n = len(a)
    po = sum(1 for x, y in zip(a, b) if x == y) / n
    labels = set(a) | set(b)
    pe = sum((a.count(l) / n) * (b.count(l) / n) for l in labels)
    if pe >= 1.0:
        kappa = 1.0 if po == 1.0 else 0.0
    else:
        kappa = (po - pe) / (1 - pe)
    return AgreementReport(kappa=kappa, observed_agreement=po, expected_agreement=pe, n=n)


def render_report(report: EvalReport, style: str = "fixed") -> str:
    """Render per-label rows plus the macro average, 2 decimals.

    ``fixed`` mirrors the usual per-relation evaluation table layout;
    ``tsv`` is the same content tab-separated.
    """
    rows = [("", "P", "R", "F1")]
    for label, scores in report.per_label.items():
        rows.append((label, f"{scores.precision:.2f}", f"{scores.recall:.2f}", f"{scores.f1:.2f}"))
    rows.append(("macro avg.", f"{report.macro.precision:.2f}",
                 f"{report.macro.recall:.2f}", f"{report.macro.f1:.2f}"))
    if style == "tsv":
        return "\n".join("\t".join(row) for row in rows) + "\n"
    if style != "fixed":
        raise ValueError(f"unknown render style {style!r}")
    name_width = max(len(r[0]) for r in rows) + 2
    lines = [
        r[0].ljust(name_width) + "  ".join(c.rjust(5) for c in r[1:])
        for r in rows
    ]
    return "\n".join(lines) + "\n"


def labels_from_lines(text: str) -> list[str]:
    """Parse a one-label-per-line file, ignoring blanks."""
    return [line.strip() for line in text.splitlines() if line.strip()]
