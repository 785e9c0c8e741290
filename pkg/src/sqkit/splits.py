"""Compositional train/test splits over sequence manifests.

A manifest is a JSON-lines file of sequence records (id, subject, verb,
noun, path).  Splits hold out object categories so that verb-noun
combinations seen at test time never appear in train: S1 leaves out one
noun per fold, S2 a pair of nouns per fold, S0 is a plain pass-through
of externally given train/test lists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import ContractError, InputError


@dataclass(frozen=True)
class SequenceRecord:
    id: str
    subject: str
    verb: str
    noun: str
    path: str
    frame_count: int | None = None

    def __post_init__(self):
        for name in ("id", "subject", "verb", "noun", "path"):
            v = getattr(self, name)
            if not isinstance(v, str) or not v:
                raise ValueError(f"record field {name!r} must be a nonempty string, got {v!r}")
        if self.frame_count is not None and self.frame_count < 0:
            raise ValueError(f"frame_count must be nonnegative, got {self.frame_count}")

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "subject": self.subject,
            "verb": self.verb,
            "noun": self.noun,
            "path": self.path,
        }
        if self.frame_count is not None:
            d["frame_count"] = int(self.frame_count)
        return d


@dataclass(frozen=True)
class Fold:
    name: str
    held_out: tuple[str, ...]
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"fold {self.name!r}: train/test overlap on {sorted(overlap)[:5]}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "held_out": list(self.held_out),
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }


@dataclass(frozen=True)
class ScoreSummary:
    per_fold: dict  # fold name -> accuracy
    mean: float
    std: float

    def to_dict(self) -> dict:
        return {
            "per_fold": {k: float(v) for k, v in self.per_fold.items()},
            "mean": float(self.mean),
            "std": float(self.std),
        }


# ----------------------------------------------------------------- file IO


def read_manifest(path) -> list[SequenceRecord]:
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise InputError(f"{path}:{lineno}: expected an object per line")
            try:
                rec = SequenceRecord(
                    id=data["id"],
                    subject=data["subject"],
                    verb=data["verb"],
                    noun=data["noun"],
                    path=data["path"],
                    frame_count=data.get("frame_count"),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: bad record: {exc}") from exc
            if rec.id in seen:
                raise InputError(f"{path}:{lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    if not records:
        raise InputError(f"{path}: empty manifest")
    return records


def write_manifest(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def write_folds(path, folds) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"folds": [f.to_dict() for f in folds]}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_folds(path) -> list[Fold]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    try:
        return [
            Fold(
                name=f["name"],
                held_out=tuple(f["held_out"]),
                train_ids=tuple(f["train_ids"]),
                test_ids=tuple(f["test_ids"]),
            )
            for f in data["folds"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad folds file: {exc}") from exc


def read_predictions(path) -> dict:
    """JSON-lines of {fold, id, label} -> {fold: {id: label}}."""
    out: dict[str, dict[str, str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                fold, sid, label = data["fold"], data["id"], data["label"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: bad prediction line: {exc}") from exc
            bucket = out.setdefault(fold, {})
            if sid in bucket:
                raise InputError(f"{path}:{lineno}: duplicate prediction for {fold!r}/{sid!r}")
            bucket[sid] = label
    return out


def read_labels(path) -> dict:
    """JSON-lines of {id, label} -> {id: label}."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                sid, label = data["id"], data["label"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: bad label line: {exc}") from exc
            if sid in out:
                raise InputError(f"{path}:{lineno}: duplicate label for {sid!r}")
            out[sid] = label
    return out


# ----------------------------------------------------------------- builders


def _noun_index(records) -> dict:
    by_noun: dict[str, list[str]] = {}
    for rec in records:
        by_noun.setdefault(rec.noun, []).append(rec.id)
    return by_noun


def make_s0(train_records, test_records) -> Fold:
    """Pass-through split from externally given train/test manifests."""
    train_ids = tuple(r.id for r in train_records)
    test_ids = tuple(r.id for r in test_records)
    try:
        return Fold(name="s0", held_out=(), train_ids=train_ids, test_ids=test_ids)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def make_s1(records, nouns=None) -> list[Fold]:
    """Leave-one-noun-out folds, one per noun, lexicographic order."""
    by_noun = _noun_index(records)
    all_nouns = sorted(by_noun)
    if len(all_nouns) < 2:
        raise InputError(
            f"cannot compose split: need at least 2 distinct nouns, found {len(all_nouns)}"
        )
    targets = all_nouns
    if nouns is not None:
        targets = list(nouns)
        unknown = sorted(set(targets) - set(all_nouns))
        if unknown:
            raise InputError(f"unknown nouns {unknown}; manifest has {all_nouns}")
        if len(targets) != len(set(targets)):
            raise InputError("duplicate nouns in the requested fold list")
        targets = sorted(targets)
    folds = []
    for noun in targets:
        test = tuple(r.id for r in records if r.noun == noun)
        train = tuple(r.id for r in records if r.noun != noun)
        folds.append(Fold(name=noun, held_out=(noun,), train_ids=train, test_ids=test))
    return folds


def make_s2(records, pairs=None, seed: int = 0, n_pairs: int = 8) -> list[Fold]:
    """Leave-two-nouns-out folds.

    With explicit pairs the given order is kept; otherwise n_pairs are
    drawn without replacement from all unordered noun pairs using seed.
    """
    by_noun = _noun_index(records)
    all_nouns = sorted(by_noun)
    if len(all_nouns) < 3:
        raise InputError(
            f"cannot compose split: need at least 3 distinct nouns, found {len(all_nouns)}"
        )
    if pairs is None:
        universe = [
            (all_nouns[i], all_nouns[j])
            for i in range(len(all_nouns))
            for j in range(i + 1, len(all_nouns))
        ]
        rng = np.random.default_rng(seed)
        take = min(n_pairs, len(universe))
        idx = rng.choice(len(universe), size=take, replace=False)
        chosen = [universe[int(i)] for i in idx]
    else:
        chosen = []
        for pair in pairs:
            a, b = pair
            unknown = sorted({a, b} - set(all_nouns))
            if unknown:
                raise InputError(f"unknown nouns {unknown}; manifest has {all_nouns}")
            if a == b:
                raise InputError(f"cannot compose split: pair ({a!r}, {b!r}) repeats a noun")
            chosen.append((a, b))
    folds = []
    for a, b in chosen:
        held = (a, b)
        test = tuple(r.id for r in records if r.noun in held)
        train = tuple(r.id for r in records if r.noun not in held)
        folds.append(Fold(name=f"{a}+{b}", held_out=held, train_ids=train, test_ids=test))
    return folds


# ----------------------------------------------------------------- scoring


def score_folds(folds, predictions, labels) -> ScoreSummary:
    """Top-1 accuracy per fold and exact mean / population std.

    predictions: {fold name: {id: label}}; labels: {id: label}.  Every
    test id must be predicted exactly once, with no extras.
    """
    if not folds:
        raise InputError("no folds to score")
    accs: dict[str, Fraction] = {}
    for fold in folds:
        pred = predictions.get(fold.name)
        if pred is None:
            raise ContractError(f"fold {fold.name!r}: no predictions")
        test = set(fold.test_ids)
        missing = sorted(test - set(pred))
        extra = sorted(set(pred) - test)
        if missing or extra:
            raise ContractError(
                f"fold {fold.name!r}: predictions do not cover the test set"
                f" (missing {missing[:5]}{'...' if len(missing) > 5 else ''},"
                f" extra {extra[:5]}{'...' if len(extra) > 5 else ''})"
            )
        unlabeled = sorted(test - set(labels))
        if unlabeled:
            raise InputError(f"fold {fold.name!r}: ids without ground-truth labels {unlabeled[:5]}")
        if not fold.test_ids:
            raise InputError(f"fold {fold.name!r}: empty test set")
        correct = sum(1 for sid in fold.test_ids if pred[sid] == labels[sid])
        accs[fold.name] = Fraction(correct, len(fold.test_ids))
    n = len(accs)
    mean = sum(accs.values(), Fraction(0)) / n
    var = sum((a - mean) ** 2 for a in accs.values()) / n
    # population std; rational variances with exact square roots (1/100
    # -> 1/10) stay exact instead of round-tripping through float
    sn, sd = math.isqrt(var.numerator), math.isqrt(var.denominator)
    if sn * sn == var.numerator and sd * sd == var.denominator:
        std = float(Fraction(sn, sd))
    else:
        std = math.sqrt(float(var))
    return ScoreSummary(
        per_fold={k: float(v) for k, v in accs.items()},
        mean=float(mean),
        std=std,
    )
