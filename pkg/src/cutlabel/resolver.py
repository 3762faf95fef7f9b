"""Reconciling confusable class pairs with co-occurrence statistics.

Some taxonomies contain near-duplicate classes (synonyms, part-whole pairs,
singular/plural twins). A single-label-per-region pipeline systematically
under-labels those, so this module derives pairwise statistics from a
calibration set and offers two corrections: propagating confidence through
a co-occurrence prior matrix, and adding the partner class outright when a
pair-specific threshold is exceeded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from cutlabel.errors import DataError

NEVER_FIRES = math.nextafter(1.0, 2.0)
"""Threshold sentinel strictly above every probability, so the rule is inert."""


@dataclass(frozen=True)
class PairStat:
    """Occurrence counts and conditional confidences for one class pair."""

    class_a: int
    class_b: int
    n_a: int
    n_b: int
    n_ab: int
    conf_a_given_b: float
    conf_b_given_a: float

    def __post_init__(self) -> None:
        if self.class_a == self.class_b:
            raise ValueError("a pair needs two distinct classes")
        if min(self.n_a, self.n_b, self.n_ab) < 0:
            raise ValueError("negative counts")
        if self.n_ab > min(self.n_a, self.n_b):
            raise ValueError("joint count exceeds a marginal count")
        for conf in (self.conf_a_given_b, self.conf_b_given_a):
            if not 0.0 <= conf <= 1.0:
                raise ValueError("confidence outside [0, 1]")


@dataclass
class CooccurrenceTable:
    classes: int
    pairs: list[PairStat]

    def __post_init__(self) -> None:
        seen = set()
        for p in self.pairs:
            if not (0 <= p.class_a < self.classes and 0 <= p.class_b < self.classes):
                raise ValueError("pair class index out of range")
            key = frozenset((p.class_a, p.class_b))
            if key in seen:
                raise ValueError(f"duplicate pair {sorted(key)}")
            seen.add(key)


_TSV_HEADER = "Co-occurrence\tClass A\tClass B\tFreq(A)\tFreq(B)\tConf(A|B)\tConf(B|A)"


def write_cooccurrence_tsv(path: str | Path, table: CooccurrenceTable, names: Sequence[str]) -> None:
    lines = [_TSV_HEADER]
    for p in table.pairs:
        lines.append(
            f"{p.n_ab}\t{names[p.class_a]}\t{names[p.class_b]}\t{p.n_a}\t{p.n_b}"
            f"\t{p.conf_a_given_b:.2f}\t{p.conf_b_given_a:.2f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_cooccurrence_tsv(path: str | Path, names: Sequence[str]) -> CooccurrenceTable:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != _TSV_HEADER:
        raise DataError(f"{path}: missing or wrong header line")
    index = {name: i for i, name in enumerate(names)}
    pairs = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 7:
            raise DataError(f"{path}:{ln}: expected 7 tab-separated fields")
        n_ab_s, name_a, name_b, n_a_s, n_b_s, cab_s, cba_s = fields
        for name in (name_a, name_b):
            if name not in index:
                raise DataError(f"{path}:{ln}: unknown class name {name!r}")
        try:
            stat = PairStat(
                class_a=index[name_a],
                class_b=index[name_b],
                n_a=int(n_a_s),
                n_b=int(n_b_s),
                n_ab=int(n_ab_s),
                conf_a_given_b=float(cab_s),
                conf_b_given_a=float(cba_s),
            )
        except ValueError as exc:
            raise DataError(f"{path}:{ln}: {exc}") from exc
        # the counts are authoritative; the confidence columns just echo
        # their ratio at print precision
        if stat.n_b and abs(stat.conf_a_given_b - stat.n_ab / stat.n_b) > 0.006:
            raise DataError(f"{path}:{ln}: Conf(A|B) disagrees with counts")
        if stat.n_a and abs(stat.conf_b_given_a - stat.n_ab / stat.n_a) > 0.006:
            raise DataError(f"{path}:{ln}: Conf(B|A) disagrees with counts")
        pairs.append(stat)
    try:
        return CooccurrenceTable(classes=len(names), pairs=pairs)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def mine_pairs(
    label_sets: Iterable, classes: int, threshold: float = 0.5, min_freq: int = 3
) -> CooccurrenceTable:
    """Count class co-occurrences over thresholded label sets.

    Emits pairs that co-occur at least ``min_freq`` times, most frequent
    first, as candidates for human review.
    """
    singles = np.zeros(classes, dtype=np.int64)
    joint = np.zeros((classes, classes), dtype=np.int64)
    for ls in label_sets:
        present = np.flatnonzero(np.asarray(ls.soft) >= threshold)
        singles[present] += 1
        for i, a in enumerate(present):
            for b in present[i + 1 :]:
                joint[a, b] += 1
    pairs = []
    for a in range(classes):
        for b in range(a + 1, classes):
            n_ab = int(joint[a, b])
            if n_ab >= min_freq:
                pairs.append(
                    PairStat(
                        class_a=a,
                        class_b=b,
                        n_a=int(singles[a]),
                        n_b=int(singles[b]),
                        n_ab=n_ab,
                        conf_a_given_b=n_ab / singles[b],
                        conf_b_given_a=n_ab / singles[a],
                    )
                )
    pairs.sort(key=lambda p: (-p.n_ab, p.class_a, p.class_b))
    return CooccurrenceTable(classes=classes, pairs=pairs)


def build_prior(table: CooccurrenceTable) -> np.ndarray:
    """Symmetric prior matrix: unit diagonal, max directional ratio per pair."""
    prior = np.eye(table.classes)
    for p in table.pairs:
        if p.n_a == 0 or p.n_b == 0:
            raise DataError(f"pair ({p.class_a}, {p.class_b}) has a zero marginal count")
        value = max(p.n_ab / p.n_a, p.n_ab / p.n_b)
        prior[p.class_a, p.class_b] = value
        prior[p.class_b, p.class_a] = value
    return prior


def propagate(prior: np.ndarray, p: np.ndarray) -> np.ndarray:
    """p' = clip(C p, 0, 1): push confidence across ambiguous pairs."""
    p = np.asarray(p, dtype=np.float64)
    if prior.ndim != 2 or prior.shape[0] != prior.shape[1] or p.shape != (prior.shape[0],):
        raise ValueError("prior and label vector shapes disagree")
    if (p < 0).any() or (p > 1).any():
        raise ValueError("soft labels must lie in [0, 1]")
    return np.clip(prior @ p, 0.0, 1.0)


@dataclass(frozen=True)
class UpgradeCounts:
    """Closed-form upgrade counts, raw and after rounding plus caps."""

    raw_m_a: float
    raw_m_b: float
    m_a: int
    m_b: int


def _solve_one(n_base: int, n_ab: int, target: float, cap: int) -> tuple[float, int]:
    """Solve (n_ab + M) / (n_base + M) = target for M, round, and cap."""
    if not 0.0 < target <= 1.0:
        raise ValueError("target probability must be in (0, 1]")
    if target == 1.0:
        return math.inf, max(0, cap)
    raw = (target * n_base - n_ab) / (1.0 - target)
    lo, hi = math.floor(raw), math.ceil(raw)

    def sub_err(m: int) -> float:
        return abs((n_ab + m) / (n_base + m) - target)

    m = lo if sub_err(lo) <= sub_err(hi) else hi
    return raw, max(0, min(m, cap))


def solve_upgrade_counts(
    n_a: int, n_b: int, n_ab: int, target_b_given_a: float, target_a_given_b: float
) -> UpgradeCounts:
    """Closed-form M_a, M_b hitting the target conditional probabilities.

    M_b solves (N_ab + M) / (N_a + M) = P(b|a) and is capped by the images
    holding b alone; M_a is the mirror image. Rounding picks whichever
    neighboring integer reproduces the target best on substitution.
    """
    if n_ab > min(n_a, n_b):
        raise ValueError("joint count exceeds a marginal count")
    raw_b, m_b = _solve_one(n_a, n_ab, target_b_given_a, cap=n_b - n_ab)
    raw_a, m_a = _solve_one(n_b, n_ab, target_a_given_b, cap=n_a - n_ab)
    return UpgradeCounts(raw_m_a=raw_a, raw_m_b=raw_b, m_a=m_a, m_b=m_b)


@dataclass(frozen=True)
class PairThresholds:
    """Per-pair confidence gates for adding the partner class."""

    class_a: int
    class_b: int
    tau_a: float
    tau_b: float
    m_a: int
    m_b: int
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.class_a == self.class_b:
            raise ValueError("a pair needs two distinct classes")
        for tau in (self.tau_a, self.tau_b):
            if not 0.0 < tau <= NEVER_FIRES:
                raise ValueError("threshold outside (0, 1] and not the sentinel")
        if min(self.m_a, self.m_b) < 0:
            raise ValueError("negative upgrade count")


@dataclass(frozen=True)
class CalibRecord:
    """One calibration image: its current label set and model probabilities."""

    image_id: str
    labels: frozenset[int]
    probs: np.ndarray


def select_threshold(
    candidates: Sequence[tuple[str, float]], m: int
) -> tuple[float, str | None]:
    """Score of the rank-m candidate (descending, ties by id).

    m = 0 yields the never-fires sentinel. Fewer than m candidates fall
    back to the minimum selected score and a warning message. A selected
    score of exactly zero clamps to the smallest positive float, which
    gates identically under the strict comparison the threshold feeds.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return NEVER_FIRES, None
    ranked = sorted(candidates, key=lambda c: (-c[1], c[0]))
    floor = math.nextafter(0.0, 1.0)
    if not ranked:
        return NEVER_FIRES, "no candidates; threshold never fires"
    if len(ranked) < m:
        return max(ranked[-1][1], floor), f"only {len(ranked)} candidates for m={m}; used all"
    return max(ranked[m - 1][1], floor), None


def derive_thresholds(
    calibration: Sequence[CalibRecord],
    class_a: int,
    class_b: int,
    m_a: int,
    m_b: int,
) -> PairThresholds:
    """Rank single-labeled calibration images by their missing-class score.

    tau_b gates adding b to images whose label is a, so its candidate pool
    is the single-labeled-a records scored on b; tau_a mirrors that.
    """
    pool_for_b = [
        (r.image_id, float(r.probs[class_b])) for r in calibration if r.labels == {class_a}
    ]
    pool_for_a = [
        (r.image_id, float(r.probs[class_a])) for r in calibration if r.labels == {class_b}
    ]
    tau_b, warn_b = select_threshold(pool_for_b, m_b)
    tau_a, warn_a = select_threshold(pool_for_a, m_a)
    warnings = tuple(
        f"tau_{side}: {msg}" for side, msg in (("a", warn_a), ("b", warn_b)) if msg
    )
    return PairThresholds(
        class_a=class_a, class_b=class_b, tau_a=tau_a, tau_b=tau_b,
        m_a=m_a, m_b=m_b, warnings=warnings,
    )


def apply_pairing(
    probs: np.ndarray, top1: int, thresholds: Sequence[PairThresholds]
) -> np.ndarray:
    """Add partner classes whose confidence exceeds the pair threshold.

    ``top1`` is the model's original top-1 prediction, passed explicitly so
    reapplying the rule to its own output changes nothing. Conditions read
    the input scores; the added class receives the top-1 class's score.
    """
    p = np.asarray(probs, dtype=np.float64)
    out = p.copy()
    for t in thresholds:
        if top1 == t.class_a and p[t.class_b] > t.tau_b:
            out[t.class_b] = p[t.class_a]
        elif top1 == t.class_b and p[t.class_a] > t.tau_a:
            out[t.class_a] = p[t.class_b]
    return out


def write_thresholds(path: str | Path, thresholds: Sequence[PairThresholds]) -> None:
    lines = ["class_a\tclass_b\ttau_a\ttau_b\tm_a\tm_b"]
    for t in thresholds:
        lines.append(
            f"{t.class_a}\t{t.class_b}\t{t.tau_a!r}\t{t.tau_b!r}\t{t.m_a}\t{t.m_b}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_thresholds(path: str | Path) -> list[PairThresholds]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "class_a\tclass_b\ttau_a\ttau_b\tm_a\tm_b":
        raise DataError(f"{path}: missing or wrong header line")
    out = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 6:
            raise DataError(f"{path}:{ln}: expected 6 tab-separated fields")
        try:
            out.append(
                PairThresholds(
                    class_a=int(fields[0]), class_b=int(fields[1]),
                    tau_a=float(fields[2]), tau_b=float(fields[3]),
                    m_a=int(fields[4]), m_b=int(fields[5]),
                )
            )
        except ValueError as exc:
            raise DataError(f"{path}:{ln}: {exc}") from exc
    return out
