"""Corpus evaluation: manifests, per-image scoring, normalization and summaries.

A manifest is tab-separated text with a header row naming the columns
``path``, ``category``, ``prompt_type`` and optionally ``seed``. Relative
paths resolve against the manifest's directory. Blank lines and lines
starting with ``#`` are ignored, except a ``# categories: a, b`` directive,
which adds category names to the vocabulary for that file.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from cvdloss.daltonization import NEGLIGIBLE_LOSS, daltonize
from cvdloss.imageio import read_png
from cvdloss.metric import DegenerateReferenceError, cvdloss_for_image, log10_delta
from cvdloss.simulation import PROMPT_TYPES, Deficiency, deficiencies_for_prompt_type

log = logging.getLogger(__name__)

DEFAULT_CATEGORIES = (
    "candy",
    "cartoon",
    "coral_reef",
    "flower",
    "fruit",
    "parrot",
    "poster",
    "street_view",
)
MANIFEST_COLUMNS = ("path", "category", "prompt_type", "seed")
WORKERS_ENV = "CVDLOSS_WORKERS"

PROMPT_SUFFIXES = {
    "standard": "",
    "colorblind_aware": " with red-green colorblind palette",
    "protanopia_aware": " with protanopia-friendly palette",
    "deuteranopia_aware": " with deuteranopia-friendly palette",
}


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ImageRecord:
    path: Path
    category: str
    prompt_type: str
    seed: int | None = None


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...]
    category_vocabulary: tuple[str, ...] = DEFAULT_CATEGORIES

    def __post_init__(self) -> None:
        if not self.records:
            raise ManifestError("manifest has no records")
        seen: set[Path] = set()
        for i, rec in enumerate(self.records, 1):
            if rec.path in seen:
                raise ManifestError(f"record {i}: duplicate path {rec.path}")
            seen.add(rec.path)
            if rec.category not in self.category_vocabulary:
                raise ManifestError(
                    f"record {i} ({rec.path}): unknown category {rec.category!r}; "
                    f"expected one of: {', '.join(self.category_vocabulary)}"
                )
            if rec.prompt_type not in PROMPT_TYPES:
                raise ManifestError(
                    f"record {i} ({rec.path}): unknown prompt_type {rec.prompt_type!r}; "
                    f"expected one of: {', '.join(PROMPT_TYPES)}"
                )

    def __len__(self) -> int:
        return len(self.records)


def _vocabulary(extra: Iterable[str]) -> tuple[str, ...]:
    vocab = list(DEFAULT_CATEGORIES)
    for name in extra:
        if name and name not in vocab:
            vocab.append(name)
    return tuple(vocab)


def parse_manifest(text: str, base_dir: str | Path = ".", extra_categories: Iterable[str] = ()) -> DatasetManifest:
    """Parse manifest text; relative paths are resolved against ``base_dir``."""
    extra = list(extra_categories)
    body = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            key, _, value = stripped.lstrip("#").partition(":")
            if key.strip().lower() == "categories":
                extra.extend(v.strip() for v in value.split(","))
            continue
        if stripped:
            body.append(line)
    if not body:
        raise ManifestError("manifest is empty")

    reader = csv.reader(body, delimiter="\t")
    header = [h.strip() for h in next(reader)]
    missing = [c for c in MANIFEST_COLUMNS[:3] if c not in header]
    if missing:
        raise ManifestError(f"manifest header lacks column(s) {', '.join(missing)}; got {header}")
    col = {name: header.index(name) for name in MANIFEST_COLUMNS if name in header}

    base = Path(base_dir)
    records = []
    for lineno, row in enumerate(reader, 2):
        if len(row) != len(header):
            raise ManifestError(f"manifest row {lineno}: expected {len(header)} fields, got {len(row)}")
        seed_text = row[col["seed"]].strip() if "seed" in col else ""
        try:
            seed = int(seed_text) if seed_text else None
        except ValueError:
            raise ManifestError(f"manifest row {lineno}: seed {seed_text!r} is not an integer") from None
        path = Path(row[col["path"]].strip())
        records.append(
            ImageRecord(
                path=path if path.is_absolute() else base / path,
                category=row[col["category"]].strip(),
                prompt_type=row[col["prompt_type"]].strip(),
                seed=seed,
            )
        )
    return DatasetManifest(tuple(records), _vocabulary(extra))


def load_manifest(path: str | Path, extra_categories: Iterable[str] = ()) -> DatasetManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    return parse_manifest(text, path.parent, extra_categories)


def discover_manifest(root: str | Path, extra_categories: Iterable[str] = ()) -> DatasetManifest:
    """Build a manifest from a ``<category>/<prompt_type>/*.png`` tree.

    Every category directory found is accepted. Unknown prompt-type
    directories are rejected.
    """
    root = Path(root)
    if not root.is_dir():
        raise ManifestError(f"not a directory: {root}")
    records = []
    categories = list(extra_categories)
    for cat_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        categories.append(cat_dir.name)
        for prompt_dir in sorted(p for p in cat_dir.iterdir() if p.is_dir()):
            for png in sorted(prompt_dir.glob("*.png")):
                records.append(ImageRecord(png, cat_dir.name, prompt_dir.name))
    if not records:
        raise ManifestError(f"no <category>/<prompt_type>/*.png images under {root}")
    return DatasetManifest(tuple(records), _vocabulary(categories))


def format_manifest(manifest: DatasetManifest, relative_to: str | Path | None = None) -> str:
    extra = [c for c in manifest.category_vocabulary if c not in DEFAULT_CATEGORIES]
    out = io.StringIO()
    if extra:
        out.write(f"# categories: {', '.join(extra)}\n")
    out.write("\t".join(MANIFEST_COLUMNS) + "\n")
    for rec in manifest.records:
        path = rec.path
        if relative_to is not None:
            path = Path(os.path.relpath(path, relative_to))
        seed = "" if rec.seed is None else str(rec.seed)
        out.write(f"{path.as_posix()}\t{rec.category}\t{rec.prompt_type}\t{seed}\n")
    return out.getvalue()


@dataclass(frozen=True)
class EvaluationRecord:
    image: ImageRecord
    deficiency: Deficiency
    value: float | None = None
    log10: float | None = None
    error: str | None = None
    normalized: float | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _score_image(rec: ImageRecord) -> list[EvaluationRecord]:
    deficiencies = deficiencies_for_prompt_type(rec.prompt_type)
    try:
        img = read_png(rec.path)
    except Exception as exc:  # any decode failure becomes an error-marked record
        msg = f"unreadable image: {exc}"
        return [EvaluationRecord(rec, d, error=msg) for d in deficiencies]
    out = []
    for d in deficiencies:
        try:
            score = cvdloss_for_image(img, d)
        except (DegenerateReferenceError, ValueError) as exc:
            out.append(EvaluationRecord(rec, d, error=str(exc)))
            continue
        if score.value <= NEGLIGIBLE_LOSS:
            # Simulation-invariant content: the score is rounding noise and has no usable log.
            msg = f"degenerate: CVDLoss {score.value:.3g} is rounding noise, log10 undefined"
            out.append(EvaluationRecord(rec, d, error=msg))
        else:
            out.append(EvaluationRecord(rec, d, value=score.value, log10=math.log10(score.value)))
    return out


def default_workers() -> int:
    text = os.environ.get(WORKERS_ENV, "").strip()
    if not text:
        return 1
    try:
        n = int(text)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV}={text!r} is not an integer") from None
    return max(1, n)


def _map(func, items: Sequence, workers: int) -> list:
    # Results come back in input order regardless of worker count.
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


def evaluate_corpus(manifest: DatasetManifest, workers: int = 1) -> list[EvaluationRecord]:
    """Score every image for each deficiency its prompt type routes to."""
    results = _map(_score_image, manifest.records, workers)
    return [r for per_image in results for r in per_image]


def _group_key(r: EvaluationRecord) -> tuple[str, Deficiency]:
    return (r.image.category, r.deficiency)


def normalize_by_standard(records: Sequence[EvaluationRecord]) -> list[EvaluationRecord]:
    """Subtract, per (category, deficiency), the mean log10 score of standard-prompt images.

    Records in groups without a usable standard-prompt baseline keep
    ``normalized=None``; see :func:`baselines` to find them.
    """
    base = baselines(records)
    out = []
    for r in records:
        b = base.get(_group_key(r))
        if r.log10 is not None and b is not None:
            r = replace(r, normalized=r.log10 - b)
        out.append(r)
    return out


def baselines(records: Sequence[EvaluationRecord]) -> dict[tuple[str, Deficiency], float | None]:
    """Mean standard-prompt log10 per (category, deficiency); ``None`` when absent."""
    std: dict[tuple[str, Deficiency], list[float]] = defaultdict(list)
    keys = []
    for r in records:
        k = _group_key(r)
        if k not in keys:
            keys.append(k)
        if r.image.prompt_type == "standard" and r.log10 is not None:
            std[k].append(r.log10)
    return {k: (math.fsum(std[k]) / len(std[k]) if std[k] else None) for k in keys}


@dataclass(frozen=True)
class Distribution:
    count: int
    mean: float
    q1: float
    median: float
    q3: float

    @classmethod
    def of(cls, values: Sequence[float]) -> Distribution | None:
        if not values:
            return None
        q1, med, q3 = np.percentile(np.asarray(values, dtype=np.float64), [25, 50, 75])
        return cls(len(values), math.fsum(values) / len(values), float(q1), float(med), float(q3))


@dataclass(frozen=True)
class CategorySummary:
    category: str
    prompt_type: str
    deficiency: Deficiency
    errors: int
    log10: Distribution | None
    baseline: float | None
    normalized: Distribution | None

    @property
    def count(self) -> int:
        return self.log10.count if self.log10 else 0


def summarize(records: Sequence[EvaluationRecord]) -> list[CategorySummary]:
    """One summary per (category, prompt_type, deficiency), in first-seen order."""
    base = baselines(records)
    groups: dict[tuple[str, str, Deficiency], list[EvaluationRecord]] = defaultdict(list)
    for r in records:
        groups[(r.image.category, r.image.prompt_type, r.deficiency)].append(r)
    out = []
    for (cat, prompt, d), members in groups.items():
        out.append(
            CategorySummary(
                category=cat,
                prompt_type=prompt,
                deficiency=d,
                errors=sum(1 for m in members if not m.ok),
                log10=Distribution.of([m.log10 for m in members if m.log10 is not None]),
                baseline=base.get((cat, d)),
                normalized=Distribution.of([m.normalized for m in members if m.normalized is not None]),
            )
        )
    return out


@dataclass(frozen=True)
class DeltaRecord:
    image: ImageRecord
    deficiency: Deficiency
    delta: float | None = None
    before: float | None = None
    after: float | None = None
    clip_fraction: float | None = None
    error: str | None = None


def _delta_image(rec: ImageRecord) -> list[DeltaRecord]:
    try:
        img = read_png(rec.path)
    except Exception as exc:
        return [DeltaRecord(rec, d, error=f"unreadable image: {exc}") for d in Deficiency]
    out = []
    for d in Deficiency:
        try:
            before = cvdloss_for_image(img, d)
            result = daltonize(img, d)
            after = cvdloss_for_image(result.image, d)
        except (DegenerateReferenceError, ValueError) as exc:
            out.append(DeltaRecord(rec, d, error=str(exc)))
            continue
        if before.value <= NEGLIGIBLE_LOSS or after.value <= NEGLIGIBLE_LOSS:
            out.append(
                DeltaRecord(
                    rec, d, before=before.value, after=after.value, clip_fraction=result.clip_fraction,
                    error="degenerate reference: zero CVDLoss, log delta undefined",
                )
            )
            continue
        out.append(
            DeltaRecord(
                rec, d, delta=log10_delta(after, before), before=before.value,
                after=after.value, clip_fraction=result.clip_fraction,
            )
        )
    return out


@dataclass
class DaltonizationExperiment:
    deltas: list[DeltaRecord]
    summaries: dict[tuple[str, Deficiency], Distribution | None] = field(default_factory=dict)

    @property
    def excluded(self) -> int:
        return sum(1 for r in self.deltas if r.error is not None)


def daltonization_experiment(manifest: DatasetManifest, workers: int = 1) -> DaltonizationExperiment:
    """Daltonize every standard-prompt image for both deficiencies and record log10 deltas."""
    standard = [r for r in manifest.records if r.prompt_type == "standard"]
    if not standard:
        raise ManifestError("nothing to verify: manifest has no standard-prompt images")
    deltas = [d for per_image in _map(_delta_image, standard, workers) for d in per_image]
    groups: dict[tuple[str, Deficiency], list[float]] = defaultdict(list)
    for r in deltas:
        groups.setdefault((r.image.category, r.deficiency), [])
        if r.delta is not None:
            groups[(r.image.category, r.deficiency)].append(r.delta)
    return DaltonizationExperiment(deltas, {k: Distribution.of(v) for k, v in groups.items()})


def prompt_text(scene: str, prompt_type: str) -> str:
    """Compose a generation prompt, e.g. ``prompt_text("A parrot on a branch", "protanopia_aware")``."""
    if prompt_type not in PROMPT_SUFFIXES:
        raise ValueError(f"unknown prompt type {prompt_type!r}; expected one of: {', '.join(PROMPT_TYPES)}")
    return f"{scene.rstrip('.')}{PROMPT_SUFFIXES[prompt_type]}."


def load_prompts() -> dict[tuple[str, str], str]:
    """The bundled generation prompts, keyed by (category, prompt_type)."""
    text = resources.files("cvdloss").joinpath("data/prompts.tsv").read_text(encoding="utf-8")
    rows = csv.DictReader(text.splitlines(), delimiter="\t")
    return {(r["category"], r["prompt_type"]): r["prompt"] for r in rows}
