"""Offline evaluation: run the pipeline over a labeled image set and score it.

A dataset is a directory of PNG or JPEG files labeled either by a
``manifest.json`` mapping filename to affect name, or by one ``<stem>.json``
sidecar per image carrying ``{"emotion": "<affect>"}``.  Each image goes
through a full turn; the response is scored for affect agreement (does the
chosen emoji map back to the labeled affect), hue alignment (fraction of
palette colors whose hue expresses the label), motion alignment (is the
motion in the label's preferred set), and color mimicry (palette sitting
suspiciously close to the image's dominant colors).  The JSON report is
deterministic: sorted keys, rounded floats, no timestamps, so identical runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .affect import AffectLabel, AffectTables, default_tables, emoji_to_va, nearest_affect
from .images import ImageError, ImageInput, ImageSource, dominant_colors
from .leds import ColorPalette
from .motion import AtomicAction
from .pipeline import EmpathicResponse, run_turn
from .vlm import BackendConfig, BackendError, make_session

__all__ = [
    "DatasetError",
    "LabeledImage",
    "MimicryResult",
    "TurnScore",
    "ImageResult",
    "EvalReport",
    "MIMICRY_THRESHOLD",
    "ingest",
    "detect_mimicry",
    "score_response",
    "evaluate",
    "dominant_colors",
]

log = logging.getLogger(__name__)

MIMICRY_THRESHOLD = 0.12
MAX_WORKERS = 4

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
_MANIFEST_NAME = "manifest.json"


class DatasetError(Exception):
    """The dataset directory is missing, unlabeled, or inconsistent."""


@dataclass(frozen=True)
class LabeledImage:
    image_id: str
    image: ImageInput
    label: AffectLabel


def _image_files(root: Path) -> list[Path]:
    files = sorted(
        p for p in root.iterdir() if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
    )
    stems = [p.stem for p in files]
    for stem in stems:
        if stems.count(stem) > 1:
            raise DatasetError(f"duplicate image id {stem!r} in {root}")
    return files


def _parse_label(value: object, where: str) -> AffectLabel | None:
    if not isinstance(value, str):
        log.warning("%s: label must be a string, got %s; skipped", where, type(value).__name__)
        return None
    try:
        return AffectLabel.parse(value)
    except ValueError as exc:
        log.warning("%s: %s; skipped", where, exc)
        return None


def _sidecar_label(p: Path) -> AffectLabel | None:
    sidecar = p.with_suffix(".json")
    if not sidecar.is_file():
        log.warning("%s: no sidecar %s and no %s; skipped", p.name, sidecar.name, _MANIFEST_NAME)
        return None
    try:
        obj = json.loads(sidecar.read_text(encoding="utf-8"))
    except ValueError as exc:
        log.warning("%s: not valid JSON (%s); skipped", sidecar, exc)
        return None
    if not isinstance(obj, dict) or "emotion" not in obj:
        log.warning('%s: expected an object with an "emotion" key; skipped', sidecar)
        return None
    return _parse_label(obj["emotion"], str(sidecar))


def ingest(path: str | Path) -> list[LabeledImage]:
    """Load a labeled dataset directory, sorted by image id.

    Entries that cannot be labeled or decoded are logged and skipped; an
    empty result raises DatasetError.
    """
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"dataset directory {root} does not exist")
    files = _image_files(root)

    labels: dict[str, AffectLabel] = {}
    manifest = root / _MANIFEST_NAME
    if manifest.is_file():
        try:
            mapping = json.loads(manifest.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise DatasetError(f"{manifest}: not valid JSON: {exc}") from exc
        if not isinstance(mapping, dict):
            raise DatasetError(f"{manifest}: expected an object mapping filename to label")
        by_name = {p.name: p for p in files}
        for name, value in mapping.items():
            if name not in by_name:
                log.warning("%s: %r is not an image in %s; skipped", manifest, name, root)
                continue
            label = _parse_label(value, f"{manifest}:{name}")
            if label is not None:
                labels[by_name[name].stem] = label
    else:
        for p in files:
            label = _sidecar_label(p)
            if label is not None:
                labels[p.stem] = label

    items = []
    for p in files:
        if p.stem not in labels:
            continue
        try:
            image = ImageInput.from_file(p, ImageSource.DATASET)
        except ImageError as exc:
            log.warning("%s: %s; skipped", p.name, exc)
            continue
        items.append(LabeledImage(p.stem, image, labels[p.stem]))
    if not items:
        raise DatasetError(f"no labeled, decodable images in {root}")
    return items


@dataclass(frozen=True)
class MimicryResult:
    distance: float
    flagged: bool


def detect_mimicry(
    palette: ColorPalette,
    image: ImageInput,
    k: int = 5,
    threshold: float = MIMICRY_THRESHOLD,
) -> MimicryResult:
    """Distance between the palette and the image's dominant colors.

    Mean over palette colors of the distance to the nearest dominant color,
    in the unit RGB cube, divided by sqrt(3) so it lands in [0, 1].  Small
    distances mean the palette mirrors the scene instead of the emotion.
    """
    dominant = [(c.r / 255.0, c.g / 255.0, c.b / 255.0) for c in dominant_colors(image, k)]
    total = 0.0
    for color in palette.colors:
        p = (color.r / 255.0, color.g / 255.0, color.b / 255.0)
        total += min(math.dist(p, d) for d in dominant)
    distance = total / len(palette.colors) / math.sqrt(3.0)
    return MimicryResult(distance=distance, flagged=distance < threshold)


@dataclass(frozen=True)
class TurnScore:
    predicted: AffectLabel
    affect_match: bool
    hue_alignment: float
    motion_match: bool


def score_response(
    response: EmpathicResponse,
    label: AffectLabel,
    tables: AffectTables | None = None,
) -> TurnScore:
    """Score one response against the ground-truth affect label."""
    tables = tables if tables is not None else default_tables()
    predicted = nearest_affect(emoji_to_va(response.emoji, tables), tables.anchor_table)
    expressed = sum(
        1 for c in response.palette.colors if tables.anchor_table.color_expresses(label, c)
    )
    preferred = tables.anchor_table.actions[label]
    return TurnScore(
        predicted=predicted,
        affect_match=predicted is label,
        hue_alignment=expressed / len(response.palette.colors),
        motion_match=response.motion in preferred,
    )


@dataclass(frozen=True)
class ImageResult:
    item: LabeledImage
    response: EmpathicResponse
    score: TurnScore
    mimicry: MimicryResult
    repaired: bool
    fell_back: bool


@dataclass(frozen=True)
class EvalReport:
    """Scored results plus per-image backend failures (excluded from rates)."""

    results: tuple[ImageResult, ...]
    grayscale: bool
    failures: tuple[tuple[str, str], ...] = ()

    @property
    def aggregates(self) -> dict[str, float]:
        n = len(self.results)
        return {
            "affect_agreement": sum(r.score.affect_match for r in self.results) / n,
            "hue_alignment": sum(r.score.hue_alignment for r in self.results) / n,
            "motion_alignment": sum(r.score.motion_match for r in self.results) / n,
            "mimicry_rate": sum(r.mimicry.flagged for r in self.results) / n,
            "repair_rate": sum(r.repaired for r in self.results) / n,
            "fallback_rate": sum(r.fell_back for r in self.results) / n,
        }

    @property
    def confusion(self) -> dict[str, dict[str, int]]:
        """Counts of labeled affect (rows) against predicted affect (columns)."""
        table = {a.value: {b.value: 0 for b in AffectLabel} for a in AffectLabel}
        for r in self.results:
            table[r.item.label.value][r.score.predicted.value] += 1
        return table

    def to_dict(self) -> dict:
        return {
            "aggregates": {k: round(v, 6) for k, v in self.aggregates.items()},
            "confusion": self.confusion,
            "failures": {
                "count": len(self.failures),
                "items": [{"id": i, "error": msg} for i, msg in self.failures],
            },
            "grayscale": self.grayscale,
            "n_images": len(self.results),
            "per_image": [
                {
                    "id": r.item.image_id,
                    "label": r.item.label.value,
                    "predicted": r.score.predicted.value,
                    "emoji": r.response.emoji,
                    "motion": r.response.motion,
                    "palette": r.response.palette.to_hex(),
                    "affect_match": r.score.affect_match,
                    "hue_alignment": round(r.score.hue_alignment, 6),
                    "motion_match": r.score.motion_match,
                    "mimicry_distance": round(r.mimicry.distance, 6),
                    "mimicry_flagged": r.mimicry.flagged,
                    "repaired": r.repaired,
                    "fell_back": r.fell_back,
                }
                for r in self.results
            ],
        }

    def to_json(self) -> str:
        """Deterministic bytes: sorted keys, fixed rounding, no timestamps."""
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "id",
                "label",
                "predicted",
                "affect_match",
                "hue_alignment",
                "motion_match",
                "mimicry_distance",
                "mimicry_flagged",
                "repaired",
                "fell_back",
            ]
        )
        for r in self.results:
            writer.writerow(
                [
                    r.item.image_id,
                    r.item.label.value,
                    r.score.predicted.value,
                    int(r.score.affect_match),
                    f"{r.score.hue_alignment:.6f}",
                    int(r.score.motion_match),
                    f"{r.mimicry.distance:.6f}",
                    int(r.mimicry.flagged),
                    int(r.repaired),
                    int(r.fell_back),
                ]
            )
        return buf.getvalue()


def _run_one(
    item: LabeledImage,
    config: BackendConfig,
    grayscale: bool,
    use_sidecar: bool,
    tables: AffectTables,
    actions: tuple[AtomicAction, ...] | None,
) -> ImageResult:
    image = item.image.to_grayscale() if grayscale else item.image
    sidecar = item.label if use_sidecar else None
    session = make_session(config, sidecar=sidecar, tables=tables)
    try:
        turn = run_turn(session, image, tables=tables, actions=actions)
    finally:
        close = getattr(session, "close", None)
        if close is not None:
            close()
    return ImageResult(
        item=item,
        response=turn.response,
        score=score_response(turn.response, item.label, tables),
        mimicry=detect_mimicry(turn.response.palette, image),
        repaired=turn.repaired,
        fell_back=turn.fell_back,
    )


def evaluate(
    items: list[LabeledImage],
    config: BackendConfig | None = None,
    grayscale: bool = False,
    use_sidecar: bool = True,
    workers: int = MAX_WORKERS,
    tables: AffectTables | None = None,
    actions: tuple[AtomicAction, ...] | None = None,
) -> EvalReport:
    """Run one turn per image, in parallel, and aggregate the scores.

    use_sidecar feeds each image's ground-truth label to the backend, which
    only the mock honors; it checks the scoring plumbing rather than the
    model.  Results keep dataset order regardless of completion order.  A
    backend failure on an image records the failure and drops the image from
    the aggregates; if every image fails the run raises.
    """
    if not items:
        raise DatasetError("nothing to evaluate")
    config = config if config is not None else BackendConfig()
    tables = tables if tables is not None else default_tables()
    workers = max(1, min(workers, MAX_WORKERS, len(items)))

    def attempt(item: LabeledImage) -> ImageResult | tuple[str, str]:
        try:
            return _run_one(item, config, grayscale, use_sidecar, tables, actions)
        except BackendError as exc:
            return (item.image_id, str(exc))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(attempt, items))
    results = tuple(o for o in outcomes if isinstance(o, ImageResult))
    failures = tuple(o for o in outcomes if not isinstance(o, ImageResult))
    if not results:
        raise DatasetError(f"every image failed; first error: {failures[0][1]}")
    return EvalReport(results=results, grayscale=grayscale, failures=failures)
