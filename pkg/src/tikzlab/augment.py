"""Caption augmentation: detect short captions, rank candidate descriptions
by CLIPScore against the drawing, and concatenate the winner."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence

from .analysis import tokenize
from .corpus import TikzRecord
from .errors import EmbedderUnavailable
from .metrics import clip_score

log = logging.getLogger(__name__)

TOKEN_THRESHOLD = 30
CANDIDATE_COUNT = 5


def needs_augmentation(caption: str, threshold: int = TOKEN_THRESHOLD) -> bool:
    """True iff the caption has strictly fewer than threshold tokens."""
    return len(tokenize(caption)) < threshold


def rank_candidates(
    image_embedding, candidates: Sequence[str], embedder
) -> list[str]:
    """Stable sort of candidate descriptions by CLIPScore against the image
    embedding, best first; ties keep input order."""
    if not candidates:
        raise ValueError("candidate list must be non-empty")
    scored = [
        (clip_score(embedder.embed_text(c), image_embedding), i, c)
        for i, c in enumerate(candidates)
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [c for _, _, c in scored]


def augment_caption(original: str, winner: str) -> str:
    """Concatenate the original caption and the winning description with a
    single space."""
    if not winner:
        return original
    return f"{original} {winner}"


def augment_record(
    record: TikzRecord,
    image_path: str | Path,
    embedder,
    captioner=None,
    threshold: int = TOKEN_THRESHOLD,
    always: bool = False,
) -> TikzRecord:
    """Augment one record's caption if it is short (or always, for the
    diversity branch); already-augmented records are returned unchanged."""
    if record.augmented:
        return record
    if not always and not needs_augmentation(record.caption, threshold):
        return record
    captioner = captioner or embedder
    candidates = captioner.caption_image(image_path)
    if not candidates:
        raise EmbedderUnavailable("captioner returned no candidates")
    image_emb = embedder.embed_image(image_path)
    winner = rank_candidates(image_emb, candidates, embedder)[0]
    caption = augment_caption(record.caption, winner)
    return TikzRecord(
        id=record.id,
        caption=caption,
        code=record.code,
        origin=record.origin,
        license=record.license,
        augmented=True,
        created=record.created,
    )


def augment_records(
    records: Sequence[TikzRecord],
    images_dir: str | Path,
    embedder,
    captioner=None,
    threshold: int = TOKEN_THRESHOLD,
    always: bool = False,
) -> tuple[list[TikzRecord], int]:
    """Augment a record batch; images are looked up as <id>.png under
    images_dir. Records without an image are passed through. Returns the
    records plus the number augmented."""
    images_dir = Path(images_dir)
    out = []
    augmented = 0
    for rec in records:
        image = images_dir / f"{rec.id}.png"
        if not image.exists():
            log.warning("no image for record %s, skipping augmentation", rec.id)
            out.append(rec)
            continue
        new = augment_record(
            rec, image, embedder, captioner, threshold=threshold, always=always
        )
        if new.augmented and not rec.augmented:
            augmented += 1
        out.append(new)
    return out, augmented
