"""Automatic evaluation metrics: CLIPScore (text-image and image-image), KID,
CrystalBLEU, EED, and Table-shaped metric reports."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import strip_comments, tokenize
from .crystalbleu import crystal_bleu
from .eed import eed
from .embedder import EmbeddingVector
from .errors import (
    DimensionMismatch,
    MissingAlignment,
    TooFewSamples,
    ZeroVector,
)

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("cer", "csr", "eed", "kid", "clip_img", "clip", "crystalbleu")

KID_DEFAULT_SUBSETS = 100
KID_DEFAULT_SUBSET_SIZE = 1000
KID_KERNEL_DEGREE = 3


def _as_vector(v) -> np.ndarray:
    if isinstance(v, EmbeddingVector):
        v = v.values
    return np.asarray(v, dtype=np.float64)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    return float(a @ b / (na * nb))


def clip_score(text_emb, image_emb, weighted: bool = False) -> float:
    """100 * max(cosine, 0); with weighted=True the reference formula's 2.5
    weight is applied instead of the 100 scale."""
    a = _as_vector(text_emb)
    b = _as_vector(image_emb)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    scale = 2.5 if weighted else 100.0
    return scale * max(_cosine(a, b), 0.0)


def clip_score_img(ref_image_emb, gen_image_emb, weighted: bool = False) -> float:
    """CLIPScore applied to two image embeddings."""
    return clip_score(ref_image_emb, gen_image_emb, weighted=weighted)


def _poly_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return (x @ y.T / d + 1.0) ** KID_KERNEL_DEGREE


def _mmd2_unbiased(x: np.ndarray, y: np.ndarray) -> float:
    m = x.shape[0]
    kxx = _poly_kernel(x, x)
    kyy = _poly_kernel(y, y)
    kxy = _poly_kernel(x, y)
    off_xx = kxx.sum() - np.trace(kxx)
    off_yy = kyy.sum() - np.trace(kyy)
    off_xy = kxy.sum() - np.trace(kxy)
    return float((off_xx + off_yy - 2.0 * off_xy) / (m * (m - 1)))


def kid(
    gen_features: Sequence,
    ref_features: Sequence,
    subset_size: Optional[int] = None,
    n_subsets: int = KID_DEFAULT_SUBSETS,
    seed: int = 0,
) -> float:
    """Unbiased squared MMD under the degree-3 polynomial kernel
    k(x, y) = (x.y/d + 1)^3, averaged over random equal-size subsets.

    Slightly negative estimates are possible (unbiased estimator). Identical
    inputs with full-set subsets give exactly zero.
    """
    x = np.stack([_as_vector(v) for v in gen_features])
    y = np.stack([_as_vector(v) for v in ref_features])
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise TooFewSamples("kid needs at least two samples per side")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"{x.shape[1]} vs {y.shape[1]}")
    m = min(
        subset_size if subset_size is not None else KID_DEFAULT_SUBSET_SIZE,
        x.shape[0],
        y.shape[0],
    )
    rng = np.random.default_rng(seed)
    estimates = []
    for _ in range(n_subsets):
        # sorted subset indices keep matched positions aligned, so identical
        # inputs cancel exactly
        xi = np.sort(rng.choice(x.shape[0], size=m, replace=False))
        yi = np.sort(rng.choice(y.shape[0], size=m, replace=False))
        estimates.append(_mmd2_unbiased(x[xi], y[yi]))
    return float(np.mean(estimates))


@dataclass
class MetricValue:
    value: Optional[float]
    n: int  # sample count the value was computed over

    def as_dict(self) -> dict:
        return {"value": self.value, "n": self.n}


@dataclass
class MetricReport:
    rows: dict[str, dict[str, MetricValue]]  # system -> column -> value
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "rows": {
                system: {col: mv.as_dict() for col, mv in cols.items()}
                for system, cols in self.rows.items()
            },
            "metadata": self.metadata,
        }


def metric_report(
    pred_records: Sequence[dict],
    ref_records: Sequence[dict],
    embedder=None,
    outcomes: Optional[dict[str, Sequence]] = None,
    metrics: Sequence[str] = REPORT_COLUMNS,
    crystalbleu_k: int = 500,
    kid_subset_size: Optional[int] = None,
    kid_subsets: int = KID_DEFAULT_SUBSETS,
    clipscore_weighted: bool = False,
    seed: int = 0,
    dpi: int = 300,
) -> MetricReport:
    """Assemble a per-system metric table.

    Records are dicts with id, code, caption, optional image (path of the
    rasterized drawing) and optional system tag. Predictions align to
    references by id. Embedding columns are omitted with a None marker when
    no embedder is available; text columns are always produced. Scores on
    percentage-style columns (eed, crystalbleu) are scaled by 100.
    """
    refs_by_id = {r["id"]: r for r in ref_records}
    by_system: dict[str, list[tuple[dict, dict]]] = {}
    for pred in pred_records:
        ref = refs_by_id.get(pred["id"])
        if ref is None:
            raise MissingAlignment(f"prediction id {pred['id']!r} has no reference")
        by_system.setdefault(pred.get("system", "system"), []).append((pred, ref))

    from .repair import cer as _cer, csr as _csr  # cycle-free at call time

    rows: dict[str, dict[str, MetricValue]] = {}
    for system, pairs in sorted(by_system.items()):
        cols: dict[str, MetricValue] = {}
        n = len(pairs)

        if "eed" in metrics:
            scores = [eed(p["code"], r["code"]) for p, r in pairs]
            cols["eed"] = MetricValue(100.0 * float(np.mean(scores)), n)
        if "crystalbleu" in metrics:
            cands = [tokenize(strip_comments(p["code"])) for p, _ in pairs]
            refs = [tokenize(strip_comments(r["code"])) for _, r in pairs]
            cols["crystalbleu"] = MetricValue(
                100.0 * crystal_bleu(cands, refs, k=crystalbleu_k), n
            )
        runs = list(outcomes[system]) if outcomes and system in outcomes else None
        if runs is None:
            # generate-stage outputs carry per-record accounting fields
            units = [p["sampled_units"] for p, _ in pairs if "sampled_units" in p]
            errs = [p["final_errors"] for p, _ in pairs if "final_errors" in p]
        if "csr" in metrics:
            if runs is not None:
                cols["csr"] = MetricValue(_csr(runs), len(runs))
            else:
                cols["csr"] = MetricValue(
                    float(np.mean(units)) if units else None, len(units)
                )
        if "cer" in metrics:
            if runs is not None:
                cols["cer"] = MetricValue(_cer(runs), len(runs))
            else:
                cols["cer"] = MetricValue(
                    float(np.mean(errs)) if errs else None, len(errs)
                )

        embed_cols = [c for c in ("clip", "clip_img", "kid") if c in metrics]
        if embed_cols:
            if embedder is None:
                for c in embed_cols:
                    cols[c] = MetricValue(None, 0)
            else:
                imaged = [
                    (p, r) for p, r in pairs if p.get("image") and r.get("image")
                ]
                gen_img = [embedder.embed_image(p["image"]) for p, _ in imaged]
                ref_img = [embedder.embed_image(r["image"]) for _, r in imaged]
                if "clip" in metrics:
                    scores = [
                        clip_score(
                            embedder.embed_text(p["caption"]),
                            g,
                            weighted=clipscore_weighted,
                        )
                        for (p, _), g in zip(imaged, gen_img)
                    ]
                    cols["clip"] = MetricValue(
                        float(np.mean(scores)) if scores else None, len(scores)
                    )
                if "clip_img" in metrics:
                    scores = [
                        clip_score_img(r, g, weighted=clipscore_weighted)
                        for r, g in zip(ref_img, gen_img)
                    ]
                    cols["clip_img"] = MetricValue(
                        float(np.mean(scores)) if scores else None, len(scores)
                    )
                if "kid" in metrics:
                    if len(gen_img) >= 2 and len(ref_img) >= 2:
                        cols["kid"] = MetricValue(
                            kid(
                                gen_img,
                                ref_img,
                                subset_size=kid_subset_size,
                                n_subsets=kid_subsets,
                                seed=seed,
                            ),
                            len(gen_img),
                        )
                    else:
                        cols["kid"] = MetricValue(None, len(gen_img))
        rows[system] = cols

    metadata = {
        "provider": getattr(embedder, "model_id", None),
        "dpi": dpi,
        "seed": seed,
        "crystalbleu_k": crystalbleu_k,
        "kid_subsets": kid_subsets,
        "kid_subset_size": kid_subset_size,
        "clipscore_weighted": clipscore_weighted,
    }
    return MetricReport(rows=rows, metadata=metadata)
