"""Inference-side plumbing: decode, top-k per level, NMS.

Simulates a detector head on a crowded scene. Each ground truth contour
gets several candidate detections whose offsets are corrupted copies of
the perfect regression targets; decoding turns them back into polygons
and NMS keeps one per object.
"""

import numpy as np

from pointset_anchors import (
    Contour,
    Detection,
    build_mask_anchor,
    construct_mask,
    decode_points,
    match,
    nms,
    random_convex_polygon,
    rasterized_mask_iou,
    topk_per_level,
)

rng = np.random.default_rng(3)

# Three objects, deliberately overlapping: centers 60 px apart, radius ~45.
centers = [(100.0, 100.0), (160.0, 110.0), (120.0, 170.0)]
gts = [Contour(random_convex_polygon(rng, 10, c, radii=(45.0, 45.0))) for c in centers]

candidates = []
for gt_index, gt in enumerate(gts):
    bounds = gt.bounds()
    side = float(np.sqrt(bounds.width * bounds.height))
    # Five candidates per object: jittered anchor placements with noisy
    # offsets, scored by how little noise they carry.
    for trial in range(5):
        shift = rng.normal(0.0, 6.0, size=2)
        anchor = build_mask_anchor((bounds.center.x + shift[0],
                                    bounds.center.y + shift[1]),
                                   side, n=24)
        result = match(anchor, gt, "corner-projection")
        noise = rng.normal(0.0, 0.5 + 2.0 * trial, size=result.offsets.shape)
        decoded, valid = decode_points(anchor.points, result.offsets + noise,
                                       result.valid)
        shape = construct_mask(decoded, valid, "corner-projection")
        score = float(np.clip(0.95 - 0.12 * trial + rng.normal(0, 0.02), 0.05, 1.0))
        candidates.append(Detection(score=score, class_id=1, shape=shape,
                                    anchor_ref=gt_index))

print(f"{len(candidates)} candidates for {len(gts)} objects")

# Pretend they came from one pyramid level and keep the best 10 of it.
merged = topk_per_level([candidates], k=10)
print(f"top-k per level keeps {len(merged)}, score range "
      f"{merged[-1].score:.2f} .. {merged[0].score:.2f}")

kept = nms(merged, iou_threshold=0.5)
print(f"\nNMS at 0.5 keeps {len(kept)}:")
for i in kept:
    det = merged[i]
    best = max(rasterized_mask_iou(det.shape, gt) for gt in gts)
    print(f"  score {det.score:.2f}  object {det.anchor_ref}  "
          f"mask IoU vs its gt {best:.3f}")

# Each surviving detection should cover a distinct object.
assert len({merged[i].anchor_ref for i in kept}) == len(kept)
