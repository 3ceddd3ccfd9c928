"""Class-structure graphs: similarity matrices, masking, and fusion.

Each structure source turns class prototypes into three normalized
Gaussian-of-Mahalanobis affinity matrices: within-seen, within-unseen,
and cross.  Multiple sources are blended by simplex weights.
"""

import numpy as np

from cla import (
    ClassPrototypes,
    FusionWeights,
    build_semantic_structures,
    build_visual_structures,
    class_prototypes,
    fuse_structures,
)

rng = np.random.default_rng(1)

# prototypes from labeled samples: column c is the mean of class c
x = rng.standard_normal((4, 30))
labels = rng.integers(0, 5, 30)
protos, mask = class_prototypes(x, labels, 5)
print("class counts:", np.bincount(labels, minlength=5), "mask:", mask)

# a semantic source: every class has a prototype
semantic = build_semantic_structures(
    ClassPrototypes(
        space_name="attributes",
        seen=rng.standard_normal((3, 5)),
        unseen=rng.standard_normal((3, 3)),
        availability_mask=np.ones(3, dtype=bool),
    )
)
print("\nsemantic w_su (sums to %.12f):" % semantic.w_su.sum())
print(np.array_str(semantic.w_su, precision=3))

# the visual source before any unseen label is estimated: zero placeholders
visual = build_visual_structures(
    ClassPrototypes(
        space_name="visual",
        seen=rng.standard_normal((3, 5)),
        unseen=np.zeros((3, 3)),
        availability_mask=np.zeros(3, dtype=bool),
    )
)
print("\nvisual placeholder w_u all zero:", bool(np.all(visual.w_u == 0)))

# fusing sources: one weight vector for seen, one for unseen/cross
weights = FusionWeights(beta=np.array([0.7, 0.3]), gamma=np.array([0.6, 0.4]))
fused = fuse_structures([semantic, visual], weights)
print("\nfused w_s sum:", fused.w_s.sum())
print("fused w_su sum (placeholder dilutes the mass):", fused.w_su.sum())
