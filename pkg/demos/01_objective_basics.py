"""A first look at the representativity objective.

Builds a tiny one-dimensional dataset, scores a few candidate sets and
shows the two properties everything else rests on: adding elements never
hurts, and the gain of an element shrinks as the set grows.
"""

import numpy as np

from exembatch import (
    Precision,
    build_ground_set,
    exemplar_value,
    kmedoids_loss,
    marginal_gain,
)


def main():
    ground = build_ground_set([[1.0], [3.0]], precision=Precision.binary64)
    print(f"dataset: {ground.n} points, reference loss {ground.aux_loss}")

    for candidate in ([[3.0]], [[1.0]], [[1.0], [3.0]]):
        flat = [v[0] for v in candidate]
        print(
            f"  set {flat}: loss {kmedoids_loss(ground, candidate):.4f}, "
            f"value {exemplar_value(ground, candidate):.4f}"
        )

    print("\ndiminishing returns on a random dataset:")
    rng = np.random.default_rng(0)
    data = rng.random((200, 5))
    ground = build_ground_set(data, precision=Precision.binary64)
    extra = data[150]
    for size in (1, 5, 20):
        gain = marginal_gain(ground, data[:size], extra)
        print(f"  gain of one fixed point on top of {size:3d} others: {gain:.6f}")


if __name__ == "__main__":
    main()
