"""Balance a skewed dataset manifest with seeded augmentations.

Starts from an imbalanced class distribution, runs the balancer, and
prints the before/after counts plus the transform parameters attached to
a few of the synthesized records.  Re-running always produces the same
plan because every draw comes from the seeded generator.
"""

from vigil.augment import (
    AugmentationBounds,
    DatasetManifest,
    ManifestRecord,
    balance,
    balance_report,
    balance_target,
)
from vigil.rng import Rng, derive_seed

COUNTS = {"person": 34, "car": 9, "bike": 3}


def main() -> None:
    records = [ManifestRecord(f"frames/{label}_{i:03d}.png", label)
               for label, n in COUNTS.items() for i in range(n)]
    manifest = DatasetManifest(records)

    rng = Rng(derive_seed(2024, "augment"))
    balanced = balance(manifest, AugmentationBounds(), rng)
    report = balance_report(manifest, balanced)

    print(f"{'class':<8} {'before':>6} {'after':>6} {'generated':>9}")
    for label, row in report.items():
        print(f"{label:<8} {row['before']:>6} {row['after']:>6} "
              f"{row['generated']:>9}")
    print(f"target per class: {balance_target(manifest.class_counts())}")

    print("\nsample of synthesized records:")
    shown = 0
    for rec in balanced.records:
        if rec.augmented and shown < 4:
            p = rec.params
            print(f"  {rec.path}")
            print(f"    from {rec.source_path}: rot {p.angle_deg:+.2f} deg, "
                  f"shear {p.shear:+.3f}, flip {p.flip}, "
                  f"color x{p.color_scale:.3f} {p.color_offset:+.1f}")
            shown += 1

    again = balance(DatasetManifest(records), AugmentationBounds(),
                    Rng(derive_seed(2024, "augment")))
    print(f"\nsame seed, same plan: "
          f"{[r.path for r in again.records] == [r.path for r in balanced.records]}")


if __name__ == "__main__":
    main()
