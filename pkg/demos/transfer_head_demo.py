"""Train the softmax head on pooled features and inspect it.

Draws three Gaussian clusters standing in for backbone embeddings,
fits the classification head, and prints the loss trajectory, the
per-class report, and a couple of probe predictions with probabilities.
"""

import numpy as np

from vigil.softmax import TrainConfig, evaluation_report, predict_batch, train


def make_features(rng, n_per: int = 40):
    means = {"bike": (-3.0, 0.0), "car": (0.0, 3.0), "person": (3.0, 0.0)}
    X, labels = [], []
    for label, mu in means.items():
        X.append(rng.normal(mu, 0.8, size=(n_per, 2)))
        labels += [label] * n_per
    return np.vstack(X), labels


def main() -> None:
    rng = np.random.default_rng(31)
    X, labels = make_features(rng)

    result = train(X, labels, TrainConfig(learning_rate=0.3, l2_lambda=1e-3,
                                          max_epochs=300))
    losses = result.losses
    print(f"classes: {result.model.classes}")
    print(f"epochs run: {len(losses) - 1}, converged: {result.converged}")
    print("loss: " + " -> ".join(f"{losses[i]:.4f}"
                                 for i in (0, 1, 5, 20, len(losses) - 1)))

    report = evaluation_report(result.model, X, labels)
    print(f"\ntraining accuracy: {report['accuracy']:.3f}")
    for label, row in report["per_class"].items():
        print(f"  {label:<7} precision {row['precision']:.3f}  "
              f"recall {row['recall']:.3f}")

    probes = np.array([[-2.6, 0.4], [0.2, 2.7], [2.9, -0.3], [0.0, 0.0]])
    names, probs = predict_batch(result.model, probes)
    print("\nprobes:")
    for x, name, p in zip(probes, names, probs):
        dist = ", ".join(f"{c}={v:.2f}"
                         for c, v in zip(result.model.classes, p))
        print(f"  ({x[0]:+.1f}, {x[1]:+.1f}) -> {name:<7} [{dist}]")


if __name__ == "__main__":
    main()
