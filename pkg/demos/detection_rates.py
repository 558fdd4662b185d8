"""How often does each criterion catch entanglement in random mixed states?

States are drawn from the induced measure: trace out a k-dimensional
environment from a Haar-random pure state.  Larger k means more mixed
states and fewer detections.  The exact PPT test is the ceiling; the
variational reference approaches it as circuit depth grows, while the
purity and fidelity-witness baselines fall away quickly.

This is a small four-qubit version of the full study, which the
``ippt ensemble`` command runs at six qubits.
"""

from ippt import EnsembleStudyConfig, OptimizerConfig, ensemble_study
from ippt.harness import ensemble_csv


def main():
    config = EnsembleStudyConfig(n_qubits=4, k_values=(2, 6, 16), samples_per_k=20,
                                 depths=(1, 2), fidelity_depth=2,
                                 optimizer=OptimizerConfig(max_iterations=100, restarts=3))
    rows = ensemble_study(config)
    print(ensemble_csv(rows, config))
    for k in config.k_values:
        line = ", ".join(f"{r['method']}{'' if r['depth'] is None else '@' + str(r['depth'])} "
                         f"{r['detection_rate']:.2f}" for r in rows if r["k"] == k)
        print(f"k={k:>2}: {line}")


if __name__ == "__main__":
    main()
