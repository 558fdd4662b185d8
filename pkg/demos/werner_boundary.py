"""Where does the optimized reference stop seeing entanglement?

Werner states p|Psi-><Psi-| + (1-p) I/4 are entangled exactly for p > 1/3.
The smallest interferometric value over all reference states equals the
smallest eigenvalue of the partial transpose, (1 - 3p)/4.  We recover it
twice: once with a free unit-vector reference and once with a shallow
hardware-style circuit.
"""

import numpy as np

from ippt import Bipartition, OptimizerConfig, build_ansatz, exact_ppt, minimize_ippt, werner


def main():
    bip = Bipartition(2, (0,), (1,))
    config = OptimizerConfig(restarts=4)
    ansatz = build_ansatz(2, 2)
    print(f"{'p':>5} {'exact':>9} {'free':>9} {'circuit':>9}  detected")
    for p in np.linspace(0.0, 1.0, 11):
        rho = werner(p)
        free = minimize_ippt(rho, None, config, bip)
        circ = minimize_ippt(rho, ansatz, config, bip)
        print(f"{p:5.2f} {exact_ppt(rho, bip):9.4f} {free.value:9.4f} {circ.value:9.4f}  {circ.detected}")


if __name__ == "__main__":
    main()
