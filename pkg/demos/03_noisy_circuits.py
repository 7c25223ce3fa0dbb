"""Gate noise on free-fermion brickwork circuits.

Every Pauli maps each Jordan-Wigner Majorana operator to plus or minus
itself, and free-fermion gates never change the Majorana degree of an
operator. A free-fermion circuit with depolarizing noise after every gate
therefore still commutes with the degree grading of operator space on all
of its qubits; a chaotic circuit, with its extra Y rotations, does not.
Tracing out the environment qubit breaks the exact grading of the reduced
channel, since |0><0| on the environment mixes degrees 0 and 2, which
leaves noise only an indirect route to generic statistics.

The last part scans circuit depth with the default noise rates.
"""

import numpy as np

from dqchaos.circuits import build_chaotic_circuit, build_ff_circuit
from dqchaos.ensembles import majorana_gammas
from dqchaos.noise import NoiseModel, noisy_superoperator
from dqchaos.pipeline import ExperimentConfig, crossover_scan


def majorana_degree_superoperator(n):
    """Diagonal (in the Majorana-monomial basis) grading D, as a row-major superoperator."""
    g = majorana_gammas(n)
    d = 2**n
    basis, degree = [], []
    for mask in range(4**n):
        op = np.eye(d, dtype=complex)
        for k in range(2 * n):
            if mask >> k & 1:
                op = op @ g[k]
        basis.append(op.reshape(-1) / np.sqrt(d))
        degree.append(bin(mask).count("1"))
    b = np.array(basis).T
    return b @ np.diag(degree) @ b.conj().T


model = NoiseModel(e_p_1q=0.001, e_p_2q=0.01)
for n, e, what in ((4, 0, "whole circuit"), (3, 1, "reduced channel")):
    D = majorana_degree_superoperator(n)
    for name, builder in (("free fermion", build_ff_circuit), ("chaotic", build_chaotic_circuit)):
        lam = noisy_superoperator(builder(n + e, 6, seed=1), n, e, model)
        print(f"{what:>15}, {name:>12}: ||[Lambda, D]|| = {np.abs(lam @ D - D @ lam).max():.1e}")

cfg = ExperimentConfig(family="ff", n=3, e=1, size=40, seed=0).replace(**{"noise.enabled": True})
for row in crossover_scan(cfg, [2, 5, 10, 20]):
    s = row.summary
    print(f"T = {row.T:>2}: <r> = {s.mean_r:.4f} +- {s.stderr_r:.4f}")
