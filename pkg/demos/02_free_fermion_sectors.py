"""Symmetry sectors of a free-fermion channel.

A number-conserving free-fermion unitary on 5 qubits, traced down to 4,
gives a channel that commutes with the weak charge Q = (Q_i - Q_j)/2 acting
on operators. Its 256 eigenvalues split into sectors of size
1, 8, 28, 56, 70, 56, 28, 8, 1, and the steady state lives in the q = 0
block. Spacing ratios must be taken within one block; mixing blocks
superimposes independent spectra and pushes the statistics toward
the Poisson values.
"""

import numpy as np

from dqchaos.channels import assign_sectors, diagonalize, extract_kraus, steady_state_sector, to_superoperator
from dqchaos.ensembles import build_ff_unitary
from dqchaos.stats import CsrSample, channel_csr, summarize

lam = to_superoperator(extract_kraus(build_ff_unitary(5, seed=0), 4, 1))
spectrum = diagonalize(lam)
sectors = assign_sectors(spectrum, 4)
print("sector sizes:", {q: sectors.sizes()[q] for q in range(-4, 5)})

steady = steady_state_sector(sectors, spectrum)
print("steady-state block:", len(steady), "eigenvalues, closest to 1:", np.min(np.abs(steady - 1)))

# pool 300 channels, once inside the steady-state block and once ignoring sectors
inside, pooled = [], []
for seed in range(300):
    lam = to_superoperator(extract_kraus(build_ff_unitary(5, seed=seed), 4, 1))
    spectrum = diagonalize(lam)
    inside.append(channel_csr(steady_state_sector(assign_sectors(spectrum, 4), spectrum)))
    pooled.append(channel_csr(spectrum.eigenvalues))
for name, parts in (("q = 0 block", inside), ("all sectors", pooled)):
    s = summarize(CsrSample.concatenate(parts))
    print(f"{name:>12}: <r> = {s.mean_r:.4f}, <-cos theta> = {s.mean_minus_cos_theta:.4f}")
