"""Complex spacing ratios of three reference ensembles.

Poisson points fill the disk evenly (<r> = 2/3, <-cos theta> = 0). Ginibre
matrices repel their eigenvalues, which empties the centre of the ratio
distribution. Random channels obtained by tracing one qubit out of a Haar
unitary sit in between with their own reference values.

Runs in about a minute.
"""

import numpy as np

from dqchaos.channels import extract_kraus, to_superoperator
from dqchaos.ensembles import sample_cue, sample_ginue, sample_poisson_spectrum
from dqchaos.stats import CsrSample, channel_csr, compute_csr, histogram, summarize


def describe(name, csr):
    s = summarize(csr)
    h = histogram(csr)
    print(f"{name:>10}: <r> = {s.mean_r:.4f} +- {s.stderr_r:.4f}, "
          f"<-cos theta> = {s.mean_minus_cos_theta:.4f}, "
          f"density at z=0: {h.density_at(0j):.3f}  ({s.n} ratios)")


# independent points: no level repulsion
poisson = CsrSample.concatenate(compute_csr(sample_poisson_spectrum(4096, seed)) for seed in range(8))
describe("Poisson", poisson)

# dense non-Hermitian random matrices: the ratio density vanishes at the origin
ginue = CsrSample.concatenate(compute_csr(np.linalg.eigvals(sample_ginue(512, seed))) for seed in range(8))
describe("GinUE", ginue)

# channels on n=4 system qubits with one environment qubit; eigenvalues near the
# real axis and the lower conjugate half are dropped
samples = []
for seed in range(200):
    kraus = extract_kraus(sample_cue(32, seed), 4, 1)
    samples.append(channel_csr(np.linalg.eigvals(to_superoperator(kraus))))
describe("channels", CsrSample.concatenate(samples))
