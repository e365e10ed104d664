"""Example code for using sicprob

First, install this library. You can either use pip or poetry (recommended).

Then run this script, with

```bash
# if you used pip
python3 scripts/example.py
# if you used poetry
poetry run python3 scripts/example.py
```
"""

import numpy as np

import sicprob

# a SIC in dimension 2, from the built-in fiducial
sic = sicprob.orbit(sicprob.builtin_fiducial(2))

# a state, written as the 4 probabilities of the SIC outcomes
rho = sicprob.random_density(2, seed=0)
p = sicprob.state_to_probs(rho, sic)
print("SIC probabilities:", p.entries)

# the Born rule for a measurement in the computational basis,
# computed from the probabilities alone
r = sicprob.cond_prob_matrix(sicprob.basis_povm(2), sic)
print("quantum:  ", sicprob.born_urgleichung(p, r, 2).entries)
print("classical:", sicprob.classical_ltp(p, r).entries)
print("direct:   ", sicprob.born_direct(rho, sicprob.basis_povm(2)).entries)

# run a circuit on density matrices and on probability vectors
hadamard = sicprob.validate_unitary(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
circuit = sicprob.Circuit(
    dim=2,
    initial=rho,
    steps=(sicprob.CircuitStep(hadamard, label="H"),),
    final_measurement="sic",
)
report = sicprob.run_dual(circuit, sic)
print("tracks disagree by", report.max_abs_deviation)

# search for a SIC in dimension 4, and save it
from sicprob import codec
result = sicprob.search(sicprob.SearchConfig(dim=4, seed=0), jobs=2)
if result.found:
    codec.save(result.fiducial, "fiducial-d4.json")
