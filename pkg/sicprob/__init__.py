"""Quantum states as SIC probability vectors, and dynamics without amplitudes.

A SIC turns every quantum state into a probability vector. sicprob finds
SICs numerically, converts between density matrices and probability
vectors, evaluates the Born rule from probabilities alone and runs
circuits in both representations side by side.

Example:
    import sicprob
    sic = sicprob.orbit(sicprob.builtin_fiducial(2))
    rho = sicprob.random_density(2, seed=0)
    p = sicprob.state_to_probs(rho, sic)
    r = sicprob.cond_prob_matrix(sicprob.basis_povm(2), sic)
    outcome = sicprob.born_urgleichung(p, r, 2)
"""

from .__version__ import __version__  # noqa: F401
from .dualtrack import (  # noqa: F401
    Circuit,
    CircuitStep,
    TrackReport,
    TransferMap,
    evolve_probs,
    evolve_state,
    rotate_sic,
    run_dual,
    transfer_matrix,
)
from .errors import SicProbError  # noqa: F401
from .quantum import (  # noqa: F401
    DensityMatrix,
    OutcomeDistribution,
    Povm,
    Unitary,
    basis_povm,
    born_direct,
    luders_update,
    random_density,
    random_unitary,
    validate_density,
    validate_povm,
    validate_unitary,
)
from .search import SearchConfig, SearchResult, search  # noqa: F401
from .sic import (  # noqa: F401
    Fiducial,
    SicStructure,
    builtin_fiducial,
    frame_potential,
    orbit,
    verify_sic,
    wh_displacements,
)
from .urgleichung import (  # noqa: F401
    CondProbMatrix,
    MicStructure,
    ProbVector,
    born_urgleichung,
    classical_ltp,
    cond_prob_matrix,
    ltp_deviation,
    mic_duals,
    probs_to_state,
    state_to_probs,
)
