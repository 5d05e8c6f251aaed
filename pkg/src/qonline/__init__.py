"""Online learning of quantum states.

Submodules: ``spectra`` (Hermitian linear algebra), ``qmodel`` (states and
measurements), ``loss``, ``learn`` (RFTL / MMW learners), ``postsel``
(postselection learner), ``bounds`` (encoding bounds) and ``harness``
(experiments and reporting).
"""

from . import bounds, harness, learn, loss, postsel, qmodel, spectra
from .errors import (CapacityError, ConsistencyError, ContractError, ConvergenceError, DegeneratePostselectionError,
                     DomainError, QOnlineError, ValidationError)
from .harness import ExperimentConfig, run_experiment
from .learn import LearnerState, initial_state, mistake_filtered_step, mmw_update, rftl_update
from .loss import FeedbackMode, LossSpec

__version__ = "0.1.0"
