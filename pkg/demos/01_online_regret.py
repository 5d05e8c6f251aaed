# # Online learning of a hidden quantum state: regret
#
# A learner keeps a density matrix and predicts the acceptance probability
# Tr(E omega) of each two-outcome measurement E.  After every round it sees
# the true probability and pays the absolute loss.  Matrix multiplicative
# weights (MMW) and follow-the-regularized-leader with the von Neumann entropy
# (RFTL) both predict Gibbs states of the gradient sum.

# %%
import math

import numpy as np

from qonline import learn, spectra
from qonline.harness import ExperimentConfig, adaptive_adversary_measurement, run_experiment
from qonline.loss import LossSpec
from qonline.qmodel import born_probability, make_rng, random_density, random_measurement

# %% [markdown]
# ## One round by hand
#
# The learner starts maximally mixed, so its first prediction is the mean
# eigenvalue of E.

# %%
rng = make_rng(0)
n, T = 2, 400
rho = random_density(n, rng)
eta = learn.default_eta("mmw", T, n)
state = learn.initial_state(n, eta, 1.0, "mmw")
e = random_measurement(n, rng)
b = born_probability(e, rho)
print("prediction", born_probability(e, state.iterate), "truth", b)
g = learn.gradient(LossSpec("L1", b), e, state.iterate)
state = learn.update(state, g)
print("iterate after one step\n", np.round(state.iterate, 4))

# %% [markdown]
# ## A full run against the worst-case adaptive adversary
#
# The adaptive adversary picks the projector onto the positive part of
# omega - rho, which separates the two states by half their trace distance.

# %%
for variant in learn.VARIANTS:
    cfg = ExperimentConfig(kind="regret", n=n, T=T, variant=variant, adversary="adaptive", seed=1)
    s = run_experiment(cfg).summary
    print(f"{variant}: regret {s['regret']:.3f} <= bound {s['regret_bound']:.3f}: {s['passed']}")

# %% [markdown]
# ## Regret grows like sqrt(T)

# %%
for horizon in (100, 400, 1600, 6400):
    s = run_experiment(ExperimentConfig(kind="regret", n=1, T=horizon, seed=2)).summary
    print(f"T={horizon:5d} regret {s['regret']:7.3f} bound {s['regret_bound']:7.3f} "
          f"ratio {s['regret'] / math.sqrt(horizon):.3f}")

# %% [markdown]
# ## The two learners coincide
#
# With eta_RFTL = eta_MMW / L they exponentiate the same matrix.

# %%
lip = 2.0
mmw = learn.initial_state(n, 0.3, lip, "mmw")
rftl = learn.initial_state(n, 0.3 / lip, lip, "rftl")
for _ in range(100):
    e = adaptive_adversary_measurement(mmw.iterate, rho)
    g = learn.gradient(LossSpec("L2", born_probability(e, rho)), e, mmw.iterate)
    mmw, rftl = learn.update(mmw, g), learn.update(rftl, g)
print("max entrywise difference", np.abs(mmw.iterate - rftl.iterate).max())
print("trace distance to hidden state", 0.5 * spectra.trace_norm(mmw.iterate - rho))
