# # The postselection learner
#
# The hypothesis is a k-fold register state.  Each round the learner measures
# an amplified operator E* that accepts when the empirical mean of k copies
# of E lies within eps/2 of the feedback, then postselects on acceptance if
# the acceptance probability was below 1 - eps/6.

# %%
import numpy as np

from qonline import postsel
from qonline.harness import ExperimentConfig, repeated_measurement_probe, run_experiment
from qonline.qmodel import born_probability, make_rng, random_density, random_measurement

# %% [markdown]
# ## The amplified measurement is diagonal in the eigenbasis of E^{(x)k}

# %%
rng = make_rng(0)
e = random_measurement(1, rng)
amp = postsel.AmplifiedMeasurement(e, 0.6, 0.5, 3)
print("accepted counts", postsel.accepted_counts(0.6, 0.5, 3))
print("eigenvalues of E*", np.round(np.sort(np.linalg.eigvalsh(amp.matrix())), 4))

# %% [markdown]
# ## Repeating one measurement
#
# Acceptance never decreases and updates stop once a round is good.

# %%
rho = random_density(1, rng)
cfg = postsel.PostselConfig(0.5, 4)
flags, accs = repeated_measurement_probe(rho, e, cfg, 8)
for i, (f, a) in enumerate(zip(flags, accs)):
    print(f"round {i}: acceptance {a:.4f} updated {f}")
print("truth", born_probability(e, rho))

# %% [markdown]
# ## Random streams
#
# On every good round the single-register prediction is within 2eps/3 of
# the feedback.  At k=2 and eps=0.3 no count lies in the acceptance window for
# some feedback values, so E* is zero and the round is skipped.

# %%
for k, eps in ((2, 0.3), (4, 0.5), (6, 0.3)):
    s = run_experiment(ExperimentConfig(kind="postselect", n=1, T=200, k=k, epsilon=eps, seed=1)).summary
    print(f"k={k} eps={eps}: updates {s['updates']}, good rounds {s['good_rounds']}, "
          f"degenerate {s['degenerate_rounds']}, max good gap {s['max_good_gap']:.3f} "
          f"<= {s['good_gap_bound']:.3f}")
