# # Quantum union bound
#
# If each of k measurements accepts a state with probability at least
# 1 - eps, applying them in sequence accepts with probability at least
# 1 - 2 sqrt(k eps) and moves the state by at most 4 sqrt(k eps) in trace norm.

# %%
from qonline.harness import ExperimentConfig, near_accepting_instance, run_experiment
from qonline.postsel import union_bound_check
from qonline.qmodel import make_rng

# %%
rng = make_rng(0)
phi, ms = near_accepting_instance(2, 4, 0.02, rng)
for dilated in (False, True):
    r = union_bound_check(phi, ms, dilated=dilated)
    label = "dilation" if dilated else "Kraus sqrt(E)"
    print(f"{label}: success {r.success_prob:.5f}, trace distance {r.trace_dist:.5f}, bounds hold {r.bounds_ok}")
print("eps_max", r.eps_max, "k", r.k)

# %% [markdown]
# ## 200 random instances

# %%
res = run_experiment(ExperimentConfig(kind="union-bound", n=3, instances=200, seed=0))
print(res.summary)
worst = max(res.rows, key=lambda r: r[5] / r[9])
print("tightest disturbance ratio", worst[5] / worst[9])
