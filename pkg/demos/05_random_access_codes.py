# # Random access codes and the regret lower bound
#
# A learner with small regret cannot be beaten by an adversary that labels
# every bit against the learner's prediction.  Run against a random access
# code, this forces k/2 <= p k + 2 sqrt(log 2 k n), so codes with small decoding
# error p need many qubits.

# %%
from qonline import bounds
from qonline.harness import ExperimentConfig, fixture_codes, run_experiment
from qonline.qmodel import make_rng

# %%
for name, code in fixture_codes().items():
    r = bounds.rac_adversary_run(code)
    print(f"{name}: y={r.y} p_emp={r.p_emp:.3f} learner loss {r.learner_loss:.3f} inequality {r.inequality_ok}")

# %%
code = bounds.random_code(2, 4, make_rng(1))
print(bounds.rac_adversary_run(code))

# %% [markdown]
# ## Qubits needed per encoded bit

# %%
for p in (0.0, 0.1, 0.25, 0.4):
    print(f"p={p}: n >= {bounds.rac_min_qubits(100, p):.2f} qubits for k=100")
print("serial encoding of a 1-qubit, eps=0.5 learner:", round(bounds.serial_encoding_max_bits(1, 0.5), 3), "bits")

# %%
res = run_experiment(ExperimentConfig(kind="rac", n=1, k=3, instances=100, seed=0))
print(res.summary)
