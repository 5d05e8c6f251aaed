# # Mistake bounds in the realizable case
#
# The feedback is the true acceptance probability up to eps/3 noise.  The
# learner only updates when its prediction is more than 2eps/3 from the
# feedback, and it errs by more than eps on a bounded number of rounds.

# %%
from qonline import learn
from qonline.harness import ExperimentConfig, run_experiment

# %%
for variant in learn.VARIANTS:
    for eps in (0.2, 0.1):
        cfg = ExperimentConfig(kind="mistake", n=2, T=20000, epsilon=eps, feedback="noisy",
                               variant=variant, seed=0)
        s = run_experiment(cfg).summary
        print(f"{variant} eps={eps}: mistakes {s['mistakes']:4d}, updates {s['updates']:4d}, "
              f"bound {s['mistake_bound']:8.1f}")

# %% [markdown]
# Every mistake round is also an update round: a prediction more than eps
# from the truth is more than 2eps/3 from feedback that is within eps/3.

# %%
res = run_experiment(ExperimentConfig(kind="mistake", n=1, T=2000, epsilon=0.2, feedback="noisy", seed=3))
print("mistakes within updates:", res.summary["mistakes_within_updates"])
first = [r.t for r in res.records if r.mistake][:10]
print("first mistake rounds:", first)
