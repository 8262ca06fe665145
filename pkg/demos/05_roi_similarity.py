"""
Comparing ROI beta vectors
==========================

For every decision a model can report a 14-region vector of activation
betas. Pearson and cosine similarity capture pattern agreement; MSE, RMSE,
MAE and Euclidean distance capture magnitude. Both views are averaged over
decisions.
"""

from cogeval import data
from cogeval.roi import cosine, magnitude_errors, pearson, summarize, synthetic_reference

step1, step2 = data.sample_roi_series()
print("stage 1 vs stage 2: pearson %.4f cosine %.4f" % (pearson(step1.vector, step2.vector),
                                                      cosine(step1.vector, step2.vector)))
print(magnitude_errors(step1.vector, step2.vector))

# A noisy stand-in for human data built from the two stage templates
templates = [step1.vector, step2.vector]
human = synthetic_reference(templates, n_trials=150, noise=0.3, seed=0)
for noise in (0.1, 0.3, 1.0):
    model = synthetic_reference(templates, n_trials=150, noise=noise, seed=1)
    s = summarize(model, human)
    print(f"model noise {noise:.1f}: pearson {s.mean_pearson:.3f} cosine {s.mean_cosine:.3f} rmse {s.mean_rmse:.3f}")
