"""
Comparing decision-level likelihoods
====================================

Each model assigns a probability to every human decision. The mean
negative log-likelihood summarises the fit; Welch's t-test compares two
models decision by decision. A published baseline known only through its
mean and 95% interval can stand in for a raw sample.
"""

from cogeval.agents import AgentParams, replay_probabilities, run_agent
from cogeval.stats import BaselineSpec, compare_all, comparison_markdown, nll, nll_terms
from cogeval.twostep import SessionConfig, generate_schemes

schemes = generate_schemes(SessionConfig(n_trials=150, seed=8))

# A simulated "participant" and two candidate models scored on its choices
human = run_agent(AgentParams(0.4, 4.0, 0.6), schemes, seed=8)
candidates = {
    "matched": AgentParams(0.4, 4.0, 0.6),
    "pure MF": AgentParams(0.4, 4.0, 0.0),
}
probs = {name: replay_probabilities(p, human) for name, p in candidates.items()}
samples = {name: nll_terms(p) for name, p in probs.items()}
for name, p in probs.items():
    s = nll(p)
    print(f"{name:8s} mean NLL {s.mean_nll:.4f} +/- {s.ci95_halfwidth:.4f}")

baselines = {
    "coin flip": nll_terms([0.5] * 300),
    "published": BaselineSpec(mean=0.62, ci95_halfwidth=0.0113, n=300),
}
print(comparison_markdown(compare_all(samples, baselines)))
