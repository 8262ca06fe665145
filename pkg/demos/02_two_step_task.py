"""
Generating two-step task sessions
=================================

Each trial offers two spaceships; one usually flies to the blue planet and
the other to the red planet. Aliens on each planet pay out with slowly
drifting probabilities. A session is a list of trial schemes that fixes
every transition and every payout in advance, so any player can be
replayed against exactly the same world.
"""

import numpy as np

from cogeval import data
from cogeval.twostep import SessionConfig, dumps_schemes, generate_schemes, play

config = SessionConfig(n_trials=150, seed=3)
schemes = generate_schemes(config)

print(dumps_schemes(schemes[:1]))

# The latent payout probabilities wander inside [0.25, 0.75]
walk = np.array([[s.probs[p][a] for p, a in [("blue", "D"), ("blue", "R"), ("red", "G"), ("red", "V")]]
                 for s in schemes])
print("min/max over the session:", walk.min().round(3), walk.max().round(3))
print("common transitions:", sum(s.is_common for s in schemes), "of", len(schemes))

# Replaying a choice against a stored scheme is deterministic
trial = data.sample_schemes()[0]
print(play(trial, "S", "D"))
