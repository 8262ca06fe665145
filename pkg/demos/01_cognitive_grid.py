"""
Scoring a model on the Minimal Cognitive Grid
=============================================

A bundle lists the design constraints of a model (with weights and a
structural/functional flag), its generality across five domains and its
behavioural match to people. Scoring it gives the structurality index,
the generality score, the performance match and their weighted blend.
"""

from cogeval import data
from cogeval.mcg import bundle_from_dict, display, mcg_tables, score_bundle

bundle = data.centaur_bundle()
result = score_bundle(bundle)

for table in mcg_tables(result):
    print(table.title)
    for row in table.rows:
        print("   ", row[0], *[v if isinstance(v, str) else display(v) for v in row[1:]])
    print()

# Every number above is also available at full precision
print("structurality index", result.fsr.normalized)
print("plausibility       ", result.score)

# Flipping one more constraint to "structural" moves the index a lot,
# because the raw ratio F/(S + eps) is steep for small S
raw = {
    "constraints": [
        {"id": "C1", "weight": "1/3", "structural": False},
        {"id": "C2", "weight": "1/3", "structural": True},
        {"id": "C3", "weight": "1/6", "structural": False},
        {"id": "C4", "weight": "1/6", "structural": True},
    ],
    "generality": {"quantitative": 1, "fluid": 1, "visual": 0, "language": 1, "sensorimotor": 0},
    "performance": {"nll_deltas": [0.4998], "error_indicators": [1]},
}
alt = score_bundle(bundle_from_dict(raw))
print("with C2 structural ", display(alt.fsr.normalized), "->", display(alt.score))
