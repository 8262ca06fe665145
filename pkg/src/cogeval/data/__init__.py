"""Bundled fixtures: the Centaur scoring bundle, an example trial scheme,
example ROI vectors and the task instruction texts used for adapters."""

from importlib import resources


def path(name: str):
    return resources.files(__name__) / name


def read_text(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def centaur_bundle():
    from cogeval.mcg import bundle_from_dict
    import json

    return bundle_from_dict(json.loads(read_text("centaur_bundle.json")))


def sample_schemes():
    from cogeval.twostep import loads_schemes

    return loads_schemes(read_text("sample_scheme.json"))


def sample_roi_series():
    from cogeval.roi import loads_roi_series

    return loads_roi_series(read_text("sample_roi_trial1.jsonl"))
