"""Shared loader for the demos: the banknote file when present, else the surrogate."""

from ffoneclass.data import default_data_path, load_banknote, make_splits, synthetic_banknote_like
from ffoneclass.experiments import PreparedData


def demo_data():
    path = default_data_path()
    if path.is_file():
        ds, source = load_banknote(path), str(path)
    else:
        ds, source = synthetic_banknote_like(), "surrogate (banknote file not found)"
    print(f"data: {source}, {len(ds)} rows, {int(ds.labels.sum())} counterfeit")
    return ds, PreparedData.from_splits(ds, make_splits(ds))
