"""Published per-method results used as fitting targets and sanity checks.

Values are fractions in [0, 1]. ``TUEBINGEN`` is the real-benchmark column;
``SYNTH_ORIGINAL`` holds the uniform and weighted AUROC plus accuracy
reported for the original synthetic dataset.
"""

METHOD_ORDER = ("ANM", "CGNN", "EMD", "IGCI", "LiNGAM", "PNL", "bQCD", "RECI", "SLOPE")

TUEBINGEN = {
    "auroc": {"ANM": 0.447, "CGNN": 0.667, "EMD": 0.693, "IGCI": 0.707, "LiNGAM": 0.500,
              "PNL": 0.413, "bQCD": 0.730, "RECI": 0.739, "SLOPE": 0.789},
    "accuracy": {"ANM": 0.397, "CGNN": 0.625, "EMD": 0.617, "IGCI": 0.651, "LiNGAM": 0.492,
                 "PNL": 0.445, "bQCD": 0.700, "RECI": 0.702, "SLOPE": 0.715},
}

SYNTH_ORIGINAL = {
    "auroc": {"ANM": 0.464, "CGNN": 0.689, "EMD": 0.784, "IGCI": 0.808, "LiNGAM": 0.496,
              "PNL": 0.471, "bQCD": 0.613, "RECI": 0.786, "SLOPE": 0.821},
    "weighted_auroc": {"ANM": 0.440, "CGNN": 0.671, "EMD": 0.703, "IGCI": 0.751,
                       "LiNGAM": 0.507, "PNL": 0.479, "bQCD": 0.635, "RECI": 0.749,
                       "SLOPE": 0.764},
    "accuracy": {"ANM": 0.410, "CGNN": 0.618, "EMD": 0.634, "IGCI": 0.685, "LiNGAM": 0.505,
                 "PNL": 0.482, "bQCD": 0.602, "RECI": 0.706, "SLOPE": 0.706},
}

SYNTHNN_TUEBINGEN = {"auroc": 0.714, "accuracy": 0.670}


def lookup(table: dict, metric: str, methods) -> list[float]:
    """Values of ``table[metric]`` for ``methods`` (case-insensitive names)."""
    col = {k.lower(): v for k, v in table[metric].items()}
    missing = [m for m in methods if m.lower() not in col]
    if missing:
        raise KeyError(f"no reference {metric} for {missing}")
    return [col[m.lower()] for m in methods]
