import copy
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))  # makes `import oracles` work

from safrlm.config import RunConfig

# small-but-complete configuration used across test modules; individual tests
# override what they care about
TINY_RAW = {
    "seed": 5,
    "data": {
        "d_text": 8,
        "d_audio": 8,
        "synthetic": {
            "train": {"n_records": 24, "l_text": [8, 8], "l_audio": [8, 8],
                      "seed": 21, "noise_sigma": 0.0},
            "val": {"n_records": 8, "l_text": [8, 8], "l_audio": [8, 8],
                    "seed": 22, "noise_sigma": 0.0},
            "test": {"n_records": 8, "l_text": [8, 8], "l_audio": [8, 8],
                     "seed": 23, "noise_sigma": 0.0},
        },
    },
    "conv": {"out_channels": 8},
    "xadjust": {"blocks_per_stage": 1, "heads": 2, "ff_width": 16, "dropout": 0.0},
    "heads": {"self_blocks": 1, "hidden": 16, "dropout": 0.0},
    "train": {"epochs": 3, "batch_size": 12, "learning_rate": 0.001},
}


def tiny_raw(**dotted) -> dict:
    raw = copy.deepcopy(TINY_RAW)
    for key, value in dotted.items():
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return raw


def tiny_config(**dotted) -> RunConfig:
    return RunConfig.from_dict(tiny_raw(**dotted))
