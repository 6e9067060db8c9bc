import dataclasses
import json
import math
import re
from datetime import datetime, timezone
from enum import Enum
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd


# Save results and configs alongside each run


def object_to_dict(obj):
    if isinstance(obj, (bool, int, str, type(None))):
        return obj
    elif isinstance(obj, float):
        # JSON has no infinities or NaN.
        return obj if math.isfinite(obj) else None
    elif isinstance(obj, Enum):
        return obj.value
    elif isinstance(obj, np.generic):
        return object_to_dict(obj.item())
    elif isinstance(obj, np.ndarray):
        return [object_to_dict(item) for item in obj.tolist()]
    elif isinstance(obj, dict):
        return {str(k): object_to_dict(v) for k, v in obj.items() if not callable(v)}
    elif isinstance(obj, (list, tuple, range)):
        return [object_to_dict(item) for item in obj]
    elif hasattr(obj, "to_dict"):
        return object_to_dict(obj.to_dict())
    elif dataclasses.is_dataclass(obj):
        return object_to_dict({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    elif hasattr(obj, "__dict__"):  # for custom objects
        return object_to_dict({k: v for k, v in obj.__dict__.items() if not callable(v)})
    else:
        raise TypeError(f"Object of type {type(obj)} is not serializable to JSON")


def save_json(obj, file_path):
    with open(file_path, 'w') as f:
        json.dump(object_to_dict(obj), f, indent=4, sort_keys=True)
        f.write("\n")


# Function to save config to a JSON file
def save_config_to_file(config, file_path):
    save_json(config, file_path)


def save_table(rows, file_path):
    """Writes a list of row dicts (or a DataFrame) as CSV without the index."""
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    frame.to_csv(file_path, index=False)
    return frame


def save_metadata(file_path, **extra):
    """Sidecar with everything that changes between otherwise identical runs."""
    save_json({
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": get_version(),
        **extra,
    }, file_path)


# Get current package version
def get_version():
    # Read the version from setup.py when running from a checkout
    setup_py_path = Path(__file__).parent.parent.parent.parent
    setup_py_path = setup_py_path / 'setup.py'

    if setup_py_path.exists():
        content = setup_py_path.read_text()
        version_match = re.search(r"version\s*=\s*['\"]([^'\"]+)['\"]", content)
        if version_match:
            return version_match.group(1)
        raise ValueError(f"Version not found in {setup_py_path}")

    try:
        return metadata.version("trap-prisma")
    except metadata.PackageNotFoundError:
        raise FileNotFoundError(f"setup.py not found at {setup_py_path} and trap-prisma is not installed")
