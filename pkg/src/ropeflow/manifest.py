"""Run manifests: enough resolved state to reproduce a run byte for byte.

Every CLI command writes one next to its outputs, listing the resolved
configuration, the seeds, and a sha256 per input/output file.  Identical
runs produce identical manifests except for the wall-clock field.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_paths(paths):
    out = {}
    for p in sorted(str(p) for p in paths):
        path = Path(p)
        out[path.name if not path.is_absolute() else str(path)] = sha256_file(path)
    return out


def write_manifest(path, command, config, seeds, inputs=(), outputs=(), extra=None):
    """Write the manifest JSON; returns the manifest dict."""
    manifest = {
        "command": command,
        "config": config,
        "seeds": list(int(s) for s in seeds),
        "inputs": _hash_paths(inputs),
        "outputs": _hash_paths(outputs),
        "wall_clock": time.time(),
    }
    if extra:
        manifest["extra"] = extra
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest
