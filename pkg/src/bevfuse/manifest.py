"""Run manifests: every output directory records exactly how it was made."""

import hashlib
import json
import os
from datetime import datetime, timezone

from . import __version__
from .config import config_to_dict

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


def config_hash(cfg):
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_manifest(out_dir, command, cfg, seed, artifacts, extra=None):
    """Write the directory's manifest; artifacts map names to relative paths.

    The full resolved config is embedded so a run is reproducible from the
    manifest alone.
    """
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "seed": seed,
        "code_version": __version__,
        "config_hash": config_hash(cfg),
        "config": config_to_dict(cfg),
        "artifacts": dict(artifacts),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_manifest(out_dir):
    with open(os.path.join(out_dir, MANIFEST_NAME), encoding="utf-8") as f:
        return json.load(f)
