"""Training checkpoint: one zip holding the agent's five network blobs,
optimizer and temperature state, the replay buffer, environment and partner
snapshots, all RNG states and the full config. Enough to resume a run
bit-exactly or to evaluate a policy standalone.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .sac import ReplayBuffer, SacAgent

CHECKPOINT_NAME = "checkpoint.zip"
FORMAT_VERSION = 1


def save_checkpoint(path, *, agent: SacAgent, buffer: ReplayBuffer | None,
                    config_dict: dict, config_hash: str, progress: dict,
                    env_state: dict | None = None,
                    partner_state: dict | None = None,
                    rng_states: dict | None = None) -> None:
    path = Path(path)
    tmp = path.with_suffix(".tmp")
    manifest = {
        "version": FORMAT_VERSION,
        "config": config_dict,
        "config_hash": config_hash,
        "progress": progress,
    }
    with zipfile.ZipFile(tmp, "w", zipfile.ZIP_STORED) as z:
        z.writestr("manifest.json", json.dumps(manifest, sort_keys=True))
        for name, blob in agent.to_blobs().items():
            z.writestr("agent/" + name, blob)
        if buffer is not None:
            buf = io.BytesIO()
            np.savez(buf, **buffer.state_arrays())
            z.writestr("buffer.npz", buf.getvalue())
        if env_state is not None:
            z.writestr("env_state.json", json.dumps(env_state))
        if partner_state is not None:
            z.writestr("partner_state.json", json.dumps(partner_state))
        if rng_states is not None:
            z.writestr("rng.json", json.dumps(rng_states))
    tmp.replace(path)


def load_checkpoint(path) -> dict:
    """Returns manifest plus whichever state pieces the checkpoint holds."""
    out = {}
    with zipfile.ZipFile(path) as z:
        names = set(z.namelist())
        manifest = json.loads(z.read("manifest.json"))
        if manifest.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {manifest.get('version')}")
        out["manifest"] = manifest
        blobs = {n[len("agent/"):]: z.read(n) for n in names if n.startswith("agent/")}
        out["agent"] = SacAgent.from_blobs(blobs)
        if "buffer.npz" in names:
            with np.load(io.BytesIO(z.read("buffer.npz"))) as npz:
                out["buffer_arrays"] = {k: npz[k] for k in npz.files}
        for key, name in (("env_state", "env_state.json"),
                          ("partner_state", "partner_state.json"),
                          ("rng_states", "rng.json")):
            if name in names:
                out[key] = json.loads(z.read(name))
    return out
