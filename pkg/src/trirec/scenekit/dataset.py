"""Dataset generation and loading.

A dataset directory holds ``manifest.json`` plus one folder per object with
conditioning views first (indices 0..cond_views-1) and supervision views
after. Regeneration from the same config is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io
from .camera import sample_camera
from .render import ViewRecord, render_ground_truth
from .sdf import SceneSpec, make_scene

MANIFEST_NAME = "manifest.json"
FORMAT_TAG = "trirec-dataset-v1"


@dataclass(frozen=True)
class DatasetConfig:
    objects: int = 8
    views: int = 8          # supervision views per object
    cond_views: int = 4     # conditioning views per object
    resolution: int = 32
    seed: int = 0
    max_primitives: int = 4
    radius_lo: float = 1.5
    radius_hi: float = 2.2
    fov_deg: float = 40.0

    def __post_init__(self):
        if self.objects < 1:
            raise ValueError("objects must be >= 1")
        if self.views < 1 or self.cond_views < 1:
            raise ValueError("need at least one view of each role")


def _derived_seed(*parts: int) -> int:
    ss = np.random.SeedSequence(list(parts))
    return int(ss.generate_state(1)[0])


def object_seeds(config: DatasetConfig) -> list[int]:
    return [_derived_seed(config.seed, i) for i in range(config.objects)]


def object_id(scene_seed: int) -> str:
    return f"obj_{scene_seed:010d}"


def view_camera(config: DatasetConfig, scene_seed: int, view_index: int):
    cam_seed = _derived_seed(scene_seed, 7, view_index)
    return sample_camera(cam_seed, config.radius_lo, config.radius_hi,
                         config.fov_deg)


def build_dataset(config: DatasetConfig, out_dir, force: bool = False) -> Path:
    """Generate all objects and views under ``out_dir``; returns the path."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise FileExistsError(
                f"{out} is not empty; pass force=True to overwrite")
    out.mkdir(parents=True, exist_ok=True)

    total_views = config.cond_views + config.views
    objects = []
    hasher = hashlib.sha256()
    for scene_seed in object_seeds(config):
        oid = object_id(scene_seed)
        obj_dir = out / oid
        obj_dir.mkdir(exist_ok=True)
        scene = make_scene(scene_seed, config.max_primitives)
        names = []
        for k in range(total_views):
            camera = view_camera(config, scene_seed, k)
            view = render_ground_truth(scene, camera, config.resolution)
            names.extend(io.write_view(obj_dir, k, view))
        for name in sorted(names):
            hasher.update(name.encode())
            hasher.update((obj_dir / name).read_bytes())
        objects.append({"id": oid, "scene_seed": scene_seed})

    manifest = {
        "format": FORMAT_TAG,
        "config": asdict(config),
        "objects": objects,
        "content_hash": hasher.hexdigest(),
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2,
                                                sort_keys=True) + "\n")
    return out


class Dataset:
    """Read access to a generated dataset directory."""

    def __init__(self, root):
        self.root = Path(root)
        manifest_path = self.root / MANIFEST_NAME
        if not manifest_path.exists():
            raise FileNotFoundError(f"no {MANIFEST_NAME} under {self.root}")
        self.manifest = json.loads(manifest_path.read_text())
        if self.manifest.get("format") != FORMAT_TAG:
            raise ValueError("unrecognized dataset format")
        self.config = DatasetConfig(**self.manifest["config"])

    @property
    def object_ids(self) -> list[str]:
        return [o["id"] for o in self.manifest["objects"]]

    @property
    def content_hash(self) -> str:
        return self.manifest["content_hash"]

    def scene_seed(self, oid: str) -> int:
        for o in self.manifest["objects"]:
            if o["id"] == oid:
                return o["scene_seed"]
        raise KeyError(oid)

    def scene(self, oid: str) -> SceneSpec:
        return make_scene(self.scene_seed(oid), self.config.max_primitives)

    def view(self, oid: str, index: int) -> ViewRecord:
        return io.read_view(self.root / oid, index)

    def cond_views(self, oid: str) -> list[ViewRecord]:
        return [self.view(oid, k) for k in range(self.config.cond_views)]

    def supervision_views(self, oid: str) -> list[ViewRecord]:
        start = self.config.cond_views
        return [self.view(oid, start + k) for k in range(self.config.views)]
