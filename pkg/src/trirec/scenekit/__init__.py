from .camera import (COND_DIM, CameraPose, look_at_origin, orbit_camera,
                     ray_directions, sample_camera)
from .dataset import Dataset, DatasetConfig, build_dataset
from .render import (BACKGROUND_RGB, HIT_EPS, MAX_STEPS, SCENE_RADIUS,
                     RenderError, ViewRecord, render_ground_truth)
from .sdf import (CUBE_MARGIN, Primitive, SceneSpec, make_scene, pack_scene,
                  primitive_distances, scene_albedo, scene_normal, scene_sdf,
                  sdf_eval)

__all__ = [
    "COND_DIM", "CameraPose", "look_at_origin", "orbit_camera",
    "ray_directions", "sample_camera", "Dataset", "DatasetConfig",
    "build_dataset", "BACKGROUND_RGB", "HIT_EPS", "MAX_STEPS", "SCENE_RADIUS",
    "RenderError", "ViewRecord", "render_ground_truth", "CUBE_MARGIN",
    "Primitive", "SceneSpec", "make_scene", "pack_scene",
    "primitive_distances", "scene_albedo", "scene_normal", "scene_sdf",
    "sdf_eval",
]
