"""File formats for dataset views.

* ``rgb_{k}.png``  8-bit RGB.
* ``geo_{k}.pfm``  one grayscale PFM whose rows stack five float32 planes
  top to bottom: depth, nx, ny, nz, mask (each H rows).
* ``cam_{k}.txt``  13 lines: row-major rotation (9), position (3), fov (1),
  decimal with 9 significant digits.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .camera import CameraPose
from .render import ViewRecord

GEO_PLANES = 5


def write_png(path, rgb: np.ndarray) -> None:
    img = np.clip(np.round(np.asarray(rgb, dtype=np.float64) * 255.0), 0, 255)
    Image.fromarray(img.astype(np.uint8), mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def write_pfm(path, planes: np.ndarray) -> None:
    """Write a stack of float planes (P, H, W) as one grayscale PFM."""
    planes = np.asarray(planes, dtype=np.float32)
    p, h, w = planes.shape
    data = planes.reshape(p * h, w)
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {p * h}\n".encode("ascii"))
        f.write(b"-1.0\n")  # negative scale = little endian
        f.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        if f.readline().strip() != b"Pf":
            raise ValueError("not a grayscale PFM file")
        w, h = (int(v) for v in f.readline().split())
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(), dtype=dtype).reshape(h, w)
    rows = np.flipud(data).astype(np.float32)
    if h % GEO_PLANES:
        raise ValueError("geometry PFM height is not a multiple of 5")
    return rows.reshape(GEO_PLANES, h // GEO_PLANES, w)


def write_camera_txt(path, camera: CameraPose) -> None:
    values = list(camera.rotation.reshape(-1)) + list(camera.position)
    values.append(camera.fov_deg)
    with open(path, "w") as f:
        for v in values:
            f.write(f"{v:.9g}\n")


def read_camera_txt(path) -> CameraPose:
    with open(path) as f:
        values = [float(line) for line in f if line.strip()]
    if len(values) != 13:
        raise ValueError(f"camera file must hold 13 values, got {len(values)}")
    rot = np.array(values[:9]).reshape(3, 3)
    return CameraPose(rotation=rot, position=np.array(values[9:12]),
                      fov_deg=values[12])


def write_view(dirpath, index: int, view: ViewRecord) -> list[str]:
    """Write one view's three files; returns the file names written."""
    names = [f"rgb_{index}.png", f"geo_{index}.pfm", f"cam_{index}.txt"]
    write_png(dirpath / names[0], view.rgb)
    planes = np.stack([
        view.depth,
        view.normal[..., 0], view.normal[..., 1], view.normal[..., 2],
        view.mask,
    ])
    write_pfm(dirpath / names[1], planes)
    write_camera_txt(dirpath / names[2], view.camera)
    return names


def read_view(dirpath, index: int) -> ViewRecord:
    camera = read_camera_txt(dirpath / f"cam_{index}.txt")
    rgb = read_png(dirpath / f"rgb_{index}.png")
    planes = read_pfm(dirpath / f"geo_{index}.pfm")
    return ViewRecord(
        rgb=rgb,
        depth=planes[0],
        normal=np.stack([planes[1], planes[2], planes[3]], axis=-1),
        mask=planes[4],
        camera=camera,
    )
