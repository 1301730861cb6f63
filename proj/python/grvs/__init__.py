"""Python front end for the GRVS core.

Cameras and configs are plain dicts; images are float32 numpy arrays laid
out channels x height x width.
"""

import json

from ._grvs import ConfigError, GeometryError, IoError, NumericalError, ShapeError
from . import _grvs

__all__ = [
    "ConfigError", "GeometryError", "IoError", "NumericalError", "ShapeError",
    "depth_schedule", "project", "backproject", "look_at", "plane_warp_grid",
    "psnr", "ssim", "default_scene_config", "default_model_config",
    "sample_scene", "scene_cameras", "render", "parameter_count", "run_cli",
]

depth_schedule = _grvs.depth_schedule
psnr = _grvs.psnr
ssim = _grvs.ssim


def _dump(d):
    return json.dumps(d)


def project(camera, point):
    return tuple(_grvs.project(_dump(camera), list(point)))


def backproject(camera, u, v, z):
    return tuple(_grvs.backproject(_dump(camera), u, v, z))


def look_at(eye, target, fx, width, height):
    return json.loads(_grvs.look_at(list(eye), list(target), fx, width, height))


def plane_warp_grid(src, tgt, depth):
    return _grvs.plane_warp_grid(_dump(src), _dump(tgt), depth)


def default_scene_config(**overrides):
    c = json.loads(_grvs.default_scene_config())
    c.update(overrides)
    return c


def default_model_config(**overrides):
    c = json.loads(_grvs.default_model_config())
    c.update(overrides)
    return c


def sample_scene(seed, config=None):
    return json.loads(_grvs.sample_scene(seed, _dump(config or default_scene_config())))


def scene_cameras(seed, config=None):
    return [json.loads(c) for c in _grvs.scene_cameras(seed, _dump(config or default_scene_config()))]


def render(seed, camera, t, config=None):
    """Renders scene `seed` at frame t (1-based) from `camera`."""
    return _grvs.render(seed, _dump(config or default_scene_config()), _dump(camera), t)


def parameter_count(config=None):
    return _grvs.parameter_count(_dump(config or default_model_config()))


def run_cli(*args):
    """Runs a grvs subcommand in-process; returns (exit code, stdout, stderr)."""
    return _grvs.run_cli([str(a) for a in args])
