// pybind11 module _grvs. Configs and cameras cross the boundary as JSON
// strings; the grvs package converts them to and from dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "grvs/cli.hpp"
#include "grvs/dataset.hpp"
#include "grvs/errors.hpp"
#include "grvs/geometry.hpp"
#include "grvs/metrics.hpp"
#include "grvs/model.hpp"
#include "grvs/psv.hpp"
#include "grvs/scenes.hpp"

namespace py = pybind11;
using namespace grvs;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  FloatArray out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<uint8_t> to_mask(const py::object& m) {
  auto a = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>::ensure(m);
  if (!a) throw ShapeError("mask must be convertible to a uint8 array");
  return std::vector<uint8_t>(a.data(), a.data() + a.size());
}

Camera camera(const std::string& j) { return camera_from_json(nlohmann::json::parse(j)); }

py::dict render(uint64_t seed, const std::string& config_json, const std::string& camera_json,
                int t) {
  const SceneConfig c = SceneConfig::from_json(nlohmann::json::parse(config_json));
  const SceneSpec spec = sample_scene(seed, c);
  const RenderOutput r = rasterize(spec, c, camera(camera_json), t);
  py::array_t<float> depth({c.height, c.width});
  std::copy(r.depth.begin(), r.depth.end(), depth.mutable_data());
  py::array_t<uint8_t> mask({c.height, c.width});
  std::copy(r.dyn_mask.begin(), r.dyn_mask.end(), mask.mutable_data());
  py::dict out;
  out["frame"] = to_array(r.frame);
  out["depth"] = depth;
  out["dyn_mask"] = mask;
  return out;
}

}  // namespace

PYBIND11_MODULE(_grvs, m) {
  m.doc() = "GRVS core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("depth_schedule", [](double near, double far, int count) {
    return make_depth_schedule(near, far, count).depths;
  });
  m.def("project", [](const std::string& cam, std::array<double, 3> p) {
    const Projection r = project(camera(cam), Eigen::Vector3d(p[0], p[1], p[2]));
    return std::array<double, 3>{r.u, r.v, r.z};
  });
  m.def("backproject", [](const std::string& cam, double u, double v, double z) {
    const Eigen::Vector3d x = backproject(camera(cam), u, v, z);
    return std::array<double, 3>{x[0], x[1], x[2]};
  });
  m.def("look_at", [](std::array<double, 3> eye, std::array<double, 3> target, double fx,
                      int width, int height) {
    Camera c;
    c.intrinsics = {fx, fx, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
    c.pose = look_at(Eigen::Vector3d(eye.data()), Eigen::Vector3d(target.data()),
                     Eigen::Vector3d::UnitZ());
    return camera_to_json(c).dump();
  });
  m.def("plane_warp_grid", [](const std::string& src, const std::string& tgt, double depth) {
    const SamplingGrid g = plane_warp_grid(camera(src), camera(tgt), depth);
    py::array_t<double> u({g.height, g.width}), v({g.height, g.width});
    std::copy(g.u.begin(), g.u.end(), u.mutable_data());
    std::copy(g.v.begin(), g.v.end(), v.mutable_data());
    return py::make_tuple(u, v);
  });
  m.def("psnr", [](const FloatArray& a, const FloatArray& b, const py::object& mask) {
    if (mask.is_none()) return psnr(to_tensor(a), to_tensor(b));
    const auto m = to_mask(mask);
    return psnr(to_tensor(a), to_tensor(b), &m);
  }, py::arg("a"), py::arg("b"), py::arg("mask") = py::none());
  m.def("ssim", [](const FloatArray& a, const FloatArray& b, const py::object& mask) {
    if (mask.is_none()) return ssim(to_tensor(a), to_tensor(b));
    const auto m = to_mask(mask);
    return ssim(to_tensor(a), to_tensor(b), &m);
  }, py::arg("a"), py::arg("b"), py::arg("mask") = py::none());

  m.def("default_scene_config", [] { return SceneConfig{}.to_json().dump(); });
  m.def("default_model_config", [] { return ModelConfig{}.to_json().dump(); });
  m.def("sample_scene", [](uint64_t seed, const std::string& config) {
    return sample_scene(seed, SceneConfig::from_json(nlohmann::json::parse(config))).to_json().dump();
  });
  m.def("scene_cameras", [](uint64_t seed, const std::string& config) {
    const SceneConfig c = SceneConfig::from_json(nlohmann::json::parse(config));
    const SceneCameras cams = scene_cameras(sample_scene(seed, c), c);
    std::vector<std::string> out;
    for (const Camera& cam : cams.input) out.push_back(camera_to_json(cam).dump());
    return out;
  });
  m.def("render", &render, py::arg("seed"), py::arg("config"), py::arg("camera"), py::arg("t"));
  m.def("parameter_count", [](const std::string& config) {
    return GrvsModel(ModelConfig::from_json(nlohmann::json::parse(config))).parameter_count();
  });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    std::vector<std::string> argv{"grvs"};
    argv.insert(argv.end(), args.begin(), args.end());
    int code;
    {
      py::gil_scoped_release release;
      code = run_cli(argv, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
