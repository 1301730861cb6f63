#include "grvs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "grvs/errors.hpp"
#include "grvs/image_io.hpp"

namespace grvs {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSequenceNames[3] = {"input", "target1", "target2"};

std::string numbered(const char* prefix, int n, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d%s", prefix, n, ext);
  return buf;
}

std::vector<uint8_t> quantize(const Tensor& frame) {
  auto src = frame.data();
  std::vector<uint8_t> out(src.size());
  for (size_t i = 0; i < src.size(); ++i) {
    out[i] = static_cast<uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

ImageU8 planar_to_image(const std::vector<uint8_t>& planar, int width, int height) {
  ImageU8 img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  const size_t hw = static_cast<size_t>(width * height);
  img.pixels.resize(3 * hw);
  for (size_t i = 0; i < hw; ++i) {
    for (size_t c = 0; c < 3; ++c) img.pixels[3 * i + c] = planar[c * hw + i];
  }
  return img;
}

std::vector<uint8_t> image_to_planar(const ImageU8& img) {
  const size_t hw = static_cast<size_t>(img.width * img.height);
  std::vector<uint8_t> out(3 * hw);
  for (size_t i = 0; i < hw; ++i) {
    for (size_t c = 0; c < 3; ++c) out[c * hw + i] = img.pixels[3 * i + c];
  }
  return out;
}

SequenceData render_sequence(const SceneSpec& spec, const SceneConfig& config,
                             const std::vector<Camera>& cameras, bool with_masks,
                             bool keep_depth, double& dmin, double& dmax) {
  SequenceData seq;
  seq.width = config.width;
  seq.height = config.height;
  seq.cameras = cameras;
  for (int t = 1; t <= spec.frames; ++t) {
    RenderOutput r = rasterize(spec, config, cameras[static_cast<size_t>(t - 1)], t);
    for (float d : r.depth) {
      dmin = std::min(dmin, static_cast<double>(d));
      dmax = std::max(dmax, static_cast<double>(d));
    }
    seq.frames.push_back(quantize(r.frame));
    if (with_masks) seq.masks.push_back(std::move(r.dyn_mask));
    if (keep_depth) seq.depth.push_back(std::move(r.depth));
  }
  return seq;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

Tensor SequenceData::frame(int t) const {
  if (t < 1 || t > size()) {
    throw ConfigError("frame " + std::to_string(t) + " outside [1, " + std::to_string(size()) + "]");
  }
  const auto& src = frames[static_cast<size_t>(t - 1)];
  std::vector<float> out(src.size());
  for (size_t i = 0; i < src.size(); ++i) out[i] = src[i] / 255.0f;
  return Tensor(Shape{3, height, width}, std::move(out));
}

const std::vector<uint8_t>& SequenceData::mask(int t) const {
  if (masks.empty()) throw ConfigError("sequence has no dynamic masks");
  if (t < 1 || t > static_cast<int>(masks.size())) {
    throw ConfigError("mask " + std::to_string(t) + " out of range");
  }
  return masks[static_cast<size_t>(t - 1)];
}

nlohmann::json SceneData::manifest() const {
  nlohmann::json cams;
  for (int s = 0; s < 3; ++s) {
    const SequenceData& seq = s == 0 ? input : targets[static_cast<size_t>(s - 1)];
    nlohmann::json list = nlohmann::json::array();
    for (const Camera& c : seq.cameras) list.push_back(camera_to_json(c));
    cams[kSequenceNames[s]] = list;
  }
  return {{"name", name},  {"seed", seed},         {"frames", frames()},
          {"width", input.width}, {"height", input.height}, {"near", near},
          {"far", far},    {"scene", spec.to_json()}, {"cameras", cams}};
}

SceneData render_scene_data(uint64_t seed, const SceneConfig& config, bool keep_depth) {
  SceneData scene;
  scene.seed = seed;
  scene.spec = sample_scene(seed, config);
  const SceneCameras cams = scene_cameras(scene.spec, config);
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  scene.input = render_sequence(scene.spec, config, cams.input, false, keep_depth, dmin, dmax);
  for (size_t j = 0; j < 2; ++j) {
    scene.targets[j] = render_sequence(scene.spec, config, cams.targets[j], true, keep_depth, dmin, dmax);
  }
  scene.near = 0.95 * dmin;
  scene.far = 1.05 * dmax;
  return scene;
}

Dataset make_dataset(std::vector<SceneData> scenes, const SceneConfig& config) {
  if (scenes.empty()) throw ConfigError("a dataset needs at least one scene");
  Dataset ds;
  ds.config = config;
  ds.near = std::numeric_limits<double>::infinity();
  for (const SceneData& s : scenes) {
    if (s.frames() != config.frames || s.input.width != config.width ||
        s.input.height != config.height) {
      throw ConfigError("scene " + s.name + " does not match the dataset resolution or length");
    }
    ds.near = std::min(ds.near, s.near);
    ds.far = std::max(ds.far, s.far);
  }
  ds.scenes = std::move(scenes);
  return ds;
}

fs::path export_dataset(const std::vector<uint64_t>& seeds, const SceneConfig& config,
                        const fs::path& out_dir, const ExportOptions& options) {
  config.validate();
  if (seeds.empty()) throw ConfigError("export needs at least one scene seed");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  nlohmann::json names = nlohmann::json::array();
  double near = std::numeric_limits<double>::infinity();
  double far = 0.0;
  for (size_t i = 0; i < seeds.size(); ++i) {
    SceneData scene = render_scene_data(seeds[i], config, true);
    scene.name = numbered("scene", static_cast<int>(i), "");
    const fs::path scene_dir = out_dir / scene.name;
    try {
      for (int s = 0; s < 3; ++s) {
        const SequenceData& seq = s == 0 ? scene.input : scene.targets[static_cast<size_t>(s - 1)];
        const fs::path dir = scene_dir / kSequenceNames[s];
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        for (int t = 1; t <= seq.size(); ++t) {
          const size_t k = static_cast<size_t>(t - 1);
          write_png(dir / numbered("frame", t, ".png"),
                    planar_to_image(seq.frames[k], seq.width, seq.height));
          if (options.float_sidecars) {
            write_f32(dir / numbered("frame", t, ".f32"), seq.frame(t).data());
          }
          if (s > 0) {
            ImageU8 mask{seq.width, seq.height, 1, seq.masks[k]};
            for (auto& m : mask.pixels) m = m ? 255 : 0;
            write_png(dir / numbered("mask", t, ".png"), mask);
            write_f32(dir / numbered("depth", t, ".f32"), seq.depth[k]);
          }
        }
      }
      write_json(scene_dir / "manifest.json", scene.manifest());
    } catch (const IoError& e) {
      throw IoError("scene " + scene.name + ": " + e.what());
    }
    names.push_back(scene.name);
    near = std::min(near, scene.near);
    far = std::max(far, scene.far);
  }
  const fs::path manifest = out_dir / "manifest.json";
  write_json(manifest, {{"format", "grvs-dataset-1"},
                        {"scenes", names},
                        {"near", near},
                        {"far", far},
                        {"width", config.width},
                        {"height", config.height},
                        {"frames", config.frames},
                        {"config", config.to_json()}});
  return manifest;
}

Dataset load_dataset(const fs::path& dir, bool load_depth) {
  const nlohmann::json top = read_json(dir / "manifest.json");
  SceneConfig config;
  std::vector<SceneData> scenes;
  try {
    config = SceneConfig::from_json(top.at("config"));
    for (const auto& jn : top.at("scenes")) {
      const std::string name = jn.get<std::string>();
      const fs::path scene_dir = dir / name;
      const nlohmann::json m = read_json(scene_dir / "manifest.json");
      SceneData scene;
      scene.name = name;
      scene.seed = m.at("seed").get<uint64_t>();
      scene.spec = SceneSpec::from_json(m.at("scene"));
      scene.near = m.at("near").get<double>();
      scene.far = m.at("far").get<double>();
      const int T = m.at("frames").get<int>();
      const int W = m.at("width").get<int>();
      const int H = m.at("height").get<int>();
      for (int s = 0; s < 3; ++s) {
        SequenceData& seq = s == 0 ? scene.input : scene.targets[static_cast<size_t>(s - 1)];
        seq.width = W;
        seq.height = H;
        for (const auto& jc : m.at("cameras").at(kSequenceNames[s])) {
          seq.cameras.push_back(camera_from_json(jc));
        }
        if (static_cast<int>(seq.cameras.size()) != T) {
          throw ConfigError(name + "/" + kSequenceNames[s] + ": camera count does not match T");
        }
        const fs::path sd = scene_dir / kSequenceNames[s];
        for (int t = 1; t <= T; ++t) {
          const ImageU8 img = read_png(sd / numbered("frame", t, ".png"));
          if (img.width != W || img.height != H || img.channels != 3) {
            throw ConfigError(name + ": frame " + std::to_string(t) + " has the wrong size");
          }
          seq.frames.push_back(image_to_planar(img));
          if (s > 0) {
            ImageU8 mask = read_png(sd / numbered("mask", t, ".png"));
            if (mask.width != W || mask.height != H || mask.channels != 1) {
              throw ConfigError(name + ": mask " + std::to_string(t) + " has the wrong size");
            }
            for (auto& v : mask.pixels) v = v >= 128 ? 1 : 0;
            seq.masks.push_back(std::move(mask.pixels));
            if (load_depth) {
              seq.depth.push_back(read_f32(sd / numbered("depth", t, ".f32"),
                                           static_cast<size_t>(W * H)));
            }
          }
        }
      }
      scenes.push_back(std::move(scene));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
  return make_dataset(std::move(scenes), config);
}

}  // namespace grvs
