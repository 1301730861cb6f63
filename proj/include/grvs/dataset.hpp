#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "grvs/geometry.hpp"
#include "grvs/scenes.hpp"
#include "grvs/tensor.hpp"

namespace grvs {

/// One camera's view of a scene. Frames are kept as 8-bit planar RGB
/// (3 x H x W) so that an in-memory render and a reloaded export are
/// bit-identical inputs to the model.
struct SequenceData {
  int width = 0;
  int height = 0;
  std::vector<Camera> cameras;
  std::vector<std::vector<uint8_t>> frames;
  std::vector<std::vector<uint8_t>> masks;  // H x W per frame; empty for the input camera
  std::vector<std::vector<float>> depth;    // H x W per frame; may be empty

  int size() const { return static_cast<int>(frames.size()); }
  /// 1-based frame as a 3 x H x W float tensor in [0, 1].
  Tensor frame(int t) const;
  const std::vector<uint8_t>& mask(int t) const;
};

struct SceneData {
  std::string name;
  uint64_t seed = 0;
  SceneSpec spec;
  double near = 0.0;  // rendered depth range widened by 5% on both sides
  double far = 0.0;
  SequenceData input;
  std::array<SequenceData, 2> targets;

  int frames() const { return input.size(); }
  nlohmann::json manifest() const;
};

struct Dataset {
  SceneConfig config;
  std::vector<SceneData> scenes;
  double near = 0.0;  // envelope of the per-scene bounds
  double far = 0.0;

  int width() const { return config.width; }
  int height() const { return config.height; }
  int frames() const { return config.frames; }
};

/// Samples scene `seed`, renders the input and both target sequences.
SceneData render_scene_data(uint64_t seed, const SceneConfig& config, bool keep_depth = false);

Dataset make_dataset(std::vector<SceneData> scenes, const SceneConfig& config);

struct ExportOptions {
  bool float_sidecars = false;  // also write frame_TTTTT.f32 next to each PNG
};

/// Writes scene_NNNNN/{input,target1,target2}/frame_TTTTT.png, target masks
/// and depth maps, per-scene manifests and a top-level manifest.json.
/// Scene folders are numbered by position in `seeds`. Returns the top-level
/// manifest path.
std::filesystem::path export_dataset(const std::vector<uint64_t>& seeds, const SceneConfig& config,
                                     const std::filesystem::path& out_dir,
                                     const ExportOptions& options = {});

Dataset load_dataset(const std::filesystem::path& dir, bool load_depth = false);

}  // namespace grvs
