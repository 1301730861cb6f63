#include "grvs/sampler.hpp"

#include <algorithm>
#include <cstdlib>

#include "grvs/errors.hpp"

namespace grvs {

InputSelection select_inputs(int t, int dilation, int views, int frame_count) {
  if (views < 1 || views % 2 == 0) {
    throw ConfigError("number of input views must be odd and positive, got " +
                      std::to_string(views));
  }
  if (dilation < 1) throw ConfigError("dilation must be >= 1");
  if (t < 1 || t > frame_count) {
    throw ConfigError("target time " + std::to_string(t) + " outside [1, " +
                      std::to_string(frame_count) + "]");
  }
  const int half = (views - 1) / 2;
  InputSelection sel;
  sel.center_position = half;
  sel.indices.reserve(static_cast<size_t>(views));
  for (int k = -half; k <= half; ++k) {
    sel.indices.push_back(std::clamp(t + k * dilation, 1, frame_count));
  }
  return sel;
}

std::optional<size_t> validate_target_spec(const TargetSpec& spec, int frame_count) {
  if (spec.entries.empty()) throw ConfigError("target spec is empty");
  for (size_t i = 0; i < spec.entries.size(); ++i) {
    const int t = spec.entries[i].t;
    if (t < 1 || t > frame_count) return i + 1;
    if (i > 0 && std::abs(t - spec.entries[i - 1].t) > 1) return i + 1;
  }
  return std::nullopt;
}

std::vector<Pass> iteration_passes(const TargetSpec& spec) {
  if (spec.dilations.empty()) throw ConfigError("dilation schedule is empty");
  std::vector<Pass> passes;
  for (size_t k = 0; k < spec.dilations.size(); ++k) {
    const int d = spec.dilations[k];
    if (d < 1) throw ConfigError("dilations must be >= 1");
    if (k > 0 && d >= spec.dilations[k - 1]) {
      throw ConfigError("dilations must be strictly decreasing");
    }
    passes.push_back({d, static_cast<int>(k)});
  }
  return passes;
}

TargetSpec bullet_time_spec(int t, const std::vector<Camera>& cameras,
                            std::vector<int> dilations) {
  TargetSpec spec;
  spec.dilations = std::move(dilations);
  for (const Camera& c : cameras) spec.entries.push_back({t, c});
  return spec;
}

TargetSpec synchronized_spec(const std::vector<Camera>& cameras, std::vector<int> dilations) {
  TargetSpec spec;
  spec.dilations = std::move(dilations);
  for (size_t i = 0; i < cameras.size(); ++i) {
    spec.entries.push_back({static_cast<int>(i) + 1, cameras[i]});
  }
  return spec;
}

nlohmann::json target_spec_to_json(const TargetSpec& spec) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& e : spec.entries) {
    targets.push_back({{"t", e.t}, {"camera", camera_to_json(e.camera)}});
  }
  return {{"targets", targets}, {"dilations", spec.dilations}};
}

TargetSpec target_spec_from_json(const nlohmann::json& j) {
  TargetSpec spec;
  try {
    const nlohmann::json* targets = &j;
    if (j.is_object()) {
      targets = &j.at("targets");
      if (j.contains("dilations")) spec.dilations = j["dilations"].get<std::vector<int>>();
    }
    if (!targets->is_array()) throw ConfigError("trajectory targets must be a JSON array");
    for (const auto& e : *targets) {
      if (e.contains("dilations") && !e.contains("t")) {
        spec.dilations = e["dilations"].get<std::vector<int>>();
        continue;
      }
      spec.entries.push_back({e.at("t").get<int>(), camera_from_json(e.at("camera"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed trajectory JSON: ") + e.what());
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("bad camera in trajectory: ") + e.what());
  }
  if (spec.entries.empty()) throw ConfigError("trajectory has no targets");
  return spec;
}

}  // namespace grvs
