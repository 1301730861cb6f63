#pragma once

#include <optional>
#include <vector>

#include "json.hpp"

#include "grvs/geometry.hpp"

namespace grvs {

// Frame indices are 1-based throughout: a sequence of T frames uses 1..T.

struct TargetEntry {
  int t = 1;
  Camera camera;
};

/// Output-frame i renders scene time entries[i].t from entries[i].camera.
/// Consecutive times may differ by at most one frame.
struct TargetSpec {
  std::vector<TargetEntry> entries;
  std::vector<int> dilations{1};
};

struct InputSelection {
  std::vector<int> indices;
  int center_position = 0;

  int center() const { return indices[static_cast<size_t>(center_position)]; }
};

/// Frames t + k*d for k = -(V-1)/2 .. (V-1)/2, each clamped into [1, T].
InputSelection select_inputs(int t, int dilation, int views, int frame_count);

/// 1-based index of the first entry that leaves [1, T] or steps by more than
/// one frame from its predecessor; nullopt when the target spec is valid.
std::optional<size_t> validate_target_spec(const TargetSpec& spec, int frame_count);

struct Pass {
  int dilation = 1;
  int pass_index = 0;
};

/// One pass per dilation, in order. Dilations must be positive and strictly
/// decreasing.
std::vector<Pass> iteration_passes(const TargetSpec& spec);

/// Constant-time spec: every output frame shows scene time `t`.
TargetSpec bullet_time_spec(int t, const std::vector<Camera>& cameras, std::vector<int> dilations);
/// t_i = i for i = 1..cameras.size().
TargetSpec synchronized_spec(const std::vector<Camera>& cameras, std::vector<int> dilations);

/// Trajectory file: {"targets": [{"t": int, "camera": {...}}, ...],
/// "dilations": [...]}. A bare array of target objects (optionally including
/// one {"dilations": [...]} element) is accepted on input.
nlohmann::json target_spec_to_json(const TargetSpec& spec);
TargetSpec target_spec_from_json(const nlohmann::json& j);

}  // namespace grvs
