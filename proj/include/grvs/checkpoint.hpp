#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "grvs/optim.hpp"
#include "grvs/tensor.hpp"

namespace grvs {

struct AdamSnapshot {
  int64_t step = 0;
  AdamConfig config;
  std::vector<AdamMoments> moments;  // empty, or one entry per parameter
};

/// On-disk layout: the 5 bytes "GRVS1", a little-endian uint64 header length,
/// the JSON header, then every parameter's float32 payload in header order
/// followed (when present) by the m and v buffers of each parameter.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> params;
  nlohmann::json hyper = nlohmann::json::object();
  std::optional<AdamSnapshot> adam;
};

inline constexpr char kCheckpointMagic[] = "GRVS1";

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace grvs
