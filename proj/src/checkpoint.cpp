#include "grvs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "grvs/errors.hpp"

namespace grvs {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as native little-endian floats");

namespace {

void write_floats(std::ofstream& out, std::span<const float> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

std::vector<float> read_floats(std::ifstream& in, size_t count, const std::string& what) {
  std::vector<float> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw IoError("checkpoint truncated while reading " + what);
  return values;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["params"] = nlohmann::json::array();
  for (const auto& [name, t] : checkpoint.params) {
    header["params"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  header["hyper"] = checkpoint.hyper;
  if (checkpoint.adam) {
    const AdamSnapshot& a = *checkpoint.adam;
    if (!a.moments.empty() && a.moments.size() != checkpoint.params.size()) {
      throw ShapeError("checkpoint: Adam moments do not match parameter list");
    }
    header["adam"] = {{"step", a.step},
                      {"learning_rate", a.config.learning_rate},
                      {"beta1", a.config.beta1},
                      {"beta2", a.config.beta2},
                      {"epsilon", a.config.epsilon},
                      {"moments", !a.moments.empty()}};
  }
  const std::string text = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(kCheckpointMagic, 5);
    const uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : checkpoint.params) write_floats(out, t.data());
    if (checkpoint.adam) {
      for (size_t k = 0; k < checkpoint.adam->moments.size(); ++k) {
        const AdamMoments& m = checkpoint.adam->moments[k];
        const size_t n = static_cast<size_t>(checkpoint.params[k].second.numel());
        const std::vector<float> zeros(n, 0.0f);
        write_floats(out, m.m.empty() ? std::span<const float>(zeros) : std::span<const float>(m.m));
        write_floats(out, m.v.empty() ? std::span<const float>(zeros) : std::span<const float>(m.v));
      }
    }
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kCheckpointMagic, 5) != 0) {
    throw IoError(path.string() + " is not a GRVS1 checkpoint");
  }
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (uint64_t{1} << 32)) throw IoError("corrupt checkpoint header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("checkpoint truncated in header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Checkpoint ck;
  ck.hyper = header.value("hyper", nlohmann::json::object());
  for (const auto& p : header.at("params")) {
    Shape shape = p.at("shape").get<Shape>();
    const std::string name = p.at("name").get<std::string>();
    std::vector<float> data = read_floats(in, static_cast<size_t>(numel(shape)), name);
    ck.params.emplace_back(name, Tensor(std::move(shape), std::move(data)));
  }
  if (header.contains("adam")) {
    const auto& a = header["adam"];
    AdamSnapshot snap;
    snap.step = a.at("step").get<int64_t>();
    snap.config.learning_rate = a.at("learning_rate").get<double>();
    snap.config.beta1 = a.at("beta1").get<double>();
    snap.config.beta2 = a.at("beta2").get<double>();
    snap.config.epsilon = a.at("epsilon").get<double>();
    if (a.at("moments").get<bool>()) {
      for (const auto& [name, t] : ck.params) {
        AdamMoments m;
        m.m = read_floats(in, static_cast<size_t>(t.numel()), name + ".m");
        m.v = read_floats(in, static_cast<size_t>(t.numel()), name + ".v");
        snap.moments.push_back(std::move(m));
      }
    }
    ck.adam = std::move(snap);
  }
  return ck;
}

}  // namespace grvs
