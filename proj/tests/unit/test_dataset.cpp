#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "grvs/dataset.hpp"
#include "grvs/errors.hpp"
#include "grvs/image_io.hpp"
#include "helpers.hpp"

using namespace grvs;
namespace fs = std::filesystem;

namespace {

SceneConfig tiny() {
  SceneConfig c;
  c.width = 16;
  c.height = 12;
  c.frames = 4;
  c.supersample = 1;
  return c;
}

std::vector<std::string> tree(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) out.push_back(fs::relative(e.path(), root).string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("png and f32 round trips") {
    test::TempDir dir("io");
    const Tensor t = test::random_tensor({3, 5, 7}, 1, 0.0, 1.0);
    const ImageU8 img = tensor_to_image(t);
    write_png(dir.path / "a.png", img);
    const ImageU8 back = read_png(dir.path / "a.png");
    CHECK(back.pixels == img.pixels);
    const Tensor tb = image_to_tensor(back);
    for (size_t i = 0; i < t.data().size(); ++i) CHECK(std::abs(tb.data()[i] - t.data()[i]) <= 0.5 / 255 + 1e-6);
    const std::vector<float> v{1.5f, -2.0f, 3.25f};
    write_f32(dir.path / "v.f32", v);
    CHECK(read_f32(dir.path / "v.f32", 3) == v);
    CHECK_THROWS_AS(read_f32(dir.path / "v.f32", 4), IoError);
    CHECK_THROWS_AS(read_png(dir.path / "missing.png"), IoError);
  }

  TEST_CASE("export layout and manifests") {
    test::TempDir dir("layout");
    const SceneConfig c = tiny();
    export_dataset({3, 9}, c, dir.path);
    const auto files = tree(dir.path);
    for (const char* rel : {"manifest.json", "scene_00000/manifest.json", "scene_00001/input/frame_00004.png",
                            "scene_00000/target1/mask_00001.png", "scene_00001/target2/depth_00004.f32"}) {
      CHECK_MESSAGE(std::binary_search(files.begin(), files.end(), rel), rel);
    }
    CHECK_FALSE(std::binary_search(files.begin(), files.end(), "scene_00000/input/frame_00001.f32"));
    CHECK_FALSE(std::binary_search(files.begin(), files.end(), "scene_00000/input/frame_00005.png"));
    const auto top = nlohmann::json::parse(test::slurp(dir.path / "manifest.json"));
    CHECK(top.at("scenes").size() == 2);
    CHECK(top.at("frames") == 4);
    const ImageU8 mask = read_png(dir.path / "scene_00000/target1/mask_00001.png");
    CHECK(mask.channels == 1);
    for (uint8_t m : mask.pixels) CHECK((m == 0 || m == 255));
  }

  TEST_CASE("export is byte-identical across runs") {
    test::TempDir a("rep_a"), b("rep_b");
    const SceneConfig c = tiny();
    export_dataset({5}, c, a.path, {true});
    export_dataset({5}, c, b.path, {true});
    const auto fa = tree(a.path);
    REQUIRE(fa == tree(b.path));
    for (const auto& rel : fa) {
      if (fs::is_regular_file(a.path / rel)) CHECK_MESSAGE(test::slurp(a.path / rel) == test::slurp(b.path / rel), rel);
    }
  }

  TEST_CASE("loading reproduces the in-memory dataset") {
    test::TempDir dir("load");
    const SceneConfig c = tiny();
    export_dataset({2, 4}, c, dir.path);
    const Dataset loaded = load_dataset(dir.path, true);
    std::vector<SceneData> mem;
    for (uint64_t s : {2, 4}) mem.push_back(render_scene_data(s, c, true));
    const Dataset ref = make_dataset(mem, c);
    REQUIRE(loaded.scenes.size() == 2);
    CHECK(loaded.near == ref.near);
    CHECK(loaded.far == ref.far);
    for (size_t i = 0; i < 2; ++i) {
      const auto& l = loaded.scenes[i];
      const auto& r = ref.scenes[i];
      CHECK(l.seed == r.seed);
      CHECK(l.input.frames == r.input.frames);
      CHECK(l.input.cameras == r.input.cameras);
      for (size_t k = 0; k < 2; ++k) {
        CHECK(l.targets[k].frames == r.targets[k].frames);
        CHECK(l.targets[k].masks == r.targets[k].masks);
        CHECK(l.targets[k].depth == r.targets[k].depth);
        CHECK(l.targets[k].cameras == r.targets[k].cameras);
      }
      CHECK(l.spec.to_json() == r.spec.to_json());
    }
  }

  TEST_CASE("depth range brackets every rendered depth") {
    const SceneConfig c = tiny();
    const SceneData s = render_scene_data(6, c, true);
    float lo = 1e30f, hi = 0.0f;
    for (const auto* seq : {&s.targets[0], &s.targets[1]})
      for (const auto& d : seq->depth)
        for (float v : d) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    CHECK(s.near < lo);
    CHECK(s.far > hi);
    CHECK(s.near > 0.0);
  }

  TEST_CASE("loading a broken dataset is an io error") {
    test::TempDir dir("broken");
    CHECK_THROWS_AS(load_dataset(dir.path), IoError);
    export_dataset({1}, tiny(), dir.path);
    fs::remove(dir.path / "scene_00000/input/frame_00002.png");
    CHECK_THROWS_AS(load_dataset(dir.path), IoError);
  }
}
