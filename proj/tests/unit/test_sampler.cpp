#include "doctest.h"
#include "grvs/errors.hpp"
#include "grvs/sampler.hpp"
#include "helpers.hpp"

using namespace grvs;

namespace {

TargetSpec spec_with_times(std::vector<int> times) {
  TargetSpec s;
  for (int t : times) s.entries.push_back({t, Camera{}});
  return s;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("dilated selection around the target time") {
    CHECK(select_inputs(40, 5, 15, 81).indices ==
          std::vector<int>{5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75});
    CHECK(select_inputs(40, 1, 1, 81).indices == std::vector<int>{40});
    const InputSelection s = select_inputs(2, 5, 5, 81);
    CHECK(s.indices == std::vector<int>{1, 1, 2, 7, 12});
    CHECK(s.center() == 2);
    CHECK(select_inputs(80, 3, 3, 81).indices == std::vector<int>{77, 80, 81});
  }

  TEST_CASE("selection properties hold across the sequence") {
    for (int V : {1, 3, 5, 9})
      for (int d : {1, 3, 5})
        for (int t = 1; t <= 30; ++t) {
          const auto s = select_inputs(t, d, V, 30);
          REQUIRE(static_cast<int>(s.indices.size()) == V);
          CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
          CHECK(s.center() == t);
          CHECK(s.indices.front() >= 1);
          CHECK(s.indices.back() <= 30);
        }
  }

  TEST_CASE("consecutive selections differ by at most one per index") {
    const TargetSpec spec = spec_with_times({5, 6, 6, 7, 6, 5, 5});
    REQUIRE_FALSE(validate_target_spec(spec, 20).has_value());
    for (size_t i = 1; i < spec.entries.size(); ++i) {
      const auto a = select_inputs(spec.entries[i - 1].t, 3, 5, 20).indices;
      const auto b = select_inputs(spec.entries[i].t, 3, 5, 20).indices;
      for (size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1);
    }
  }

  TEST_CASE("selection errors") {
    CHECK_THROWS_AS(select_inputs(5, 1, 4, 10), ConfigError);
    CHECK_THROWS_AS(select_inputs(5, 0, 3, 10), ConfigError);
    CHECK_THROWS_AS(select_inputs(11, 1, 3, 10), ConfigError);
    CHECK_THROWS_AS(select_inputs(0, 1, 3, 10), ConfigError);
  }

  TEST_CASE("target spec validation") {
    CHECK_FALSE(validate_target_spec(spec_with_times({10, 10, 10, 10}), 81).has_value());
    CHECK_FALSE(validate_target_spec(spec_with_times({1, 2, 3, 4}), 81).has_value());
    CHECK(validate_target_spec(spec_with_times({1, 3}), 81) == std::optional<size_t>(2));
    CHECK(validate_target_spec(spec_with_times({1, 2, 0}), 81) == std::optional<size_t>(3));
    CHECK(validate_target_spec(spec_with_times({5, 6}), 5) == std::optional<size_t>(2));
    CHECK_THROWS_AS(validate_target_spec(TargetSpec{}, 5), ConfigError);
  }

  TEST_CASE("iteration passes follow the dilation schedule") {
    TargetSpec s = spec_with_times({1});
    s.dilations = {5, 3, 1};
    const auto p = iteration_passes(s);
    REQUIRE(p.size() == 3);
    CHECK(p[0].dilation == 5);
    CHECK(p[2].dilation == 1);
    CHECK(p[2].pass_index == 2);
    s.dilations = {9, 5, 1};
    CHECK(iteration_passes(s).size() == 3);
    s.dilations = {1};
    CHECK(iteration_passes(s).size() == 1);
    s.dilations = {3, 5};
    CHECK_THROWS_AS(iteration_passes(s), ConfigError);
    s.dilations = {};
    CHECK_THROWS_AS(iteration_passes(s), ConfigError);
    s.dilations = {2, 0};
    CHECK_THROWS_AS(iteration_passes(s), ConfigError);
  }

  TEST_CASE("bullet-time and synchronized specs") {
    std::vector<Camera> cams(4);
    const TargetSpec b = bullet_time_spec(7, cams, {3, 1});
    REQUIRE(b.entries.size() == 4);
    for (const auto& e : b.entries) CHECK(e.t == 7);
    CHECK(b.dilations == std::vector<int>{3, 1});
    const TargetSpec s = synchronized_spec(cams, {1});
    for (size_t i = 0; i < 4; ++i) CHECK(s.entries[i].t == static_cast<int>(i) + 1);
  }

  TEST_CASE("trajectory JSON round trip and bare-array input") {
    std::mt19937_64 rng(5);
    TargetSpec s;
    s.entries = {{3, test::random_camera(rng)}, {4, test::random_camera(rng)}};
    s.dilations = {5, 1};
    const TargetSpec back = target_spec_from_json(target_spec_to_json(s));
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[1].t == 4);
    CHECK(back.dilations == s.dilations);
    CHECK(back.entries[0].camera.intrinsics == s.entries[0].camera.intrinsics);

    nlohmann::json bare = target_spec_to_json(s)["targets"];
    bare.push_back({{"dilations", {3, 1}}});
    CHECK(target_spec_from_json(bare).dilations == std::vector<int>{3, 1});
    CHECK_THROWS_AS(target_spec_from_json(nlohmann::json::parse(R"({"targets": 3})")), ConfigError);
  }
}
