#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "grvs/checkpoint.hpp"
#include "grvs/errors.hpp"
#include "grvs/model.hpp"
#include "grvs/ops.hpp"
#include "grvs/optim.hpp"
#include "helpers.hpp"

using namespace grvs;
namespace fs = std::filesystem;

TEST_SUITE("optim_checkpoint") {
  TEST_CASE("first Adam step moves each weight by lr against the gradient sign") {
    // m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
    std::vector<float> p{1.0f, -2.0f, 0.5f};
    const std::vector<float> g{0.3f, -4.0f, 1e-3f};
    AdamMoments m;
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    adam_update(p, g, m, 1, cfg);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(0.5 - 0.01 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-6));
  }

  TEST_CASE("Adam matches a hand-rolled recurrence over several steps") {
    std::vector<float> p{0.7f, -0.1f};
    AdamMoments mom;
    AdamConfig cfg{0.05, 0.8, 0.95, 1e-6};
    double m[2] = {0, 0}, v[2] = {0, 0}, q[2] = {0.7f, -0.1f};
    for (int step = 1; step <= 5; ++step) {
      const std::vector<float> g{static_cast<float>(0.1 * step), static_cast<float>(-0.3 + 0.2 * step)};
      adam_update(p, g, mom, step, cfg);
      for (int i = 0; i < 2; ++i) {
        m[i] = 0.8 * m[i] + 0.2 * g[static_cast<size_t>(i)];
        v[i] = 0.95 * v[i] + 0.05 * g[static_cast<size_t>(i)] * g[static_cast<size_t>(i)];
        const double mh = m[i] / (1 - std::pow(0.8, step));
        const double vh = v[i] / (1 - std::pow(0.95, step));
        q[i] = q[i] - 0.05 * mh / (std::sqrt(vh) + 1e-6);
      }
    }
    CHECK(p[0] == doctest::Approx(q[0]).epsilon(1e-5));
    CHECK(p[1] == doctest::Approx(q[1]).epsilon(1e-5));
    CHECK(mom.m[0] == doctest::Approx(m[0]).epsilon(1e-5));
  }

  TEST_CASE("Adam class treats missing gradients as zero and counts steps") {
    Tensor a = Tensor::full({2}, 1.0f, true);
    Tensor b = Tensor::full({2}, 1.0f, true);
    Adam opt({a, b}, AdamConfig{});
    sum(a).backward();
    opt.step();
    CHECK(opt.step_count() == 1);
    CHECK(a.data()[0] < 1.0f);
    CHECK(b.data()[0] == 1.0f);
    opt.zero_grad();
    CHECK(a.grad()[0] == 0.0f);
  }

  TEST_CASE("checkpoint round trip preserves weights, hyper-parameters and Adam state") {
    const fs::path dir = fs::temp_directory_path() / "grvs_ckpt_test";
    fs::create_directories(dir);
    GrvsModel model(ModelConfig{4, 4, 2, 3, 2, 1, 3});
    Checkpoint ck = model_to_checkpoint(model);
    ck.hyper["note"] = "x";
    AdamSnapshot snap;
    snap.step = 7;
    snap.config.learning_rate = 0.004;
    for (const auto& [n, t] : model.parameters()) {
      AdamMoments m;
      m.m.assign(static_cast<size_t>(t.numel()), 0.25f);
      m.v.assign(static_cast<size_t>(t.numel()), 0.5f);
      snap.moments.push_back(m);
    }
    ck.adam = snap;
    save_checkpoint(dir / "a.grvs", ck);
    const Checkpoint back = load_checkpoint(dir / "a.grvs");
    REQUIRE(back.params.size() == ck.params.size());
    for (size_t i = 0; i < ck.params.size(); ++i) {
      CHECK(back.params[i].first == ck.params[i].first);
      CHECK(std::equal(back.params[i].second.data().begin(), back.params[i].second.data().end(),
                       ck.params[i].second.data().begin()));
    }
    CHECK(back.hyper["note"] == "x");
    REQUIRE(back.adam.has_value());
    CHECK(back.adam->step == 7);
    CHECK(back.adam->config.learning_rate == 0.004);
    CHECK(back.adam->moments[1].v[0] == 0.5f);
    const GrvsModel restored = model_from_checkpoint(back);
    CHECK(restored.config() == model.config());

    // Saving twice yields identical bytes.
    save_checkpoint(dir / "b.grvs", ck);
    std::ifstream fa(dir / "a.grvs", std::ios::binary), fb(dir / "b.grvs", std::ios::binary);
    CHECK(std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {}));
    fs::remove_all(dir);
  }

  TEST_CASE("corrupt and mismatched checkpoints are rejected") {
    const fs::path dir = fs::temp_directory_path() / "grvs_ckpt_bad";
    fs::create_directories(dir);
    {
      std::ofstream os(dir / "junk.grvs", std::ios::binary);
      os << "NOTACHECKPOINT";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.grvs"), IoError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.grvs"), IoError);

    GrvsModel model(ModelConfig{4, 4, 2, 3, 2, 1, 3});
    save_checkpoint(dir / "ok.grvs", model_to_checkpoint(model));
    const auto size = fs::file_size(dir / "ok.grvs");
    fs::resize_file(dir / "ok.grvs", size - 10);
    CHECK_THROWS_AS(load_checkpoint(dir / "ok.grvs"), IoError);

    Checkpoint ck = model_to_checkpoint(model);
    ck.hyper["model"]["C"] = 6;
    CHECK_THROWS_AS(model_from_checkpoint(ck), ConfigError);
    fs::remove_all(dir);
  }
}
