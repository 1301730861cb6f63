#include "grvs/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "grvs/checkpoint.hpp"
#include "grvs/dataset.hpp"
#include "grvs/errors.hpp"
#include "grvs/image_io.hpp"
#include "grvs/psv.hpp"
#include "grvs/sampler.hpp"

namespace grvs {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

nlohmann::json parse_scalar(const std::string& key, const std::string& text,
                            const nlohmann::json& like) {
  const std::string v = trim(text);
  try {
    size_t used = 0;
    if (like.is_boolean()) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw std::invalid_argument("bool");
    }
    if (like.is_number_unsigned()) {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      const unsigned long long x = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return x;
    }
    if (like.is_number_integer()) {
      const long long x = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      return x;
    }
    if (like.is_number_float()) {
      const double x = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument("trailing");
      return x;
    }
    if (like.is_string()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid value '" + text + "' for " + key);
}

nlohmann::json parse_value(const std::string& key, const std::string& text,
                           const nlohmann::json& like) {
  if (!like.is_array()) return parse_scalar(key, text, like);
  nlohmann::json out = nlohmann::json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_scalar(key, item, like.at(0)));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string render_value(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + render_value(v[i]);
    return s;
  }
  return v.dump();
}

nlohmann::json eval_defaults() {
  const EvalConfig e;
  return {{"mode", "synchronized"},
          {"bullet_time", e.bullet_time},
          {"dilations", e.dilations},
          {"recurrent", e.recurrent},
          {"max_frames", e.max_frames}};
}

struct CliArgs {
  std::string config_file;
  std::vector<std::string> overrides;
};

CliConfig resolve_config(const CliArgs& a) {
  CliConfig cfg;
  if (!a.config_file.empty()) cfg.load_file(a.config_file);
  for (const auto& o : a.overrides) cfg.apply_override(o);
  return cfg;
}

void log_config(const CliConfig& cfg, std::ostream& out) {
  std::istringstream lines(cfg.dump());
  std::string line;
  out << "resolved config:\n";
  while (std::getline(lines, line)) out << "  " << line << '\n';
}

Dataset load_dataset_checked(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.json")) {
    throw IoError("no dataset manifest under " + dir);
  }
  return load_dataset(dir);
}

const SceneData& pick_scene(const Dataset& ds, int index) {
  if (index < 0 || index >= static_cast<int>(ds.scenes.size())) {
    throw ConfigError("scene index " + std::to_string(index) + " outside [0, " +
                      std::to_string(ds.scenes.size()) + ")");
  }
  return ds.scenes[static_cast<size_t>(index)];
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

void ensure_parent(const fs::path& p) {
  if (!p.has_parent_path()) return;
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
}

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", i);
  return buf;
}

// ---- subcommands ---------------------------------------------------------

struct GenDataArgs {
  CliArgs common;
  std::string out;
  int scenes = -1;
  int frames = -1;
  long long seed = -1;
  bool sidecars = false;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.common);
  if (a.scenes >= 0) cfg.set("data.scenes", std::to_string(a.scenes));
  if (a.frames >= 0) cfg.set("scene.frames", std::to_string(a.frames));
  if (a.seed >= 0) cfg.set("data.seed", std::to_string(a.seed));
  if (a.sidecars) cfg.set("data.float_sidecars", "true");
  log_config(cfg, out);
  const SceneConfig sc = cfg.scene();
  const int count = std::stoi(cfg.get("data.scenes"));
  if (count < 1) throw ConfigError("data.scenes must be >= 1");
  const uint64_t base = std::stoull(cfg.get("data.seed"));
  std::vector<uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base + static_cast<uint64_t>(i));
  ExportOptions opts;
  opts.float_sidecars = cfg.get("data.float_sidecars") == "true";
  const fs::path manifest = export_dataset(seeds, sc, a.out, opts);
  out << "scenes: " << count << "\nmanifest: " << manifest.string() << '\n';
  return kExitOk;
}

struct InspectArgs {
  CliArgs common;
  std::string data;
  std::string out;
  int scene = 0;
  int frame = 0;
  int target = 1;
  int planes = 6;
  int views = 3;
  int dilation = 1;
};

int cmd_inspect_psv(const InspectArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.common);
  log_config(cfg, out);
  const Dataset ds = load_dataset_checked(a.data);
  const SceneData& scene = pick_scene(ds, a.scene);
  const int T = scene.frames();
  const int t = a.frame == 0 ? (T + 1) / 2 : a.frame;
  if (t < 1 || t > T) throw ConfigError("frame " + std::to_string(t) + " outside [1, " + std::to_string(T) + "]");
  if (a.target < 0 || a.target > 2) throw ConfigError("--target must be 0 (input camera), 1 or 2");
  if (a.views < 1 || a.views % 2 == 0) throw ConfigError("--views must be odd");
  if (a.planes < 2) throw ConfigError("--planes must be >= 2");
  if (a.dilation < 1) throw ConfigError("--dilation must be >= 1");

  const Camera target = a.target == 0 ? scene.input.cameras[static_cast<size_t>(t - 1)]
                                      : scene.targets[static_cast<size_t>(a.target - 1)].cameras[static_cast<size_t>(t - 1)];
  const InputSelection sel = select_inputs(t, a.dilation, a.views, T);
  std::vector<Tensor> frames;
  std::vector<Camera> cams;
  for (int idx : sel.indices) {
    frames.push_back(scene.input.frame(idx));
    cams.push_back(scene.input.cameras[static_cast<size_t>(idx - 1)]);
  }
  const DepthSchedule schedule = make_depth_schedule(scene.near, scene.far, a.planes);
  const PlaneSweepVolume psv = build_dynamic_psv<float>(frames, cams, target, schedule);
  const Tensor mean = psv_view_mean(psv);
  const int H = target.height();
  const int W = target.width();
  ImageU8 row{W * a.planes, H, 3, std::vector<uint8_t>(static_cast<size_t>(3 * W * H * a.planes))};
  nlohmann::json planes = nlohmann::json::array();
  int best = 0;
  double best_score = 0.0;
  for (int k = 0; k < a.planes; ++k) {
    const size_t plane_size = static_cast<size_t>(3 * H * W);
    std::vector<float> slice(mean.data().begin() + static_cast<std::ptrdiff_t>(k * plane_size),
                             mean.data().begin() + static_cast<std::ptrdiff_t>((k + 1) * plane_size));
    const ImageU8 img = tensor_to_image(Tensor(Shape{3, H, W}, std::move(slice)));
    for (int y = 0; y < H; ++y) {
      std::copy_n(img.pixels.begin() + 3 * y * W, 3 * W,
                  row.pixels.begin() + 3 * (y * W * a.planes + k * W));
    }
    const double score = focus_score(psv, k);
    if (k == 0 || score < best_score) {
      best = k;
      best_score = score;
    }
    planes.push_back({{"index", k}, {"depth", schedule.depths[static_cast<size_t>(k)]}, {"focus", score}});
  }
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  write_png(fs::path(a.out) / "psv_row.png", row);
  const nlohmann::json report = {{"scene", scene.name},   {"frame", t},
                                 {"target", a.target},    {"views", sel.indices},
                                 {"near", scene.near},    {"far", scene.far},
                                 {"planes", planes},      {"argmin", best}};
  write_text(fs::path(a.out) / "focus.json", report.dump(2) + "\n");
  out << "psv row: " << (fs::path(a.out) / "psv_row.png").string() << "\nfocus argmin plane "
      << best << " (depth " << schedule.depths[static_cast<size_t>(best)] << ")\n";
  return kExitOk;
}

struct TrainArgs {
  CliArgs common;
  std::string data;
  std::string out;
  std::string init;
  int steps = -1;
  long long seed = -1;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.common);
  if (a.steps >= 0) cfg.set("train.steps", std::to_string(a.steps));
  if (a.seed >= 0) {
    cfg.set("train.seed", std::to_string(a.seed));
    cfg.set("model.seed", std::to_string(a.seed));
  }
  log_config(cfg, out);
  const ModelConfig mc = cfg.model();
  const TrainConfig tc = cfg.train();
  const Dataset ds = load_dataset_checked(a.data);
  std::optional<GrvsModel> init;
  TrainOptions opts;
  if (!a.init.empty()) {
    init.emplace(model_from_checkpoint(load_checkpoint(a.init)));
    opts.init = &*init;
  }
  ensure_parent(a.out);
  opts.log = &out;
  const TrainResult r = train(mc, tc, ds, opts);
  // Written only after training succeeded, so a failed run leaves no checkpoint behind.
  save_checkpoint(a.out, r.checkpoint);
  write_text(a.out + ".losses.json", nlohmann::json(r.losses).dump() + "\n");
  out << "checkpoint: " << a.out << "\nfinal l1: " << (r.losses.empty() ? 0.0 : r.losses.back())
      << "\ntrain seconds: " << r.seconds << '\n';
  return kExitOk;
}

struct RenderArgs {
  CliArgs common;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string trajectory;
  int scene = 0;
  int bullet_time = 0;
  bool sync = false;
  int target_camera = 1;
  std::vector<int> dilations;
  bool no_recurrence = false;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.common);
  log_config(cfg, out);
  if (a.bullet_time > 0 && a.sync) throw ConfigError("--bullet-time and --sync are exclusive");
  if (a.target_camera < 1 || a.target_camera > 2) throw ConfigError("--target-camera must be 1 or 2");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const GrvsModel model = model_from_checkpoint(ck);
  const Dataset ds = load_dataset_checked(a.data);
  const SceneData& scene = pick_scene(ds, a.scene);

  TargetSpec spec;
  if (!a.trajectory.empty()) {
    std::ifstream is(a.trajectory);
    if (!is) throw IoError("cannot open " + a.trajectory);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed trajectory " + a.trajectory + ": " + e.what());
    }
    spec = target_spec_from_json(j);
  }
  std::vector<int> dilations = a.dilations.empty()
                                   ? (a.trajectory.empty() ? cfg.eval().dilations : spec.dilations)
                                   : a.dilations;
  if (a.bullet_time > 0 || a.sync || a.trajectory.empty()) {
    std::vector<Camera> cams;
    if (!a.trajectory.empty()) {
      for (const auto& e : spec.entries) cams.push_back(e.camera);
    } else {
      cams = scene.targets[static_cast<size_t>(a.target_camera - 1)].cameras;
    }
    spec = a.bullet_time > 0 ? bullet_time_spec(a.bullet_time, cams, dilations)
                             : synchronized_spec(cams, dilations);
  } else {
    spec.dilations = dilations;
  }
  const DepthSchedule schedule = checkpoint_schedule(ck, model.config(), &ds);
  const RenderResult r = render_video(model, scene.input, spec, schedule, !a.no_recurrence);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  for (size_t i = 0; i < r.frames.size(); ++i) {
    write_png(fs::path(a.out) / frame_name(static_cast<int>(i) + 1), tensor_to_image(clamp_image(r.frames[i])));
  }
  write_text(fs::path(a.out) / "trajectory.json", target_spec_to_json(spec).dump(2) + "\n");
  out << "frames: " << r.frames.size() << "\nseconds: " << r.seconds << "\nfps: " << r.fps << '\n';
  return kExitOk;
}

struct EvalArgs {
  CliArgs common;
  std::string checkpoint;
  std::string data;
  std::string out;
  int bullet_time = -1;
  bool sync = false;
  bool ground_truth = false;
  bool no_recurrence = false;
  std::vector<int> dilations;
  int max_frames = -1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.common);
  if (a.bullet_time >= 0 && a.sync) throw ConfigError("--bullet-time and --sync are exclusive");
  if (a.bullet_time >= 0) {
    cfg.set("eval.mode", "bullet_time");
    cfg.set("eval.bullet_time", std::to_string(a.bullet_time));
  }
  if (a.sync) cfg.set("eval.mode", "synchronized");
  if (a.no_recurrence) cfg.set("eval.recurrent", "false");
  if (a.max_frames >= 0) cfg.set("eval.max_frames", std::to_string(a.max_frames));
  if (!a.dilations.empty()) {
    std::string s;
    for (size_t i = 0; i < a.dilations.size(); ++i) s += (i ? "," : "") + std::to_string(a.dilations[i]);
    cfg.set("eval.dilations", s);
  }
  log_config(cfg, out);
  EvalConfig ec = cfg.eval();
  ec.ground_truth = a.ground_truth;
  const Dataset ds = load_dataset_checked(a.data);
  EvalReport report;
  if (a.ground_truth) {
    const ModelConfig mc = cfg.model();
    report = evaluate(GrvsModel(mc), ds, ec, make_depth_schedule(ds.near, ds.far, mc.depth_planes));
  } else {
    if (a.checkpoint.empty()) throw ConfigError("eval needs --checkpoint unless --ground-truth is given");
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const GrvsModel model = model_from_checkpoint(ck);
    report = evaluate(model, ds, ec, checkpoint_schedule(ck, model.config(), &ds));
  }
  const nlohmann::json j = report.to_json();
  validate_eval_report(j);
  ensure_parent(a.out);
  write_text(a.out, j.dump(2) + "\n");
  const std::string table = report.to_table();
  write_text(fs::path(a.out).replace_extension(".txt"), table);
  out << table << "report: " << a.out << '\n';
  return kExitOk;
}

void add_common(CLI::App* app, CliArgs& c) {
  app->add_option("--config", c.config_file, "key=value config file");
  app->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
}

}  // namespace

CliConfig::CliConfig() {
  auto put = [&](const std::string& prefix, const nlohmann::json& obj) {
    for (auto it = obj.begin(); it != obj.end(); ++it) values_[prefix + it.key()] = it.value();
  };
  put("model.", ModelConfig{}.to_json());
  put("train.", TrainConfig{}.to_json());
  put("scene.", SceneConfig{}.to_json());
  put("eval.", eval_defaults());
  values_["data.scenes"] = 2;
  values_["data.seed"] = uint64_t{0};
  values_["data.float_sidecars"] = false;
  values_["workers"] = 1;
}

void CliConfig::set(const std::string& key, const std::string& value) {
  if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = parse_value(key, value, values_[key]);
}

void CliConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void CliConfig::load_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path.string());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    try {
      apply_override(s);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

bool CliConfig::contains(const std::string& key) const { return values_.contains(key); }

std::string CliConfig::get(const std::string& key) const {
  if (!values_.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  return render_value(values_.at(key));
}

nlohmann::json CliConfig::section(const std::string& prefix) const {
  nlohmann::json out = nlohmann::json::object();
  for (auto it = values_.begin(); it != values_.end(); ++it) {
    if (it.key().rfind(prefix, 0) == 0) out[it.key().substr(prefix.size())] = it.value();
  }
  return out;
}

ModelConfig CliConfig::model() const { return ModelConfig::from_json(section("model.")); }
TrainConfig CliConfig::train() const { return TrainConfig::from_json(section("train.")); }
SceneConfig CliConfig::scene() const { return SceneConfig::from_json(section("scene.")); }

EvalConfig CliConfig::eval() const {
  const nlohmann::json j = section("eval.");
  EvalConfig e;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "synchronized") {
    e.mode = EvalMode::kSynchronized;
  } else if (mode == "bullet_time") {
    e.mode = EvalMode::kBulletTime;
  } else {
    throw ConfigError("eval.mode must be synchronized or bullet_time, got '" + mode + "'");
  }
  e.bullet_time = j.at("bullet_time").get<int>();
  e.dilations = j.at("dilations").get<std::vector<int>>();
  e.recurrent = j.at("recurrent").get<bool>();
  e.max_frames = j.at("max_frames").get<int>();
  if (e.bullet_time < 0 || e.max_frames < 0) throw ConfigError("eval.bullet_time and eval.max_frames must be >= 0");
  TargetSpec probe;
  probe.dilations = e.dilations;
  iteration_passes(probe);
  return e;
}

std::string CliConfig::dump() const {
  std::string s;
  for (auto it = values_.begin(); it != values_.end(); ++it) {
    s += it.key() + "=" + render_value(it.value()) + "\n";
  }
  return s;
}

void validate_eval_report(const nlohmann::json& r) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("eval report: " + what);
  };
  auto check_summary = [&](const nlohmann::json& m, const std::string& where) {
    require(m.is_object(), where + " is not an object");
    for (const char* k : {"psnr", "ssim"}) require(m.contains(k) && m[k].is_number(), where + "." + k);
    for (const char* k : {"frames", "dyn_frames"}) {
      require(m.contains(k) && m[k].is_number_integer() && m[k].get<int>() >= 0, where + "." + k);
    }
    for (const char* k : {"dyn_psnr", "dyn_ssim"}) {
      require(m.contains(k) && (m[k].is_number() || m[k].is_null()), where + "." + k);
    }
    require(m["dyn_frames"].get<int>() > 0 ? m["dyn_psnr"].is_number() : m["dyn_psnr"].is_null(),
            where + ".dyn_psnr must be null exactly when dyn_frames is 0");
    require(m["ssim"].get<double>() >= -1.0 && m["ssim"].get<double>() <= 1.0, where + ".ssim range");
  };
  auto check_passes = [&](const nlohmann::json& p, const std::string& where) {
    require(p.is_array() && !p.empty(), where + " must be a non-empty array");
    for (size_t i = 0; i < p.size(); ++i) {
      require(p[i].contains("dilation") && p[i]["dilation"].is_number_integer(), where + ".dilation");
      check_summary(p[i].at("metrics"), where + "[" + std::to_string(i) + "].metrics");
    }
  };
  require(r.is_object(), "not an object");
  require(r.value("schema", "") == "grvs-eval-1", "schema tag");
  const std::string mode = r.value("mode", "");
  require(mode == "synchronized" || mode == "bullet_time", "mode");
  require(r.contains("dilations") && r["dilations"].is_array(), "dilations");
  for (const char* k : {"recurrent", "ground_truth"}) require(r.contains(k) && r[k].is_boolean(), k);
  for (const char* k : {"scenes", "frames"}) require(r.contains(k) && r[k].is_number_integer(), k);
  for (const char* k : {"runtime_seconds", "fps"}) require(r.contains(k) && r[k].is_number(), k);
  check_summary(r.at("aggregate"), "aggregate");
  check_passes(r.at("passes"), "passes");
  require(r.contains("targets") && r["targets"].is_array() && r["targets"].size() == 2, "targets");
  for (const auto& t : r["targets"]) {
    require(t.contains("camera") && t["camera"].is_string(), "targets[].camera");
    check_summary(t.at("metrics"), "targets[].metrics");
    check_passes(t.at("passes"), "targets[].passes");
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalizable recurrent view synthesis on procedural dynamic scenes", "grvs"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "render a procedural dataset");
  add_common(c_gen, gen.common);
  c_gen->add_option("--out", gen.out, "output directory")->required();
  c_gen->add_option("--scenes", gen.scenes, "number of scenes");
  c_gen->add_option("--frames", gen.frames, "frames per sequence");
  c_gen->add_option("--seed", gen.seed, "seed of the first scene");
  c_gen->add_flag("--float-sidecars", gen.sidecars, "write raw float32 frames next to PNGs");

  InspectArgs ins;
  auto* c_ins = app.add_subcommand("inspect-psv", "dump plane sweep volume slices");
  add_common(c_ins, ins.common);
  c_ins->add_option("--data", ins.data, "dataset directory")->required();
  c_ins->add_option("--out", ins.out, "output directory")->required();
  c_ins->add_option("--scene", ins.scene, "scene index (0-based)");
  c_ins->add_option("--frame", ins.frame, "frame index (1-based, default middle)");
  c_ins->add_option("--target", ins.target, "target camera: 1, 2, or 0 for the input camera");
  c_ins->add_option("--planes", ins.planes, "number of depth planes");
  c_ins->add_option("--views", ins.views, "number of input views (odd)");
  c_ins->add_option("--dilation", ins.dilation, "input dilation");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model");
  add_common(c_train, tr.common);
  c_train->add_option("--data", tr.data, "dataset directory")->required();
  c_train->add_option("--out", tr.out, "checkpoint path")->required();
  c_train->add_option("--init", tr.init, "initial checkpoint");
  c_train->add_option("--steps", tr.steps, "optimizer steps");
  c_train->add_option("--seed", tr.seed, "model and training seed");

  RenderArgs rd;
  auto* c_render = app.add_subcommand("render", "render a target trajectory");
  add_common(c_render, rd.common);
  c_render->add_option("--checkpoint", rd.checkpoint, "checkpoint path")->required();
  c_render->add_option("--data", rd.data, "dataset directory providing the input video")->required();
  c_render->add_option("--out", rd.out, "output directory")->required();
  c_render->add_option("--scene", rd.scene, "scene index (0-based)");
  c_render->add_option("--trajectory", rd.trajectory, "trajectory JSON");
  c_render->add_option("--bullet-time", rd.bullet_time, "freeze scene time at T");
  c_render->add_flag("--sync", rd.sync, "synchronized mapping t_i = i");
  c_render->add_option("--target-camera", rd.target_camera, "scene target camera when no trajectory is given");
  c_render->add_option("--dilations", rd.dilations, "dilation schedule")->delimiter(',');
  c_render->add_flag("--no-recurrence", rd.no_recurrence, "reset the hidden state every frame");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "evaluate on a dataset");
  add_common(c_eval, ev.common);
  c_eval->add_option("--checkpoint", ev.checkpoint, "checkpoint path");
  c_eval->add_option("--data", ev.data, "dataset directory")->required();
  c_eval->add_option("--out", ev.out, "report JSON path")->required();
  c_eval->add_option("--bullet-time", ev.bullet_time, "freeze scene time at T (0: middle frame)");
  c_eval->add_flag("--sync", ev.sync, "synchronized mapping (default)");
  c_eval->add_flag("--ground-truth", ev.ground_truth, "score the ground truth against itself");
  c_eval->add_flag("--no-recurrence", ev.no_recurrence, "reset the hidden state every frame");
  c_eval->add_option("--dilations", ev.dilations, "dilation schedule")->delimiter(',');
  c_eval->add_option("--max-frames", ev.max_frames, "frames per target sequence");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub != nullptr ? sub->help() : app.help());
    return kExitConfig;
  }

  try {
    if (c_gen->parsed()) return cmd_gen_data(gen, out);
    if (c_ins->parsed()) return cmd_inspect_psv(ins, out);
    if (c_train->parsed()) return cmd_train(tr, out);
    if (c_render->parsed()) return cmd_render(rd, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GeometryError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace grvs
