// Command-line front end: synthetic data, both training stages, inference,
// evaluation and plots.

#include "lfsr/pipeline.hpp"
#include "lfsr/plot.hpp"
#include "lfsr/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lfsr;

namespace {

struct Common {
  int alpha = 2;
  std::string angular = "7x7";
  std::uint64_t seed = 1;
  fs::path out = ".";

  std::pair<Index, Index> angular_res() const {
    static const std::regex re(R"((\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(angular, m, re)) throw Error("--angular must look like MxN, got '" + angular + "'");
    return {std::stoll(m[1]), std::stoll(m[2])};
  }
};

void add_common(CLI::App* app, Common& c, bool with_alpha = true) {
  if (with_alpha) app->add_option("--alpha", c.alpha, "Upscale factor")->check(CLI::IsMember({2, 4}))->capture_default_str();
  app->add_option("--angular", c.angular, "Angular resolution MxN")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed (falls back to LFSR_SEED)")->envname("LFSR_SEED")->capture_default_str();
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--config", "key=value file overriding defaults; flags override the file");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"'");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\"'") - b + 1);
}

/// Expands `--config FILE` into `--key value` pairs placed right after the
/// subcommand, so anything given on the command line comes later and wins.
/// Keys may use '_' or '-'; blank lines, '#'/';' comments and [section]
/// headers are ignored.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string file;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty() || args.size() < 2) return args;
  std::ifstream in(file);
  if (!in) throw CLI::FileError::Missing(file);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    injected.push_back("--" + key);
    injected.push_back(trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

/// A scene directory, or a directory whose subdirectories are scenes.
std::vector<fs::path> scene_dirs(const fs::path& root) {
  if (fs::exists(root / "meta.json")) return {root};
  std::vector<fs::path> dirs;
  if (fs::is_directory(root))
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
  if (dirs.empty()) throw Error("no scenes found under " + root.string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<Scene> load_scenes(const fs::path& root) {
  std::vector<Scene> scenes;
  for (const auto& d : scene_dirs(root)) scenes.push_back(load_scene(d));
  return scenes;
}

std::vector<LightField<float>> lumas(const std::vector<Scene>& scenes) {
  std::vector<LightField<float>> out;
  for (const auto& s : scenes) out.push_back(s.luma);
  return out;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f << s;
}

void write_trace(const fs::path& p, const TrainState& s) {
  std::ostringstream os;
  os.precision(17);
  os << (s.lr_trace.empty() ? "iteration,loss\n" : "iteration,loss,l_r,l_e\n");
  for (std::size_t i = 0; i < s.loss_trace.size(); ++i) {
    os << i << ',' << s.loss_trace[i];
    if (i < s.lr_trace.size()) os << ',' << s.lr_trace[i] << ',' << s.le_trace[i];
    os << '\n';
  }
  write_text(p, os.str());
}

std::mt19937_64 train_rng(std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  return std::mt19937_64(seq);
}

struct TrainOpts {
  fs::path scenes;
  fs::path resume;
  int epochs = TrainConfig{}.epochs;
  double lr_init = TrainConfig{}.lr_init;
  double lr_decay = TrainConfig{}.lr_decay;
  int decay_every = TrainConfig{}.decay_every;
  Index patch = TrainConfig{}.patch_hr;
  int checkpoint_every = TrainConfig{}.checkpoint_every;
  int keep = TrainConfig{}.keep_checkpoints;
  double lambda_epi = TrainConfig{}.lambda_epi;
  Index channels = 64;
};

void add_train_opts(CLI::App* app, TrainOpts& t) {
  app->add_option("--scenes", t.scenes, "Training scene directory (or directory of scenes)")->required();
  app->add_option("--resume", t.resume, "Checkpoint to resume from");
  app->add_option("--epochs", t.epochs)->capture_default_str();
  app->add_option("--lr-init", t.lr_init)->capture_default_str();
  app->add_option("--lr-decay", t.lr_decay)->capture_default_str();
  app->add_option("--decay-every", t.decay_every)->capture_default_str();
  app->add_option("--patch", t.patch, "HR patch size")->capture_default_str();
  app->add_option("--checkpoint-every", t.checkpoint_every)->capture_default_str();
  app->add_option("--keep", t.keep, "Rotating checkpoints kept")->capture_default_str();
  app->add_option("--channels", t.channels)->capture_default_str();
}

TrainConfig make_train_config(int stage, const Common& c, const TrainOpts& t) {
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.alpha = c.alpha;
  std::tie(cfg.angular_rows, cfg.angular_cols) = c.angular_res();
  cfg.seed = c.seed;
  cfg.epochs = t.epochs;
  cfg.lr_init = t.lr_init;
  cfg.lr_decay = t.lr_decay;
  cfg.decay_every = t.decay_every;
  cfg.patch_hr = t.patch;
  cfg.checkpoint_every = t.checkpoint_every;
  cfg.keep_checkpoints = t.keep;
  cfg.lambda_epi = t.lambda_epi;
  cfg.validate();
  return cfg;
}

template <typename Model>
EpochHook checkpoint_hook(const Model& model, const TrainConfig& cfg, CheckpointRotation& rot) {
  return [&model, &cfg, &rot](int epoch, const TrainState& s) {
    if (epoch % cfg.checkpoint_every != 0) return;
    const auto path = rot.next_path(epoch);
    save_checkpoint(path, model, &cfg, &s);
    rot.commit(path);
    std::cout << "epoch " << epoch << " loss " << s.loss_trace.back() << " -> " << path.string() << "\n";
  };
}

int run_generate(const Common& c, double disparity, Index size, const std::string& name) {
  const auto [m, n] = c.angular_res();
  const Scene scene = make_synthetic_scene(size, m, n, disparity, c.seed, name);
  save_scene(c.out, scene);
  std::cout << "wrote " << m * n << " views to " << c.out.string() << "\n";
  return 0;
}

int run_train_sr(const Common& c, const TrainOpts& t, AtoConfig acfg) {
  TrainConfig cfg = make_train_config(1, c, t);
  const auto scenes = load_scenes(t.scenes);
  fs::create_directories(c.out);
  acfg.alpha = cfg.alpha;
  acfg.angular_rows = cfg.angular_rows;
  acfg.angular_cols = cfg.angular_cols;
  acfg.channels = t.channels;

  std::optional<AtoModel<float>> model;
  TrainState state;
  state.rng = train_rng(cfg.seed);
  if (!t.resume.empty()) {
    auto loaded = load_ato_checkpoint(t.resume);
    if (!loaded.state) throw Error(t.resume.string() + " carries no training state");
    model.emplace(std::move(loaded.model));
    state = std::move(*loaded.state);
  } else {
    model.emplace(acfg, cfg.seed);
  }
  CheckpointRotation rot(c.out, "sr", cfg.keep_checkpoints);
  train_stage1(lumas(scenes), cfg, *model, state, checkpoint_hook(*model, cfg, rot));
  save_checkpoint(c.out / "sr_model.ckpt", *model, &cfg, &state);
  write_trace(c.out / "sr_loss.csv", state);
  std::cout << "sr model: " << model->params().count() << " parameters, " << state.loss_trace.size()
            << " iterations -> " << (c.out / "sr_model.ckpt").string() << "\n";
  return 0;
}

int run_train_reg(const Common& c, const TrainOpts& t, const fs::path& sr_model, int n5, double tail_gain) {
  TrainConfig cfg = make_train_config(2, c, t);
  const auto scenes = load_scenes(t.scenes);
  fs::create_directories(c.out);
  const auto ato = load_ato_checkpoint(sr_model);
  if (ato.model.config().alpha != cfg.alpha) throw Error("alpha mismatch between --alpha and " + sr_model.string());
  const auto hr = lumas(scenes);
  const auto inter = stage2_inputs(hr, ato.model);

  RegConfig rcfg;
  rcfg.n5 = n5;
  rcfg.channels = t.channels;
  rcfg.angular_rows = cfg.angular_rows;
  rcfg.angular_cols = cfg.angular_cols;
  std::optional<RegModel<float>> model;
  TrainState state;
  state.rng = train_rng(cfg.seed);
  if (!t.resume.empty()) {
    auto loaded = load_reg_checkpoint(t.resume);
    if (!loaded.state) throw Error(t.resume.string() + " carries no training state");
    model.emplace(std::move(loaded.model));
    state = std::move(*loaded.state);
  } else {
    model.emplace(rcfg, cfg.seed, tail_gain);
  }
  CheckpointRotation rot(c.out, "reg", cfg.keep_checkpoints);
  train_stage2(hr, inter, cfg, *model, state, checkpoint_hook(*model, cfg, rot));
  save_checkpoint(c.out / "reg_model.ckpt", *model, &cfg, &state);
  write_trace(c.out / "reg_loss.csv", state);
  std::cout << "reg model: " << model->params().count() << " parameters, " << state.loss_trace.size()
            << " iterations -> " << (c.out / "reg_model.ckpt").string() << "\n";
  return 0;
}

int run_super_resolve(const Common& c, const fs::path& input, const fs::path& sr_model, const fs::path& reg_model) {
  const auto ato = load_ato_checkpoint(sr_model);
  std::optional<Loaded<RegModel<float>>> reg;
  if (!reg_model.empty()) reg.emplace(load_reg_checkpoint(reg_model));
  const auto dirs = scene_dirs(input);
  for (const auto& d : dirs) {
    const Scene lr = load_scene(d);
    const Scene sr = super_resolve(lr, ato.model, reg ? &reg->model : nullptr, c.alpha);
    const fs::path dst = dirs.size() == 1 && d == input ? c.out : c.out / d.filename();
    save_scene(dst, sr);
    std::cout << lr.name << ": " << sr.luma.angular_rows() << "x" << sr.luma.angular_cols() << "x" << sr.luma.height()
              << "x" << sr.luma.width() << " -> " << dst.string() << "\n";
  }
  return 0;
}

int run_evaluate(const Common& c, const fs::path& gt_root, const fs::path& pred_root, const fs::path& lr_root,
                 const fs::path& sr_model, const fs::path& reg_model) {
  const auto gts = load_scenes(gt_root);
  std::map<std::string, LightField<float>> lrs;
  if (!lr_root.empty())
    for (auto& s : load_scenes(lr_root)) lrs.emplace(s.name, std::move(s.luma));

  std::vector<EvalPair> pairs;
  for (const auto& g : gts) {
    EvalPair p{g.name, {}, g.luma};
    if (!lr_root.empty()) {
      auto it = lrs.find(g.name);
      if (it == lrs.end()) throw Error("unpaired scene: no LR input for " + g.name);
      p.lr = it->second;
    } else {
      p.lr = downsample_views(g.luma, c.alpha);
    }
    pairs.push_back(std::move(p));
  }

  EvalReport report;
  if (!pred_root.empty()) {
    std::map<std::string, LightField<float>> preds;
    for (auto& s : load_scenes(pred_root)) preds.emplace(s.name, std::move(s.luma));
    std::vector<SceneReport> scenes;
    for (const auto& p : pairs) {
      auto it = preds.find(p.name);
      if (it == preds.end()) throw Error("unpaired scene: no prediction for " + p.name);
      scenes.push_back(score_scene(p.name, it->second, p.gt));
    }
    report = aggregate(std::move(scenes), c.alpha, "precomputed");
  } else if (!sr_model.empty()) {
    const auto ato = load_ato_checkpoint(sr_model);
    std::optional<Loaded<RegModel<float>>> reg;
    if (!reg_model.empty()) reg.emplace(load_reg_checkpoint(reg_model));
    const RegModel<float>* r = reg ? &reg->model : nullptr;
    report = evaluate(
        pairs, [&](const LightField<float>& lr) { return super_resolve(lr, ato.model, r, c.alpha); }, c.alpha,
        r ? "all-to-one+regularizer" : "all-to-one");
  } else {
    report = evaluate(
        pairs, [&](const LightField<float>& lr) { return upsample_views(lr, c.alpha); }, c.alpha, "bicubic");
  }

  fs::create_directories(c.out);
  write_text(c.out / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(c.out / "pr.csv", pr_csv(report));
  std::cout.precision(6);
  std::cout << std::fixed;
  for (const auto& s : report.scenes) {
    std::cout << s.name << ": psnr ";
    if (std::isinf(s.psnr_mean)) std::cout << "inf"; else std::cout << s.psnr_mean;
    std::cout << " ssim " << s.ssim_mean << " center_corner_gap ";
    if (std::isfinite(s.per_view.center_corner_gap)) std::cout << s.per_view.center_corner_gap; else std::cout << "nan";
    std::cout << "\n";
  }
  std::cout << "mean: psnr ";
  if (std::isinf(report.psnr_mean)) std::cout << "inf"; else std::cout << report.psnr_mean;
  std::cout << " ssim " << report.ssim_mean << " runtime_s " << report.runtime_s << "\n";
  return 0;
}

std::vector<PrPoint> pr_from_json(const json& scene) {
  std::vector<PrPoint> pts;
  for (const auto& p : scene.at("pr_points"))
    pts.push_back({p.at("threshold").get<double>(), p.at("recall").get<double>(), p.at("precision").get<double>()});
  return pts;
}

double db_from_json(const json& v) {
  if (v.is_string()) return v.get<std::string>() == "-inf" ? -HUGE_VAL : HUGE_VAL;
  return v.get<double>();
}

int run_plot(const Common& c, const std::vector<fs::path>& reports, const std::vector<fs::path>& scenes, int cell) {
  if (reports.empty() && scenes.empty()) throw Error("plot needs --report and/or --scene");
  fs::create_directories(c.out);
  std::vector<json> docs;
  for (const auto& r : reports) {
    std::ifstream f(r);
    if (!f) throw Error("cannot read " + r.string());
    docs.push_back(json::parse(f));
  }
  if (!docs.empty()) {
    std::ostringstream legend;
    for (const auto& s : docs.front().at("scenes")) {
      const std::string name = s.at("name").get<std::string>();
      const auto& rows = s.at("per_view_psnr");
      Eigen::MatrixXd grid(static_cast<Index>(rows.size()), static_cast<Index>(rows.at(0).size()));
      for (Index m = 0; m < grid.rows(); ++m)
        for (Index n = 0; n < grid.cols(); ++n) grid(m, n) = db_from_json(rows.at(m).at(n));
      write_png(c.out / ("heatmap_" + name + ".png"), psnr_heatmap(grid, cell).planes);

      std::vector<std::vector<PrPoint>> curves;
      for (std::size_t i = 0; i < docs.size(); ++i)
        for (const auto& other : docs[i].at("scenes"))
          if (other.at("name") == name) {
            curves.push_back(pr_from_json(other));
            const auto col = palette(curves.size() - 1);
            legend << name << ',' << docs[i].value("method", reports[i].string()) << ',' << col[0] << ' ' << col[1]
                   << ' ' << col[2] << '\n';
          }
      write_png(c.out / ("pr_" + name + ".png"), pr_plot(curves).planes);
    }
    write_text(c.out / "pr_legend.csv", "scene,method,rgb\n" + legend.str());
  }
  if (!scenes.empty()) {
    // One strip per input, stacked top to bottom with a white gap.
    std::vector<Image<float>> strips;
    for (const auto& d : scenes) {
      const Scene s = load_scene(d);
      const auto& lf = s.luma;
      const Index mc = lf.angular_rows() / 2, nc = lf.angular_cols() / 2;
      strips.push_back(epi_strip(lf, EpiOrientation::horizontal, lf.height() / 2, mc));
      write_png(c.out / ("epi_" + s.name + "_h.png"), strips.back());
      write_png(c.out / ("epi_" + s.name + "_v.png"),
                Image<float>(epi_strip(lf, EpiOrientation::vertical, lf.width() / 2, nc).transpose()));
    }
    Index rows = 0, cols = 0;
    for (const auto& s : strips) {
      rows += s.rows() + 4;
      cols = std::max(cols, s.cols());
    }
    Image<float> stack = Image<float>::Ones(rows, cols);
    Index y = 0;
    for (const auto& s : strips) {
      stack.block(y, 0, s.rows(), s.cols()) = s;
      y += s.rows() + 4;
    }
    write_png(c.out / "epi_strips.png", stack);
  }
  std::cout << "plots written to " << c.out.string() << "\n";
  return 0;
}

void print_error(const std::string& command, const std::string& message) {
  std::cerr << json{{"error", message}, {"command", command}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-field spatial super-resolution"};
  app.require_subcommand(1);

  Common gen_c, sr_c, reg_c, res_c, eval_c, plot_c;

  auto* gen = app.add_subcommand("generate-synthetic", "Render a synthetic constant-disparity light field");
  add_common(gen, gen_c, false);
  double disparity = 1.0;
  Index size = 128;
  std::string name = "synthetic";
  gen->add_option("--disparity", disparity, "Pixels per angular step")->capture_default_str();
  gen->add_option("--size", size, "View height and width")->capture_default_str();
  gen->add_option("--name", name)->capture_default_str();

  auto* tsr = app.add_subcommand("train-sr", "Stage 1: train the All-to-One network");
  add_common(tsr, sr_c);
  TrainOpts sr_t;
  add_train_opts(tsr, sr_t);
  AtoConfig acfg;
  tsr->add_option("--n1", acfg.n1)->capture_default_str();
  tsr->add_option("--n2", acfg.n2)->capture_default_str();
  tsr->add_option("--n3", acfg.n3)->capture_default_str();
  tsr->add_option("--n4", acfg.n4)->capture_default_str();

  auto* treg = app.add_subcommand("train-reg", "Stage 2: train the regularizer with the stage-1 network frozen");
  add_common(treg, reg_c);
  TrainOpts reg_t;
  add_train_opts(treg, reg_t);
  fs::path reg_sr_model;
  int n5 = RegConfig{}.n5;
  double tail_gain = 1.0;
  treg->add_option("--sr-model", reg_sr_model, "Stage-1 checkpoint")->required();
  treg->add_option("--lambda-epi", reg_t.lambda_epi, "Weight of the EPI gradient loss")->capture_default_str();
  treg->add_option("--n5", n5)->capture_default_str();
  treg->add_option("--tail-gain", tail_gain, "Initial scale of the residual tail")->capture_default_str();

  auto* sres = app.add_subcommand("super-resolve", "Super-resolve a scene directory");
  add_common(sres, res_c);
  fs::path res_input, res_sr, res_reg;
  sres->add_option("--input", res_input, "Low-resolution scene (or directory of scenes)")->required();
  sres->add_option("--sr-model", res_sr)->required();
  sres->add_option("--reg-model", res_reg);

  auto* ev = app.add_subcommand("evaluate", "Score predictions or models against ground truth");
  add_common(ev, eval_c);
  fs::path ev_gt, ev_pred, ev_lr, ev_sr, ev_reg;
  ev->add_option("--gt", ev_gt, "Ground-truth scene(s)")->required();
  auto* pred_opt = ev->add_option("--pred", ev_pred, "Precomputed predictions paired by scene name");
  ev->add_option("--lr", ev_lr, "LR inputs paired by name (default: bicubic-downsampled ground truth)");
  ev->add_option("--sr-model", ev_sr, "Evaluate this model instead of bicubic")->excludes(pred_opt);
  ev->add_option("--reg-model", ev_reg)->excludes(pred_opt);

  auto* pl = app.add_subcommand("plot", "Per-view PSNR heatmaps, PR curves, EPI strips");
  add_common(pl, plot_c, false);
  std::vector<fs::path> pl_reports, pl_scenes;
  int cell = 32;
  pl->add_option("--report", pl_reports, "report.json files; PR curves are overlaid in the given order");
  pl->add_option("--scene", pl_scenes, "Scene directories for EPI strips");
  pl->add_option("--cell", cell, "Heatmap pixels per view")->capture_default_str();

  // Repeating a single-valued option keeps the last value (config, then flags).
  for (auto* sub : app.get_subcommands({}))
    for (auto* opt : sub->get_options())
      if (opt->get_items_expected_max() == 1) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string command = argc > 1 ? argv[1] : "lfsr";
  try {
    const auto args = expand_config(argc, argv);
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    print_error(subs.empty() ? command : subs.front()->get_name(), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(command, e.what());
    return 2;
  }

  command = app.get_subcommands().front()->get_name();
  try {
    if (gen->parsed()) return run_generate(gen_c, disparity, size, name);
    if (tsr->parsed()) return run_train_sr(sr_c, sr_t, acfg);
    if (treg->parsed()) return run_train_reg(reg_c, reg_t, reg_sr_model, n5, tail_gain);
    if (sres->parsed()) return run_super_resolve(res_c, res_input, res_sr, res_reg);
    if (ev->parsed()) {
      if (!ev_reg.empty() && ev_sr.empty()) throw Error("--reg-model requires --sr-model");
      return run_evaluate(eval_c, ev_gt, ev_pred, ev_lr, ev_sr, ev_reg);
    }
    if (pl->parsed()) return run_plot(plot_c, pl_reports, pl_scenes, cell);
  } catch (const std::exception& e) {
    print_error(command, e.what());
    return 1;
  }
  return 1;
}
