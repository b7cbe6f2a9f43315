// bench: run the Monte Carlo benchmark, re-emit summaries, dump every
// intermediate artifact of a single replication, or print the configuration.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gsv/bench.hpp"
#include "gsv/config.hpp"
#include "gsv/gs_validator.hpp"
#include "gsv/kernels.hpp"
#include "gsv/market_sim.hpp"
#include "gsv/report.hpp"
#include "gsv/rng.hpp"
#include "gsv/shift_weights.hpp"

namespace fs = std::filesystem;
using namespace gsv;

namespace {

std::vector<int> parse_scenarios(const std::string& s) {
  if (s == "all") return {1, 2};
  if (s == "1") return {1};
  if (s == "2") return {2};
  throw CLI::ValidationError("--scenario", "expected 1, 2 or all");
}

std::vector<Method> parse_methods(const std::string& s) {
  std::vector<Method> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_method(item));
  if (out.empty()) throw std::invalid_argument("--methods: empty method list");
  return out;
}

void select_kernels(const std::string& name) {
  if (name == "auto") return;
  if (name == "scalar") kernels::set_backend(kernels::Backend::scalar);
  else if (name == "avx2") kernels::set_backend(kernels::Backend::avx2);
  else throw std::invalid_argument("--kernels must be auto, scalar or avx2");
}

BenchConfig config_or_default(const std::string& path) { return path.empty() ? default_config() : load_config(path); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_run(const std::string& config_path, const std::string& scenario, const std::string& methods,
            std::size_t reps, std::uint64_t seed, const fs::path& out_dir, std::size_t parallelism) {
  const BenchConfig cfg = config_or_default(config_path);
  const auto scen = parse_scenarios(scenario);
  const auto meth = parse_methods(methods);
  fs::create_directories(out_dir);

  const BenchRun run = run_benchmark(cfg, reps, meth, scen, parallelism, seed);
  const auto summary = summarize(run.rows);

  std::ostringstream raw;
  write_raw_csv(raw, run.rows);
  write_file(out_dir / "raw.csv", raw.str());
  emit_report(out_dir, summary, ReportFormat::csv, run.gamma);
  const fs::path md = emit_report(out_dir, summary, ReportFormat::markdown, run.gamma);

  nlohmann::json meta = {{"gamma", run.gamma},
                         {"seed", seed},
                         {"reps", reps},
                         {"scenario", scenario},
                         {"methods", methods},
                         {"kernels", kernels::backend_name(kernels::active().backend)},
                         {"config", config_to_json(cfg)}};
  write_file(out_dir / "run.json", meta.dump(2) + "\n");

  std::ifstream in(md);
  std::cout << in.rdbuf();
  if (run.failures) std::cout << run.failures << " replication(s) failed and were excluded\n";
  return 0;
}

int cmd_report(const fs::path& in_dir, const std::string& format) {
  const ReportFormat fmt = parse_report_format(format);
  std::ifstream raw(in_dir / "raw.csv");
  if (!raw) throw std::runtime_error("cannot open " + (in_dir / "raw.csv").string());
  const auto rows = read_raw_csv(raw);
  const auto summary = summarize(rows);
  std::optional<double> gamma;
  if (std::ifstream meta(in_dir / "run.json"); meta) gamma = nlohmann::json::parse(meta).at("gamma").get<double>();
  const fs::path out = emit_report(in_dir, summary, fmt, gamma);
  std::ifstream in(out);
  std::cout << in.rdbuf();
  return 0;
}

int cmd_inspect(const std::string& config_path, int scenario, std::size_t rep, std::uint64_t seed,
                const std::string& method_name_arg, const fs::path& out_dir) {
  const BenchConfig cfg = config_or_default(config_path);
  const Method method = parse_method(method_name_arg);
  if (method == Method::iw_cv) throw std::invalid_argument("inspect supports new, old-ngs and iw-plugin");
  fs::create_directories(out_dir);
  const double gamma = benchmark_gamma(cfg, seed);
  const ScenarioFolds folds =
      make_scenario(scenario, cfg.market, derive_seed(seed, {static_cast<std::uint64_t>(scenario), rep}));
  for (const auto& [name, series] : {std::pair{"train.csv", &folds.train},
                                     std::pair{"validation.csv", &folds.validation},
                                     std::pair{"test.csv", &folds.test}}) {
    std::ofstream out(out_dir / name);
    write_series_csv(out, *series);
  }

  std::optional<WeightedSample> val, train;
  if (method == Method::old_ngs) {
    val = WeightedSample::uniform(folds.validation);
    train = WeightedSample::uniform(folds.train);
  } else {
    const auto [early, late] = split_early_late(folds.validation, cfg.market.recent_fraction);
    const RatioModel model = fit_ratio_model(early, late, cfg.ratio);
    write_file(out_dir / "ratio_model.json", ratio_model_to_json(model).dump(2) + "\n");
    val = compute_weights(model, folds.validation);
    train = blended_training_weights(model, folds.train, cfg.train_weight_blend);
  }

  CandidateMenuConfig mc{cfg.delta_grid, cfg.n_dirichlet, cfg.market.alpha, gamma, cfg.solver};
  const auto menu = generate_candidates(
      *train, mc, derive_seed(seed, {label_hash("menu"), static_cast<std::uint64_t>(scenario), rep}));
  {
    std::ofstream out(out_dir / "menu.csv");
    write_candidate_menu_csv(out, menu);
  }
  ValidatorParams vp;
  vp.alpha = cfg.market.alpha;
  vp.beta = cfg.market.beta;
  vp.gamma = gamma;
  vp.delta_min = cfg.delta_min;
  vp.delta_max = cfg.delta_max;
  vp.bootstrap_draws = cfg.bootstrap_draws;
  vp.block_length = cfg.block_length;
  vp.n_eff_min = cfg.n_eff_min;
  vp.seed = derive_seed(seed, {label_hash(gsv::method_name(method)), static_cast<std::uint64_t>(scenario), rep});
  const ValidationReport report = method == Method::new_method ? validate_and_select(menu, *val, vp)
                                  : method == Method::old_ngs  ? old_ngs_validate(menu, folds.validation, vp)
                                                               : iw_plugin_select(menu, *val, vp);
  std::ofstream out(out_dir / "validation_report.csv");
  write_validation_report_csv(out, report);
  std::cout << "gamma " << gamma << ", " << menu.size() << " candidates, decision " << decision_name(report.decision)
            << "\nwritten to " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CVaR portfolio selection benchmark with shift-aware validation"};
  app.require_subcommand(1);
  std::string kernels_name = "auto";
  bool verbose = false;
  app.add_option("--kernels", kernels_name, "Kernel backend: auto, scalar or avx2")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Log progress and per-radius warnings");

  std::string config_path, scenario = "all", methods = "new,old-ngs,iw-cv";
  std::size_t reps = 100, parallelism = 1, rep = 0;
  std::uint64_t seed = 20240501;
  std::string out_dir = "bench_out", in_dir, format = "markdown", method = "new";
  int one_scenario = 1;

  auto* run = app.add_subcommand("run", "Run replications and write raw.csv, summary.md, summary.csv");
  run->add_option("--config", config_path, "JSON config (defaults built in)")->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "1, 2 or all")->capture_default_str();
  run->add_option("--methods", methods, "Comma list of new, old-ngs, iw-cv, iw-plugin")->capture_default_str();
  run->add_option("--reps", reps, "Replications per (method, scenario)")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed")->capture_default_str();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--parallelism", parallelism, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Re-aggregate raw.csv into a summary");
  report->add_option("--in", in_dir, "Directory holding raw.csv")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", format, "markdown or csv")->capture_default_str();

  auto* inspect = app.add_subcommand("inspect", "Dump folds, ratio model, menu and validation report of one replication");
  inspect->add_option("--config", config_path, "JSON config (defaults built in)")->check(CLI::ExistingFile);
  inspect->add_option("--scenario", one_scenario, "1 or 2")->capture_default_str()->check(CLI::Range(1, 2));
  inspect->add_option("--rep", rep, "Replication index")->capture_default_str();
  inspect->add_option("--seed", seed, "Master seed")->capture_default_str();
  inspect->add_option("--method", method, "new, old-ngs or iw-plugin")->capture_default_str();
  inspect->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* show = app.add_subcommand("config", "Print the effective configuration as JSON");
  show->add_option("--config", config_path, "JSON config to load (defaults built in)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::err);
  try {
    select_kernels(kernels_name);
    if (*run) return cmd_run(config_path, scenario, methods, reps, seed, out_dir, parallelism);
    if (*report) return cmd_report(in_dir, format);
    if (*show) {
      std::cout << config_to_json(config_or_default(config_path)).dump(2) << '\n';
      return 0;
    }
    return cmd_inspect(config_path, one_scenario, rep, seed, method, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
}
