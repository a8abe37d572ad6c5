// Command-line harness: synthetic data generation, fusion, training,
// evaluation and the full multi-seed experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "shaftpower/checkpoint.hpp"
#include "shaftpower/errors.hpp"
#include "shaftpower/experiment.hpp"
#include "shaftpower/features.hpp"
#include "shaftpower/metrics.hpp"
#include "shaftpower/records.hpp"
#include "shaftpower/synthgen.hpp"
#include "shaftpower/timeutil.hpp"
#include "shaftpower/weather.hpp"

namespace fs = std::filesystem;
using namespace shaftpower;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string data_dir;
  std::string vessel;
  std::string checkpoint;
  std::string dataset = "noon";
  std::string grid;
  std::string nmae_denominator;
  std::optional<int> threads;
  bool reinit_head = false;
  bool encode_directions = false;
  bool no_sensor_outlier_cut = false;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

/// Experiment configuration: defaults, then the JSON file, then flags.
experiment::ExperimentConfig resolve_config(const Options& o) {
  experiment::ExperimentConfig c;
  if (!o.config_path.empty()) c = experiment::config_from_json(read_json_file(o.config_path), c);
  if (!o.data_dir.empty()) c.data_dir = o.data_dir;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.seed) c.seeds = {*o.seed};
  if (o.reinit_head) c.reinit_head = true;
  if (o.encode_directions) c.encode_directions = true;
  if (o.no_sensor_outlier_cut) c.sensor_outlier_cut = false;
  if (o.threads) c.threads = *o.threads;
  if (!o.nmae_denominator.empty()) {
    c = experiment::config_from_json({{"nmae_denominator", o.nmae_denominator}}, c);
  }
  if (c.seeds.empty()) throw ConfigError("seed list must not be empty");
  return c;
}

std::uint64_t single_seed(const experiment::ExperimentConfig& c) { return c.seeds.front(); }

struct VesselContext {
  experiment::FleetIndex index;
  data::VesselMeta meta;
  std::optional<weather::WeatherGrid> grid;
  experiment::VesselDataset dataset;
};

VesselContext load_vessel(const experiment::ExperimentConfig& c, const std::string& vessel,
                          bool need_sensor) {
  if (vessel.empty()) throw ConfigError("--vessel is required");
  VesselContext ctx;
  ctx.index = experiment::load_fleet_index(c.data_dir);
  bool found = false;
  for (const auto& v : ctx.index.vessels) {
    if (v.vessel_id == vessel) {
      ctx.meta = v;
      found = true;
    }
  }
  if (!found) throw ConfigError(fmt::format("vessel '{}' is not listed in fleet.json", vessel));
  if (need_sensor) ctx.grid = weather::load_grid((fs::path(c.data_dir) / ctx.index.weather_grid).string());
  ctx.dataset = experiment::prepare_vessel(c.data_dir, ctx.index, ctx.meta,
                                           ctx.grid ? &*ctx.grid : nullptr, c);
  return ctx;
}

fs::path checkpoint_dir(const experiment::ExperimentConfig& c) {
  const auto dir = fs::path(c.out_dir) / "checkpoints";
  fs::create_directories(dir);
  return dir;
}

void save_model(const experiment::ExperimentConfig& c, const experiment::TrainedModel& m,
                const std::string& stem) {
  const auto dir = checkpoint_dir(c);
  save_checkpoint((dir / (stem + ".json")).string(), m.checkpoint);
  std::ofstream(dir / (stem + ".report.json")) << train::report_to_json(m.report);
  fmt::print("best epoch {} of {}, validation MAE {:.6g} (scaled)\n", m.report.best_epoch,
             m.report.val_loss_history.size(), m.report.best_val_loss);
  fmt::print("checkpoint: {}\n", (dir / (stem + ".json")).string());
}

void print_metrics(const std::string& label, const metrics::MetricsReport& r) {
  fmt::print("{}: n={} MAE={:.4f} NMAE={:.5f} MAPE={:.4f} R2={:.5f}\n", label, r.n, r.mae, r.nmae,
             r.mape, r.r2);
}

const features::FeatureMatrix& pick(const experiment::VesselDataset& d, const std::string& dataset,
                                    bool test) {
  if (dataset == "sensor") return test ? d.sensor_test : d.sensor_train;
  if (dataset == "noon") return test ? d.noon_test : d.noon_train;
  throw ConfigError(fmt::format("--dataset must be 'sensor' or 'noon', got '{}'", dataset));
}

int cmd_gen_synth(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(0);
  const auto out = o.out_dir.empty() ? std::string("data") : o.out_dir;
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) j = read_json_file(o.config_path);
  const auto fleet = synth::fleet_from_json(j, seed);
  synth::write_fleet(out, fleet);
  fmt::print("wrote {} vessels to {}\n", fleet.vessels.size(), out);
  return 0;
}

int cmd_fuse(const Options& o) {
  const auto c = resolve_config(o);
  if (o.vessel.empty()) throw ConfigError("--vessel is required");
  const auto index = experiment::load_fleet_index(c.data_dir);
  const auto grid_path = o.grid.empty() ? (fs::path(c.data_dir) / index.weather_grid).string() : o.grid;
  const auto grid = weather::load_grid(grid_path);
  const auto sensor =
      data::load_sensor_csv((fs::path(c.data_dir) / index.sensor_dir / (o.vessel + ".csv")).string());
  for (const auto& r : sensor.rejects) fmt::print(stderr, "line {}: {}\n", r.line, r.message);
  const auto fused = weather::fuse(sensor.records, grid);
  for (const auto& r : fused.rejects) fmt::print(stderr, "{}: {}\n", format_iso8601(r.record.time()), r.reason);
  const auto dir = fs::path(c.out_dir) / "fused";
  fs::create_directories(dir);
  const auto path = (dir / (o.vessel + ".csv")).string();
  data::write_sensor_csv(path, fused.enriched);
  fmt::print("fused {} records ({} outside the grid) -> {}\n", fused.enriched.size(),
             fused.rejects.size(), path);
  return 0;
}

int cmd_train_baseline(const Options& o) {
  const auto c = resolve_config(o);
  const auto ctx = load_vessel(c, o.vessel, true);
  auto cfg = c.baseline;
  cfg.seed = single_seed(c);
  const auto model = experiment::train_from_scratch(ctx.dataset.sensor_train, cfg, c.hidden_layers,
                                                    c.encode_directions, c.baseline_center_targets,
                                                    o.vessel + "/sensor");
  save_model(c, model, fmt::format("{}_sensor_seed{}", o.vessel, cfg.seed));
  print_metrics("sensor test",
                experiment::evaluate_model(model.checkpoint, ctx.dataset.sensor_test, c.nmae_denominator));
  return 0;
}

int cmd_train_scratch(const Options& o) {
  const auto c = resolve_config(o);
  const auto ctx = load_vessel(c, o.vessel, false);
  auto cfg = c.scratch;
  cfg.seed = single_seed(c);
  const auto model = experiment::train_from_scratch(ctx.dataset.noon_train, cfg, c.hidden_layers,
                                                    c.encode_directions, c.scratch_center_targets,
                                                    o.vessel + "/noon-scratch");
  save_model(c, model, fmt::format("{}_scratch_seed{}", o.vessel, cfg.seed));
  print_metrics("noon test",
                experiment::evaluate_model(model.checkpoint, ctx.dataset.noon_test, c.nmae_denominator));
  return 0;
}

int cmd_finetune(const Options& o) {
  const auto c = resolve_config(o);
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint (the base model) is required");
  const auto base = load_checkpoint(o.checkpoint);
  auto cfg = c.finetune;
  cfg.seed = single_seed(c);
  cfg.reinit_head = c.reinit_head;
  auto run = c;
  run.encode_directions = base.encode_directions;
  const auto ctx = load_vessel(run, o.vessel, false);
  const auto model = experiment::train_transfer(base, ctx.dataset.noon_train, cfg, o.vessel + "/noon-tl");
  save_model(c, model, fmt::format("{}_tl_seed{}", o.vessel, cfg.seed));
  print_metrics("noon test",
                experiment::evaluate_model(model.checkpoint, ctx.dataset.noon_test, c.nmae_denominator));
  return 0;
}

int cmd_evaluate(const Options& o) {
  auto c = resolve_config(o);
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const auto model = load_checkpoint(o.checkpoint);
  c.encode_directions = model.encode_directions;
  const auto ctx = load_vessel(c, o.vessel, o.dataset == "sensor");
  const auto& test = pick(ctx.dataset, o.dataset, true);
  const auto r = experiment::evaluate_model(model, test, c.nmae_denominator);
  print_metrics(o.dataset + " test", r);
  const auto dir = fs::path(c.out_dir) / "tables";
  fs::create_directories(dir);
  const auto path = dir / fmt::format("evaluate_{}_{}.csv", o.vessel, o.dataset);
  std::ofstream(path) << "vessel,dataset,checkpoint,mae,nmae,mape,r2,n\n"
                      << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", o.vessel,
                                     o.dataset, fs::path(o.checkpoint).filename().string(), r.mae,
                                     r.nmae, r.mape, r.r2, r.n);
  return 0;
}

int cmd_correlations(const Options& o) {
  const auto c = resolve_config(o);
  const auto ctx = load_vessel(c, o.vessel, o.dataset == "sensor");
  const auto& train = pick(ctx.dataset, o.dataset, false);
  const auto report = features::correlation_report(train);
  for (const auto& r : report) fmt::print("{:<20} {:+.4f}\n", r.feature, r.r);
  const auto dir = fs::path(c.out_dir) / "tables";
  fs::create_directories(dir);
  features::write_correlation_csv(
      (dir / fmt::format("correlations_{}_{}.csv", o.vessel, o.dataset)).string(), report);
  return 0;
}

int cmd_full_experiment(const Options& o) {
  const auto c = resolve_config(o);
  const auto result = experiment::run_full_experiment(c);
  std::ifstream summary(fs::path(c.out_dir) / "tables" / "summary.txt");
  std::cout << summary.rdbuf();
  fmt::print("base vessel: {}; outputs in {}\n", result.base_vessel, c.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shaft-power transfer learning from sensor data to noon reports"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file");
    sub->add_option("--seed", o.seed, "Single seed (overrides --seeds)");
    sub->add_option("--seeds", o.seeds, "Comma-separated seed list")->delimiter(',');
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--data-dir", o.data_dir, "Fleet data directory (contains fleet.json)");
    sub->add_option("--nmae-denominator", o.nmae_denominator, "range (default) or mean")
        ->check(CLI::IsMember({"range", "mean"}));
    sub->add_flag("--encode-directions", o.encode_directions, "Encode directions as sin/cos pairs");
    sub->add_flag("--no-sensor-outlier-cut", o.no_sensor_outlier_cut,
                  "Keep sensor rows above 12000 kW");
  };
  auto vessel = [&](CLI::App* sub) { sub->add_option("--vessel", o.vessel, "Vessel id"); };

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic fleet");
  gen->add_option("--config", o.config_path, "Fleet JSON (preset, seed, overrides)");
  gen->add_option("--seed", o.seed, "Fleet seed");
  gen->add_option("--out-dir", o.out_dir, "Directory to write the fleet to");

  auto* fuse = app.add_subcommand("fuse", "Attach weather to a vessel's sensor stream");
  common(fuse);
  vessel(fuse);
  fuse->add_option("--grid", o.grid, "Weather grid JSON (defaults to the fleet's grid)");

  auto* baseline = app.add_subcommand("train-baseline", "Train a model on a vessel's sensor data");
  common(baseline);
  vessel(baseline);

  auto* finetune = app.add_subcommand("finetune", "Fine-tune a base model on a vessel's noon reports");
  common(finetune);
  vessel(finetune);
  finetune->add_option("--checkpoint", o.checkpoint, "Base model checkpoint");
  finetune->add_flag("--reinit-head", o.reinit_head, "Re-initialize the output layer");

  auto* scratch = app.add_subcommand("train-scratch", "Train a model on a vessel's noon reports only");
  common(scratch);
  vessel(scratch);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a vessel's test split");
  common(evaluate);
  vessel(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  evaluate->add_option("--dataset", o.dataset, "sensor or noon")->check(CLI::IsMember({"sensor", "noon"}));

  auto* full = app.add_subcommand("full-experiment", "Run the multi-seed comparison end to end");
  common(full);
  full->add_flag("--reinit-head", o.reinit_head, "Re-initialize the output layer when fine-tuning");
  full->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* corr = app.add_subcommand("correlations", "Pearson correlation of each feature with power");
  common(corr);
  vessel(corr);
  corr->add_option("--dataset", o.dataset, "sensor or noon")->check(CLI::IsMember({"sensor", "noon"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(o);
    if (fuse->parsed()) return cmd_fuse(o);
    if (baseline->parsed()) return cmd_train_baseline(o);
    if (finetune->parsed()) return cmd_finetune(o);
    if (scratch->parsed()) return cmd_train_scratch(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (full->parsed()) return cmd_full_experiment(o);
    if (corr->parsed()) return cmd_correlations(o);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
