#include "shaftpower/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <system_error>
#include <thread>

#include <fmt/format.h>
#include <fmt/os.h>

#include "shaftpower/errors.hpp"

namespace shaftpower::experiment {
namespace fs = std::filesystem;
namespace {

std::string stage_prefix(const std::string& stage, std::optional<std::uint64_t> seed) {
  return seed ? fmt::format("stage '{}' (seed {}): ", stage, *seed)
              : fmt::format("stage '{}': ", stage);
}

/// Runs `fn`, re-throwing failures with the stage name (and seed) prepended.
template <typename Fn>
auto stage(const std::string& name, std::optional<std::uint64_t> seed, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(stage_prefix(name, seed) + e.what());
  } catch (const DataError& e) {
    throw DataError(stage_prefix(name, seed) + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(stage_prefix(name, seed) + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(stage_prefix(name, seed) + e.what());
  } catch (const std::system_error& e) {
    throw DataError(stage_prefix(name, seed) + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(stage_prefix(name, seed) + e.what());
  }
}

/// Runs fn(0..n-1) on up to `threads` workers. The exception from the lowest
/// failing index is rethrown, so failures are reported deterministically.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      run(i);
      if (errors[i]) break;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

std::string num(double v) { return fmt::format("{:.6f}", v); }

metrics::MetricsReport mean_report(const std::vector<metrics::MetricsReport>& runs) {
  const auto agg = metrics::aggregate(runs);
  return {agg.mae.mean, agg.nmae.mean, agg.mape.mean, agg.r2.mean, runs.front().n};
}

std::vector<int> architecture(int input_width, const std::vector<int>& hidden) {
  std::vector<int> dims{input_width};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return dims;
}

template <typename T>
T json_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

train::TrainConfig train_config_from_json(const nlohmann::json& j, train::TrainConfig c) {
  c.epochs = json_or(j, "epochs", c.epochs);
  c.batch_size = json_or(j, "batch_size", c.batch_size);
  c.initial_lr = json_or(j, "initial_lr", c.initial_lr);
  c.scheduler_factor = json_or(j, "scheduler_factor", c.scheduler_factor);
  c.scheduler_patience = json_or(j, "scheduler_patience", c.scheduler_patience);
  c.early_stop_patience = json_or(j, "early_stop_patience", c.early_stop_patience);
  c.min_lr = json_or(j, "min_lr", c.min_lr);
  c.validation_fraction = json_or(j, "validation_fraction", c.validation_fraction);
  c.validate();
  return c;
}

nlohmann::ordered_json train_config_to_json(const train::TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"initial_lr", c.initial_lr},
          {"scheduler_factor", c.scheduler_factor},
          {"scheduler_patience", c.scheduler_patience},
          {"early_stop_patience", c.early_stop_patience},
          {"min_lr", c.min_lr},
          {"validation_fraction", c.validation_fraction}};
}

nlohmann::ordered_json drops_to_json(const data::DropReport& d) {
  return {{"stw_below_2kn", d.low_speed},
          {"rpm_below_1", d.low_rpm},
          {"power_below_1kw", d.low_power},
          {"power_above_12000kw", d.power_outlier}};
}

}  // namespace

FleetIndex load_fleet_index(const std::string& data_dir) {
  const auto path = fs::path(data_dir) / "fleet.json";
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open fleet index '{}'", path.string()));
  FleetIndex index;
  try {
    const auto j = nlohmann::json::parse(in);
    index.split.train_end = parse_date(j.at("split_boundary").get<std::string>());
    index.weather_grid = j.value("weather_grid", index.weather_grid);
    index.sensor_dir = j.value("sensor_dir", index.sensor_dir);
    index.noon_dir = j.value("noon_dir", index.noon_dir);
    for (const auto& v : j.at("vessels")) {
      index.vessels.push_back({v.at("vessel_id").get<std::string>(),
                               data::parse_category(v.at("category").get<std::string>()),
                               v.value("length_m", 0.0), v.value("beam_m", 0.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (index.vessels.empty()) throw DataError(fmt::format("{}: no vessels listed", path.string()));
  return index;
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  try {
    c.data_dir = json_or(j, "data_dir", c.data_dir);
    c.out_dir = json_or(j, "out_dir", c.out_dir);
    c.seeds = json_or(j, "seeds", c.seeds);
    c.base_vessel = json_or(j, "base_vessel", c.base_vessel);
    c.vessels = json_or(j, "vessels", c.vessels);
    c.hidden_layers = json_or(j, "hidden_layers", c.hidden_layers);
    if (j.contains("baseline")) c.baseline = train_config_from_json(j.at("baseline"), c.baseline);
    if (j.contains("finetune")) c.finetune = train_config_from_json(j.at("finetune"), c.finetune);
    if (j.contains("scratch")) c.scratch = train_config_from_json(j.at("scratch"), c.scratch);
    c.baseline_center_targets = json_or(j, "baseline_center_targets", c.baseline_center_targets);
    c.scratch_center_targets = json_or(j, "scratch_center_targets", c.scratch_center_targets);
    c.reinit_head = json_or(j, "reinit_head", c.reinit_head);
    c.encode_directions = json_or(j, "encode_directions", c.encode_directions);
    if (j.contains("nmae_denominator")) {
      const auto d = j.at("nmae_denominator").get<std::string>();
      if (d == "range") {
        c.nmae_denominator = metrics::NmaeDenominator::kRange;
      } else if (d == "mean") {
        c.nmae_denominator = metrics::NmaeDenominator::kMean;
      } else {
        throw ConfigError(fmt::format("nmae_denominator must be 'range' or 'mean', got '{}'", d));
      }
    }
    c.sensor_outlier_cut = json_or(j, "sensor_outlier_cut", c.sensor_outlier_cut);
    c.threads = json_or(j, "threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed experiment configuration: {}", e.what()));
  }
  if (c.seeds.empty()) throw ConfigError("seed list must not be empty");
  return c;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seeds"] = c.seeds;
  j["base_vessel"] = c.base_vessel;
  j["vessels"] = c.vessels;
  j["hidden_layers"] = c.hidden_layers;
  j["baseline"] = train_config_to_json(c.baseline);
  j["finetune"] = train_config_to_json(c.finetune);
  j["scratch"] = train_config_to_json(c.scratch);
  j["scratch_note"] =
      "from-scratch noon models use the baseline recipe with batch size 16 (harness choice)";
  j["baseline_center_targets"] = c.baseline_center_targets;
  j["scratch_center_targets"] = c.scratch_center_targets;
  j["reinit_head"] = c.reinit_head;
  j["encode_directions"] = c.encode_directions;
  j["nmae_denominator"] = c.nmae_denominator == metrics::NmaeDenominator::kRange ? "range" : "mean";
  j["sensor_outlier_cut"] = c.sensor_outlier_cut;
  return j;
}

VesselDataset prepare_vessel(const std::string& data_dir, const FleetIndex& index,
                             const data::VesselMeta& meta, const weather::WeatherGrid* grid,
                             const ExperimentConfig& config) {
  VesselDataset ds;
  ds.meta = meta;
  const fs::path root(data_dir);
  const features::FeatureOptions feature_options{config.encode_directions};
  const auto& id = meta.vessel_id;

  if (grid != nullptr) {
    const auto sensor = stage("load", std::nullopt, [&] {
      return data::load_sensor_csv((root / index.sensor_dir / (id + ".csv")).string());
    });
    ds.sensor_rows_read = sensor.records.size() + sensor.rejects.size();
    ds.sensor_rows_rejected = sensor.rejects.size();
    const auto fused = stage("fuse", std::nullopt, [&] { return weather::fuse(sensor.records, *grid); });
    ds.fuse_rejects = fused.rejects.size();
    data::PreprocessOptions options;
    options.apply_power_outlier_cut = config.sensor_outlier_cut;
    const auto clean = data::preprocess(fused.enriched, options);
    ds.sensor_drops = clean.report;
    const auto split = stage("split", std::nullopt, [&] {
      return data::temporal_split(clean.kept, index.split);
    });
    ds.sensor_train = features::build_features(split.train, feature_options).matrix;
    ds.sensor_test = features::build_features(split.test, feature_options).matrix;
  }

  const auto noon = stage("load", std::nullopt, [&] {
    return data::load_noon_csv((root / index.noon_dir / (id + ".csv")).string());
  });
  ds.noon_rows_read = noon.records.size() + noon.rejects.size();
  ds.noon_rows_rejected = noon.rejects.size();
  const auto clean = data::preprocess(noon.records);
  ds.noon_drops = clean.report;
  const auto split = stage("split", std::nullopt, [&] {
    return data::temporal_split(clean.kept, index.split);
  });
  ds.noon_train = features::build_features(split.train, feature_options).matrix;
  ds.noon_test = features::build_features(split.test, feature_options).matrix;
  return ds;
}

TrainedModel train_from_scratch(const features::FeatureMatrix& train_raw,
                                const train::TrainConfig& config,
                                const std::vector<int>& hidden_layers, bool encode_directions,
                                bool center_targets, const std::string& tag) {
  const auto scaled = features::standardize(train_raw, center_targets);
  const auto dims = architecture(static_cast<int>(train_raw.width()), hidden_layers);
  const auto init = nn::init_params(dims, config.seed);
  auto result = train::train(init, scaled, config, nn::FreezeMask::all_trainable(init.num_layers()));
  return {{std::move(result.params), scaled.stats, encode_directions, config.seed, tag},
          std::move(result.report)};
}

TrainedModel train_transfer(const Checkpoint& base, const features::FeatureMatrix& train_raw,
                            const train::TrainConfig& config, const std::string& tag) {
  const auto scaled = features::apply_standardization(train_raw, base.stats);
  auto result = train::fine_tune(base.params, scaled, config);
  return {{std::move(result.params), base.stats, base.encode_directions, config.seed, tag},
          std::move(result.report)};
}

Eigen::VectorXd predict_kw(const Checkpoint& model, const features::FeatureMatrix& raw) {
  const auto scaled = features::apply_standardization(raw, model.stats);
  return features::unscale_targets(nn::predict_rows(model.params, scaled.rows), model.stats);
}

metrics::MetricsReport evaluate_model(const Checkpoint& model, const features::FeatureMatrix& raw,
                                      metrics::NmaeDenominator denominator) {
  const Eigen::VectorXd pred = predict_kw(model, raw);
  const auto n = static_cast<std::size_t>(raw.size());
  return metrics::evaluate({raw.targets.data(), n}, {pred.data(), n}, denominator);
}

std::string select_base_vessel(const std::vector<VesselScore>& scores) {
  if (scores.empty()) throw ConfigError("base selection needs at least one evaluated vessel");
  const auto best = std::min_element(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.sensor.mape != b.sensor.mape) return a.sensor.mape < b.sensor.mape;
    if (a.sensor.nmae != b.sensor.nmae) return a.sensor.nmae < b.sensor.nmae;
    return a.vessel_id < b.vessel_id;
  });
  return best->vessel_id;
}

std::uint64_t matrix_checksum(const features::FeatureMatrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const double* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < static_cast<std::size_t>(count) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const Eigen::MatrixXd rows = m.rows;
  feed(rows.data(), rows.size());
  feed(m.targets.data(), m.targets.size());
  return h;
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t vessel_index, int arm) {
  return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(vessel_index) << 16) ^
                    static_cast<std::uint64_t>(arm));
}

ExperimentResult run_full_experiment(const ExperimentConfig& config) {
  const fs::path out(config.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError(fmt::format("cannot create output directory '{}'", out.string()));
  for (const char* sub : {"tables", "plots", "checkpoints"}) {
    fs::remove_all(out / sub, ec);
    fs::create_directories(out / sub, ec);
  }

  nlohmann::ordered_json manifest;
  manifest["status"] = "running";
  manifest["config"] = config_to_json(config);
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  try {
    if (config.seeds.empty()) throw ConfigError("seed list must not be empty");
    const auto index = stage("load", std::nullopt, [&] { return load_fleet_index(config.data_dir); });
    std::vector<data::VesselMeta> selected;
    for (const auto& v : index.vessels) {
      if (config.vessels.empty() ||
          std::find(config.vessels.begin(), config.vessels.end(), v.vessel_id) != config.vessels.end()) {
        selected.push_back(v);
      }
    }
    if (selected.empty()) throw ConfigError("vessel selection matches no vessel in the fleet");

    const auto grid = stage("fuse", std::nullopt, [&] {
      return weather::load_grid((fs::path(config.data_dir) / index.weather_grid).string());
    });
    std::vector<VesselDataset> datasets;
    for (const auto& meta : selected) {
      datasets.push_back(prepare_vessel(config.data_dir, index, meta, &grid, config));
    }

    const std::size_t n_seeds = config.seeds.size();
    const std::size_t n_vessels = datasets.size();

    // Phase 1: each vessel's own sensor model and from-scratch noon model.
    std::vector<TrainedModel> sensor_models(n_seeds * n_vessels), scratch_models(n_seeds * n_vessels);
    std::vector<metrics::MetricsReport> sensor_scores(n_seeds * n_vessels),
        scratch_scores(n_seeds * n_vessels);
    parallel_for(2 * n_seeds * n_vessels, config.threads, [&](std::size_t job) {
      const std::size_t slot = job / 2;
      const std::size_t k = slot / n_vessels, v = slot % n_vessels;
      const auto seed = config.seeds[k];
      const auto& ds = datasets[v];
      if (job % 2 == 0) {
        auto cfg = config.baseline;
        cfg.seed = run_seed(seed, v, 0);
        sensor_models[slot] = stage("train-baseline", seed, [&] {
          return train_from_scratch(ds.sensor_train, cfg, config.hidden_layers,
                                    config.encode_directions, config.baseline_center_targets,
                                    ds.meta.vessel_id + "/sensor");
        });
        sensor_scores[slot] = stage("evaluate", seed, [&] {
          return evaluate_model(sensor_models[slot].checkpoint, ds.sensor_test, config.nmae_denominator);
        });
      } else {
        auto cfg = config.scratch;
        cfg.seed = run_seed(seed, v, 1);
        scratch_models[slot] = stage("train-scratch", seed, [&] {
          return train_from_scratch(ds.noon_train, cfg, config.hidden_layers,
                                    config.encode_directions, config.scratch_center_targets,
                                    ds.meta.vessel_id + "/noon-scratch");
        });
        scratch_scores[slot] = stage("evaluate", seed, [&] {
          return evaluate_model(scratch_models[slot].checkpoint, ds.noon_test, config.nmae_denominator);
        });
      }
    });

    // Base selection on seed-averaged sensor-test metrics.
    std::vector<VesselScore> scores;
    for (std::size_t v = 0; v < n_vessels; ++v) {
      std::vector<metrics::MetricsReport> runs;
      for (std::size_t k = 0; k < n_seeds; ++k) runs.push_back(sensor_scores[k * n_vessels + v]);
      scores.push_back({datasets[v].meta.vessel_id, mean_report(runs)});
    }
    const std::string base_id = stage("select-base", std::nullopt, [&] {
      if (config.base_vessel == "auto") return select_base_vessel(scores);
      for (const auto& d : datasets) {
        if (d.meta.vessel_id == config.base_vessel) return config.base_vessel;
      }
      throw ConfigError(fmt::format("base vessel '{}' is not in the selection", config.base_vessel));
    });
    std::size_t base_index = 0;
    while (datasets[base_index].meta.vessel_id != base_id) ++base_index;

    // Phase 2: fine-tune each seed's base model on every other vessel's noon data.
    std::vector<std::optional<TrainedModel>> tl_models(n_seeds * n_vessels);
    std::vector<metrics::MetricsReport> tl_scores(n_seeds * n_vessels);
    parallel_for(n_seeds * n_vessels, config.threads, [&](std::size_t slot) {
      const std::size_t k = slot / n_vessels, v = slot % n_vessels;
      if (v == base_index) return;
      const auto seed = config.seeds[k];
      auto cfg = config.finetune;
      cfg.seed = run_seed(seed, v, 2);
      cfg.reinit_head = config.reinit_head;
      const auto& base = sensor_models[k * n_vessels + base_index].checkpoint;
      const auto& ds = datasets[v];
      tl_models[slot] = stage("finetune", seed, [&] {
        return train_transfer(base, ds.noon_train, cfg, ds.meta.vessel_id + "/noon-tl");
      });
      tl_scores[slot] = stage("evaluate", seed, [&] {
        return evaluate_model(tl_models[slot]->checkpoint, ds.noon_test, config.nmae_denominator);
      });
    });

    ExperimentResult result;
    result.base_vessel = base_id;
    result.seeds = config.seeds;
    for (std::size_t v = 0; v < n_vessels; ++v) {
      VesselOutcome o;
      o.meta = datasets[v].meta;
      for (std::size_t k = 0; k < n_seeds; ++k) {
        o.sensor.push_back(sensor_scores[k * n_vessels + v]);
        o.noon_scratch.push_back(scratch_scores[k * n_vessels + v]);
        if (v != base_index) o.noon_tl.push_back(tl_scores[k * n_vessels + v]);
      }
      result.vessels.push_back(std::move(o));
    }

    stage("write", std::nullopt, [&] {
      // Checkpoints: every model of the first seed, and the base model of every seed.
      auto save = [&](const TrainedModel& m, const std::string& stem) {
        save_checkpoint((out / "checkpoints" / (stem + ".json")).string(), m.checkpoint);
        write_text(out / "checkpoints" / (stem + ".report.json"), train::report_to_json(m.report));
      };
      for (std::size_t k = 0; k < n_seeds; ++k) {
        const auto seed = config.seeds[k];
        for (std::size_t v = 0; v < n_vessels; ++v) {
          const auto& id = datasets[v].meta.vessel_id;
          const std::size_t slot = k * n_vessels + v;
          if (k == 0 || v == base_index) save(sensor_models[slot], fmt::format("{}_sensor_seed{}", id, seed));
          if (k == 0) save(scratch_models[slot], fmt::format("{}_scratch_seed{}", id, seed));
          if (k == 0 && tl_models[slot]) save(*tl_models[slot], fmt::format("{}_tl_seed{}", id, seed));
        }
      }

      const auto seeds_col = std::to_string(n_seeds);
      auto ms = [](const metrics::MeanSd& m) { return num(m.mean) + "," + num(m.sd); };

      std::string t2 =
          "vessel,category,seeds,sensor_r2_mean,sensor_r2_sd,sensor_nmae_mean,sensor_nmae_sd,"
          "sensor_mape_mean,sensor_mape_sd,noon_r2_mean,noon_r2_sd,noon_nmae_mean,noon_nmae_sd,"
          "noon_mape_mean,noon_mape_sd\n";
      std::string t3 =
          "vessel,category,seeds,scratch_r2_mean,scratch_r2_sd,scratch_mae_mean,scratch_mae_sd,"
          "scratch_mape_mean,scratch_mape_sd,tl_r2_mean,tl_r2_sd,tl_mae_mean,tl_mae_sd,"
          "tl_mape_mean,tl_mape_sd\n";
      std::string t4 =
          "vessel,category,seeds,nmae_sensor_mean,nmae_sensor_sd,nmae_tl_mean,nmae_tl_sd,"
          "nmae_noon_mean,nmae_noon_sd\n";
      std::string runs = "seed,vessel,category,arm,mae,nmae,mape,r2,n\n";
      std::string summary = fmt::format("Base vessel: {}   seeds: {}\n\n", base_id, n_seeds);
      summary += fmt::format("{:<8} {:>16} {:>16} {:>16} | {:>16} {:>16} {:>16}\n", "Sensor/Noon",
                             "R2", "NMAE", "MAPE", "R2", "NMAE", "MAPE");
      std::string s3 = fmt::format("\n{:<8} {:>16} {:>18} {:>16} | {:>16} {:>18} {:>16}\n",
                                   "Scratch/TL", "R2", "MAE", "MAPE", "R2", "MAE", "MAPE");
      std::string s4 = fmt::format("\n{:<8} {:>18} {:>18} {:>18}\n", "Vessel", "NMAE sensor",
                                   "NMAE noon TL", "NMAE noon");
      auto pm = [](const metrics::MeanSd& m, int prec) {
        return fmt::format("{:.{}f} ± {:.{}f}", m.mean, prec, m.sd, prec);
      };

      for (const auto& o : result.vessels) {
        const auto& id = o.meta.vessel_id;
        const auto cat = data::to_string(o.meta.category);
        const auto sensor = metrics::aggregate(o.sensor);
        const auto noon = metrics::aggregate(o.noon_scratch);
        t2 += fmt::format("{},{},{},{},{},{},{},{},{}\n", id, cat, seeds_col, ms(sensor.r2),
                          ms(sensor.nmae), ms(sensor.mape), ms(noon.r2), ms(noon.nmae), ms(noon.mape));
        summary += fmt::format("{:<8} {:>16} {:>16} {:>16} | {:>16} {:>16} {:>16}\n", id,
                               pm(sensor.r2, 2), pm(sensor.nmae, 3), pm(sensor.mape, 2),
                               pm(noon.r2, 2), pm(noon.nmae, 3), pm(noon.mape, 2));
        for (std::size_t k = 0; k < n_seeds; ++k) {
          auto row = [&](const char* arm, const metrics::MetricsReport& r) {
            runs += fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", config.seeds[k], id,
                                cat, arm, r.mae, r.nmae, r.mape, r.r2, r.n);
          };
          row("sensor", o.sensor[k]);
          row("noon_scratch", o.noon_scratch[k]);
          if (!o.noon_tl.empty()) row("noon_tl", o.noon_tl[k]);
        }
        if (o.noon_tl.empty()) continue;
        const auto tl = metrics::aggregate(o.noon_tl);
        t3 += fmt::format("{},{},{},{},{},{},{},{},{}\n", id, cat, seeds_col, ms(noon.r2),
                          ms(noon.mae), ms(noon.mape), ms(tl.r2), ms(tl.mae), ms(tl.mape));
        t4 += fmt::format("{},{},{},{},{},{}\n", id, cat, seeds_col, ms(sensor.nmae), ms(tl.nmae),
                          ms(noon.nmae));
        s3 += fmt::format("{:<8} {:>16} {:>18} {:>16} | {:>16} {:>18} {:>16}\n", id, pm(noon.r2, 2),
                          pm(noon.mae, 1), pm(noon.mape, 2), pm(tl.r2, 2), pm(tl.mae, 1),
                          pm(tl.mape, 2));
        s4 += fmt::format("{:<8} {:>18} {:>18} {:>18}\n", id, pm(sensor.nmae, 3), pm(tl.nmae, 3),
                          pm(noon.nmae, 3));
      }
      write_text(out / "tables" / "sensor_vs_noon.csv", t2);
      write_text(out / "tables" / "scratch_vs_tl.csv", t3);
      write_text(out / "tables" / "nmae_bridge.csv", t4);
      write_text(out / "tables" / "runs.csv", runs);
      write_text(out / "tables" / "summary.txt", summary + s3 + s4);

      // Plot data: seed-averaged predictions on each target's noon test set.
      for (std::size_t v = 0; v < n_vessels; ++v) {
        if (v == base_index) continue;
        const auto& test = datasets[v].noon_test;
        Eigen::VectorXd scratch = Eigen::VectorXd::Zero(test.size());
        Eigen::VectorXd tl = Eigen::VectorXd::Zero(test.size());
        for (std::size_t k = 0; k < n_seeds; ++k) {
          scratch += predict_kw(scratch_models[k * n_vessels + v].checkpoint, test);
          tl += predict_kw(tl_models[k * n_vessels + v]->checkpoint, test);
        }
        scratch /= static_cast<double>(n_seeds);
        tl /= static_cast<double>(n_seeds);
        std::string csv = "date,actual,predicted_scratch,predicted_tl\n";
        for (Eigen::Index i = 0; i < test.size(); ++i) {
          csv += fmt::format("{},{},{},{}\n", format_date(test.timestamps[static_cast<std::size_t>(i)]),
                             num(test.targets(i)), num(scratch(i)), num(tl(i)));
        }
        write_text(out / "plots" / (datasets[v].meta.vessel_id + "_noon_test.csv"), csv);
      }

      manifest["status"] = "complete";
      manifest["base_vessel"] = base_id;
      auto& selection = manifest["base_selection"];
      selection = nlohmann::ordered_json::array();
      for (const auto& s : scores) {
        selection.push_back({{"vessel_id", s.vessel_id},
                             {"sensor_mape_mean", s.sensor.mape},
                             {"sensor_nmae_mean", s.sensor.nmae}});
      }
      auto& vessels = manifest["vessels"];
      vessels = nlohmann::ordered_json::array();
      for (std::size_t v = 0; v < n_vessels; ++v) {
        const auto& d = datasets[v];
        const auto checksum = fmt::format("{:016x}", matrix_checksum(d.noon_train));
        nlohmann::ordered_json e;
        e["vessel_id"] = d.meta.vessel_id;
        e["category"] = data::to_string(d.meta.category);
        e["role"] = v == base_index ? "base" : "target";
        e["sensor_rows_read"] = d.sensor_rows_read;
        e["sensor_rows_rejected"] = d.sensor_rows_rejected;
        e["fuse_rejects"] = d.fuse_rejects;
        e["sensor_drops"] = drops_to_json(d.sensor_drops);
        e["sensor_train_rows"] = d.sensor_train.size();
        e["sensor_test_rows"] = d.sensor_test.size();
        e["noon_rows_read"] = d.noon_rows_read;
        e["noon_rows_rejected"] = d.noon_rows_rejected;
        e["noon_drops"] = drops_to_json(d.noon_drops);
        e["noon_train_rows"] = d.noon_train.size();
        e["noon_test_rows"] = d.noon_test.size();
        e["noon_train_checksum_scratch"] = checksum;
        e["noon_train_checksum_tl"] = v == base_index ? nlohmann::ordered_json() : nlohmann::ordered_json(checksum);
        vessels.push_back(std::move(e));
      }
      write_text(out / "manifest.json", manifest.dump(2) + "\n");
    });
    return result;
  } catch (const std::exception& e) {
    manifest["status"] = "incomplete";
    manifest["error"] = e.what();
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
    throw;
  }
}

}  // namespace shaftpower::experiment
