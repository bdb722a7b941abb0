// Copyright 2026 The mgpatt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mgpatt/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgpatt/baselines.hpp"
#include "mgpatt/checkpoint.hpp"
#include "mgpatt/cli/run_config.hpp"
#include "mgpatt/data.hpp"
#include "mgpatt/errors.hpp"
#include "mgpatt/metrics.hpp"
#include "mgpatt/random.hpp"
#include "mgpatt/training.hpp"

namespace mgpatt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

struct CommonArgs {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<fs::path> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Run configuration (INI)")->required();
  cmd->add_option("--seed", args.seed, "Override [run] seed");
  cmd->add_option("--threads", args.threads, "Override [run] threads");
  cmd->add_option("--out", args.out, "Override [run] out directory");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw DataError("cannot create output directory " + dir.string());
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw DataError("missing input file " + p.string());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  if (!out) throw DataError("write failed: " + p.string());
}

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

std::vector<int> labels_of(std::span<const IrregularSeries> r) {
  std::vector<int> out;
  for (const auto& s : r) out.push_back(s.label);
  return out;
}

std::vector<int> horizons_of(std::span<const IrregularSeries> r) {
  std::vector<int> out;
  for (const auto& s : r) out.push_back(s.horizon);
  return out;
}

struct Dataset {
  FeatureDictionary dictionary;
  fs::path dir;
};

Dataset open_dataset(const RunConfig& config) {
  Dataset d;
  d.dir = config.get_path("data", "dir", "data");
  require_file(d.dir / "features.json");
  d.dictionary = read_dictionary((d.dir / "features.json").string());
  return d;
}

std::vector<IrregularSeries> load_split(const Dataset& d, const std::string& split) {
  if (split != "train" && split != "validation" && split != "test")
    throw ConfigError("split must be train, validation or test");
  const fs::path p = d.dir / (split + ".jsonl");
  require_file(p);
  return read_jsonl(p.string(), d.dictionary.n_features(),
                    static_cast<int>(d.dictionary.static_names.size()));
}

// ------------------------------------------------------------------ generate

int cmd_generate(const CommonArgs& args, std::ostream& log) {
  const RunConfig config = RunConfig::load(args.config);
  const RunSettings run = run_settings(config, args.seed, args.threads, args.out);
  GenerateSettings s = generate_settings(config);
  s.generator.seed = run.seed;
  ensure_dir(run.out);

  const MgpParameters truth = synthetic_true_parameters(s.generator);
  std::vector<IrregularSeries> all = generate_synthetic(s.generator, truth);
  std::vector<IrregularSeries> cases, controls;
  for (auto& r : all) (r.label == 1 ? cases : controls).push_back(std::move(r));
  const MatchResult matched =
      match_controls(cases, controls, derive_seed(run.seed, 1), s.min_observations,
                     s.max_observations);
  std::vector<IrregularSeries> base =
      filter_and_cap(std::move(cases), s.min_observations, s.max_observations);
  base.insert(base.end(), matched.controls.begin(), matched.controls.end());

  const int m = s.generator.n_vitals + s.generator.n_labs;
  DatasetSplits splits = split_normalize(std::move(base), m, derive_seed(run.seed, 2),
                                         s.train_fraction, s.validation_fraction);
  std::vector<IrregularSeries> everything;
  const std::pair<const char*, std::vector<IrregularSeries>*> named[] = {
      {"train", &splits.train}, {"validation", &splits.validation}, {"test", &splits.test}};
  for (const auto& [name, records] : named) {
    const auto augmented = horizon_augment(*records, s.max_horizon, s.min_observations);
    write_jsonl((run.out / (std::string(name) + ".jsonl")).string(), augmented);
    everything.insert(everything.end(), augmented.begin(), augmented.end());
    log << name << ": " << augmented.size() << " records\n";
  }
  const FeatureDictionary dict =
      make_dictionary(s.generator.n_vitals, s.generator.n_labs, s.generator.n_units);
  write_dictionary(dict, (run.out / "features.json").string());
  write_text(run.out / "ground_truth.json", ground_truth_json(s.generator, truth) + "\n");

  ordered_json norm;
  norm["format_version"] = kFormatVersion;
  norm["mean"] = std::vector<double>(splits.normalization.mean.data(),
                                     splits.normalization.mean.data() + m);
  norm["std"] = std::vector<double>(splits.normalization.std.data(),
                                    splits.normalization.std.data() + m);
  write_text(run.out / "normalization.json", norm.dump(2) + "\n");
  write_text(run.out / "statistics.csv",
             statistics_csv(dataset_statistics(everything, s.max_horizon)));
  log << "controls dropped after matching: " << matched.dropped << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- train

std::string epoch_json(const EpochRecord& e) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["epoch"] = e.epoch;
  j["train_loss"] = e.train_loss;
  j["val_auroc"] = number_or_null(e.val_auroc);
  j["val_aupr"] = number_or_null(e.val_aupr);
  return j.dump();
}

int cmd_train(const CommonArgs& args, std::ostream& log) {
  const RunConfig config = RunConfig::load(args.config);
  const RunSettings run = run_settings(config, args.seed, args.threads, args.out);
  TrainConfig tc = train_settings(config);
  tc.seed = run.seed;
  tc.threads = run.threads;
  const bool resume = config.get_bool("train", "resume", false);
  const Dataset data = open_dataset(config);
  const auto train_records = load_split(data, "train");
  const auto val_records = load_split(data, "validation");
  ensure_dir(run.out);

  std::optional<TrainState> state;
  std::vector<std::string> history_lines;
  if (resume) {
    require_file(run.out / "last.ckpt");
    require_file(run.out / "model.ckpt");
    Checkpoint last = read_checkpoint((run.out / "last.ckpt").string());
    if (!last.state) throw DataError("last.ckpt holds no training state");
    state = std::move(*last.state);
    state->best = read_checkpoint((run.out / "model.ckpt").string()).model;
    std::ifstream old(run.out / "history.jsonl");
    for (std::string line; std::getline(old, line);)
      if (!line.empty()) history_lines.push_back(line);
    history_lines.resize(std::min<std::size_t>(history_lines.size(), state->epochs_completed));
  }

  TrainData td{train_records, val_records, data.dictionary.n_features(),
               static_cast<int>(data.dictionary.static_names.size())};
  TrainResult result;
  try {
    result = train(td, tc, state, [&](const EpochRecord& e) {
      history_lines.push_back(epoch_json(e));
      log << "epoch " << e.epoch << " loss " << e.train_loss << " val_auroc " << e.val_auroc
          << "\n";
    });
  } catch (const DivergenceError& e) {
    write_checkpoint((run.out / "diverged.ckpt").string(), e.snapshot());
    throw;
  }
  write_checkpoint((run.out / "model.ckpt").string(), result.best);
  write_checkpoint((run.out / "last.ckpt").string(), result.last.model, &result.last);
  std::ostringstream hist;
  for (const auto& l : history_lines) hist << l << "\n";
  write_text(run.out / "history.jsonl", hist.str());
  return kExitOk;
}

// ------------------------------------------------------------------ evaluate

fs::path checkpoint_path(const RunConfig& config, const std::string& section,
                         const RunSettings& run) {
  const fs::path p = config.get_path(section, "checkpoint", run.out / "model.ckpt");
  require_file(p);
  return p;
}

ordered_json metrics_object(const HorizonMetrics& m, const std::string& model) {
  ordered_json j = ordered_json::parse(metrics_json_line(m));
  if (!model.empty()) j["model"] = model;
  return j;
}

int cmd_evaluate(const CommonArgs& args, std::ostream& log) {
  const RunConfig config = RunConfig::load(args.config);
  const RunSettings run = run_settings(config, args.seed, args.threads, args.out);
  const Dataset data = open_dataset(config);
  const fs::path ckpt = checkpoint_path(config, "evaluate", run);
  const std::string split = config.get_string("evaluate", "split", "test");
  const int s_count = static_cast<int>(config.get_int("evaluate", "s_count", 10));
  const int n_boot = static_cast<int>(config.get_int("evaluate", "bootstrap", 200));
  if (s_count < 1 || n_boot < 2) throw ConfigError("[evaluate] s_count >= 1 and bootstrap >= 2");
  const auto records = load_split(data, split);
  ensure_dir(run.out);

  const Model model = read_checkpoint(ckpt.string()).model;
  const std::vector<double> scores =
      predict_scores(model, records, s_count, derive_seed(run.seed, 4), run.threads);
  std::ostringstream csv;
  csv.precision(17);
  csv << "patient_id,horizon,label,score\n";
  for (std::size_t i = 0; i < records.size(); ++i)
    csv << records[i].patient_id << "," << records[i].horizon << "," << records[i].label
        << "," << scores[i] << "\n";
  write_text(run.out / "scores.csv", csv.str());

  const auto report = per_horizon_report(scores, labels_of(records), horizons_of(records),
                                         n_boot, derive_seed(run.seed, 7));
  std::ostringstream lines;
  for (const auto& m : report) {
    lines << metrics_json_line(m) << "\n";
    log << "h=" << m.horizon << " auroc "
        << (m.auroc ? std::to_string(m.auroc->mean) : std::string("null")) << "\n";
  }
  write_text(run.out / "metrics.jsonl", lines.str());
  return kExitOk;
}

// ------------------------------------------------------------------- explain

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

int cmd_explain(const CommonArgs& args, std::optional<std::string> patient,
                std::optional<int> horizon_arg, std::ostream& log) {
  const RunConfig config = RunConfig::load(args.config);
  const RunSettings run = run_settings(config, args.seed, args.threads, args.out);
  const Dataset data = open_dataset(config);
  const fs::path ckpt = checkpoint_path(config, "explain", run);
  const std::string id = patient ? *patient : config.get_string("explain", "patient", "");
  if (id.empty()) throw ConfigError("explain needs --patient or [explain] patient");
  const int horizon =
      horizon_arg ? *horizon_arg : static_cast<int>(config.get_int("explain", "horizon", 0));
  const int s_count = static_cast<int>(config.get_int("explain", "s_count", 10));
  if (s_count < 1) throw ConfigError("[explain] s_count must be >= 1");
  const auto records = load_split(data, config.get_string("explain", "split", "test"));
  const IrregularSeries* series = nullptr;
  for (const auto& r : records)
    if (r.patient_id == id && r.horizon == horizon) series = &r;
  if (!series)
    throw LookupError("no record for patient " + id + " at horizon " + std::to_string(horizon));

  const Model model = read_checkpoint(ckpt.string()).model;
  if (!std::holds_alternative<AttTcnParameters>(model.head))
    throw ConfigError("explain needs a model with an attention head");
  ensure_dir(run.out);
  const PatientPrediction pred =
      predict_patient(model, *series, s_count, record_seed(derive_seed(run.seed, 4), *series));

  const int m = model.config.n_features;
  const int n = model.config.n_grid;
  std::vector<std::string> channels;
  for (const auto& f : data.dictionary.dynamic) channels.push_back(f.name);
  for (const auto& s : data.dictionary.static_names) channels.push_back(s);

  std::ostringstream out;
  ordered_json head;
  head["format_version"] = kFormatVersion;
  head["kind"] = "patient";
  head["patient_id"] = series->patient_id;
  head["horizon"] = series->horizon;
  head["label"] = series->label;
  head["probability"] = pred.probability;
  head["s_count"] = s_count;
  head["n_grid"] = n;
  head["channels"] = channels;
  out << head.dump() << "\n";
  for (const auto& o : series->observations) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "observation";
    j["t"] = o.t;
    j["feature"] = o.feature;
    j["value"] = o.value;
    out << j.dump() << "\n";
  }
  for (int row = 0; row < n; ++row) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "grid";
    j["row"] = row;
    j["time"] = -static_cast<double>(n - 1 - row) * kGridSpacingHours;
    j["padded"] = static_cast<bool>(pred.posterior.grid.padded[row]);
    std::vector<double> mean(m), var(m);
    for (int f = 0; f < m; ++f) {
      mean[f] = pred.posterior.mean[row * m + f];
      var[f] = pred.posterior.cov(row * m + f, row * m + f);
    }
    j["mean"] = mean;
    j["variance"] = var;
    out << j.dump() << "\n";
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < pred.traces.size(); ++s) {
    const AttentionTrace& t = pred.traces[s];
    const Eigen::Vector2d implied = probabilities_from_contributions(t.contributions);
    worst = std::max(worst, std::abs(implied[1] - pred.sample_probabilities[s]));
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "sample";
    j["sample"] = s;
    j["probability"] = pred.sample_probabilities[s];
    j["alpha"] = rows_of(t.alpha);
    j["beta"] = {rows_of(t.beta[0]), rows_of(t.beta[1])};
    j["contributions"] = {rows_of(t.contributions[0]), rows_of(t.contributions[1])};
    std::vector<double> steps(t.step_probabilities.rows());
    for (Eigen::Index i = 0; i < t.step_probabilities.rows(); ++i) steps[i] = t.step_probabilities(i, 1);
    j["step_probability"] = steps;
    out << j.dump() << "\n";
  }
  if (worst > 1e-10) throw NumericalError("exported contributions do not reproduce the output");
  const std::string stem = "explain_" + series->patient_id + "_h" + std::to_string(horizon);
  write_text(run.out / (stem + ".jsonl"), out.str());

  for (std::size_t l = 0; l < model.mgp.clusters.size(); ++l) {
    const Eigen::MatrixXd k = feature_cov(model.mgp.clusters[l].features);
    std::ostringstream csv;
    csv.precision(17);
    csv << "feature";
    for (int f = 0; f < m; ++f) csv << "," << channels[f];
    csv << "\n";
    for (int i = 0; i < m; ++i) {
      csv << channels[i];
      for (int f = 0; f < m; ++f) csv << "," << k(i, f);
      csv << "\n";
    }
    write_text(run.out / ("feature_cov_cluster" + std::to_string(l) + ".csv"), csv.str());
    log << "cluster " << l << " lengthscale " << model.mgp.clusters[l].lengthscale() << "\n";
  }
  log << "probability " << pred.probability << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- baselines

int cmd_baselines(const CommonArgs& args, std::ostream& log) {
  const RunConfig config = RunConfig::load(args.config);
  const RunSettings run = run_settings(config, args.seed, args.threads, args.out);
  const Dataset data = open_dataset(config);
  const std::string sec = "baselines";
  const int n_hours = static_cast<int>(config.get_int(sec, "n_hours", kDefaultGridSize));
  const double logreg_l2 = config.get_real(sec, "logreg_l2", 1e-2);
  const double insight_l2 = config.get_real(sec, "insight_l2", 1e-2);
  const bool include_age = config.get_bool(sec, "include_age", true);
  const double lookback = config.get_real(sec, "lookback_hours", 5.0);
  const bool export_features = config.get_bool(sec, "export_features", false);
  const int n_boot = 200;
  if (n_hours < kInsightWindow) throw ConfigError("[baselines] n_hours must be >= 6");
  const std::string variables = config.get_string(
      sec, "insight_variables", "sysbp,ptt,heartrate,tempc,resprate,wbc,ph_bloodgas,spo2_pulsoxy");

  const auto train_records = load_split(data, "train");
  const auto eval_records = load_split(data, config.get_string(sec, "split", "test"));
  ensure_dir(run.out);
  const int m = data.dictionary.n_features();
  std::ostringstream metrics;

  // Logistic regression on the forward-filled hourly grid.
  {
    Eigen::MatrixXd x_train(train_records.size(), hourly_features(train_records[0], m, n_hours).size());
    for (std::size_t i = 0; i < train_records.size(); ++i)
      x_train.row(i) = hourly_features(train_records[i], m, n_hours).transpose();
    Eigen::MatrixXd x_eval(eval_records.size(), x_train.cols());
    for (std::size_t i = 0; i < eval_records.size(); ++i)
      x_eval.row(i) = hourly_features(eval_records[i], m, n_hours).transpose();
    LogisticOptions opt;
    opt.l2 = logreg_l2;
    const LogisticModel lr = fit_logistic(x_train, labels_of(train_records), opt);
    if (!lr.converged)
      log << "warning: logistic regression stopped at gradient norm " << lr.gradient_norm << "\n";
    const Eigen::VectorXd p = lr.predict(x_eval);
    const std::vector<double> scores(p.data(), p.data() + p.size());
    for (const auto& h : per_horizon_report(scores, labels_of(eval_records),
                                            horizons_of(eval_records), n_boot,
                                            derive_seed(run.seed, 8)))
      metrics << metrics_object(h, "logreg").dump() << "\n";
  }

  // InSight on the selected variables.
  std::vector<int> ids;
  std::vector<std::string> names;
  for (const auto& v : [&] {
         std::vector<std::string> list;
         std::stringstream ss(variables);
         for (std::string item; std::getline(ss, item, ',');)
           if (!item.empty()) list.push_back(item);
         return list;
       }()) {
    for (const auto& f : data.dictionary.dynamic)
      if (f.name == v) {
        ids.push_back(f.id);
        names.push_back(f.name);
      }
  }
  if (include_age) names.push_back("age");
  if (names.empty()) throw ConfigError("no InSight variables present in the dictionary");

  auto eligible = [&](std::span<const IrregularSeries> recs) {
    std::vector<IrregularSeries> keep;
    for (const auto& r : recs)
      if (insight_eligible(r, ids, lookback)) keep.push_back(r);
    return keep;
  };
  const auto train_kept = eligible(train_records);
  const auto eval_kept = eligible(eval_records);
  std::ostringstream filter;
  filter << "split,horizon,n_patients,n_cases,n_before_filter\n";
  const std::pair<const char*, std::pair<const std::vector<IrregularSeries>*,
                                         const std::vector<IrregularSeries>*>>
      filter_rows[] = {{"train", {&train_records, &train_kept}},
                       {"eval", {&eval_records, &eval_kept}}};
  for (const auto& [name, pair] : filter_rows) {
    const auto before = dataset_statistics(*pair.first);
    const auto after = dataset_statistics(*pair.second);
    for (std::size_t h = 0; h < after.size(); ++h)
      filter << name << "," << h << "," << after[h].n_records << "," << after[h].n_cases << ","
             << before[h].n_records << "\n";
  }
  write_text(run.out / "insight_filter.csv", filter.str());
  log << "InSight kept " << train_kept.size() << "/" << train_records.size() << " train and "
      << eval_kept.size() << "/" << eval_records.size() << " evaluation records\n";

  int pos = 0;
  for (const auto& r : train_kept) pos += r.label;
  if (pos == 0 || pos == static_cast<int>(train_kept.size())) {
    log << "warning: InSight filter left a single class; InSight skipped\n";
  } else {
    std::vector<Eigen::MatrixXd> train_mats, eval_mats;
    for (const auto& r : train_kept) train_mats.push_back(insight_matrix(r, m, ids, n_hours, include_age));
    for (const auto& r : eval_kept) eval_mats.push_back(insight_matrix(r, m, ids, n_hours, include_age));
    const InsightThresholds thresholds = fit_insight_thresholds(train_mats);
    const int width = insight_length(n_hours, static_cast<int>(names.size()));
    Eigen::MatrixXd x_train(train_mats.size(), width), x_eval(eval_mats.size(), width);
    for (std::size_t i = 0; i < train_mats.size(); ++i)
      x_train.row(i) = insight_vector(train_mats[i], thresholds).transpose();
    for (std::size_t i = 0; i < eval_mats.size(); ++i)
      x_eval.row(i) = insight_vector(eval_mats[i], thresholds).transpose();
    if (export_features) {
      const auto cols = insight_feature_names(n_hours, names);
      write_text(run.out / "insight_features_train.csv", features_csv(cols, train_kept, x_train));
      write_text(run.out / "insight_features_eval.csv", features_csv(cols, eval_kept, x_eval));
    }
    LogisticOptions opt;
    opt.l2 = insight_l2;
    const LogisticModel lr = fit_logistic(x_train, labels_of(train_kept), opt);
    if (!lr.converged)
      log << "warning: InSight regression stopped at gradient norm " << lr.gradient_norm << "\n";
    const Eigen::VectorXd p = lr.predict(x_eval);
    const std::vector<double> scores(p.data(), p.data() + p.size());
    for (const auto& h : per_horizon_report(scores, labels_of(eval_kept), horizons_of(eval_kept),
                                            n_boot, derive_seed(run.seed, 9)))
      metrics << metrics_object(h, "insight").dump() << "\n";
  }
  write_text(run.out / "baseline_metrics.jsonl", metrics.str());
  return kExitOk;
}

// -------------------------------------------------------------------- search

int cmd_search(const CommonArgs& args, std::ostream& log) {
  const RunConfig config = RunConfig::load(args.config);
  const RunSettings run = run_settings(config, args.seed, args.threads, args.out);
  const SearchSpace space = search_space(config);
  const int n_trials = static_cast<int>(config.get_int("search", "n_trials", 10));
  TrainConfig base = train_settings(config);
  base.threads = run.threads;
  const Dataset data = open_dataset(config);
  const auto train_records = load_split(data, "train");
  const auto val_records = load_split(data, "validation");
  ensure_dir(run.out);
  TrainData td{train_records, val_records, data.dictionary.n_features(),
               static_cast<int>(data.dictionary.static_names.size())};
  const auto results = random_search(space, n_trials, run.seed, td, base);
  std::ostringstream out;
  int rank = 0;
  for (const auto& r : results) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["rank"] = ++rank;
    j["s_count"] = r.config.s_count;
    j["kernel_size"] = r.config.tcn.kernel_size;
    j["n_blocks"] = r.config.tcn.n_blocks;
    j["hidden_channels"] = r.config.tcn.hidden_channels;
    j["dropout"] = r.config.tcn.dropout;
    j["l2"] = r.config.tcn.l2;
    j["epochs"] = r.epochs;
    j["val_auroc"] = number_or_null(r.val_auroc);
    j["val_aupr"] = number_or_null(r.val_aupr);
    out << j.dump() << "\n";
    log << "rank " << rank << " val_auroc " << r.val_auroc << "\n";
  }
  write_text(run.out / "search.jsonl", out.str());
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MGP-AttTCN: multitask GP with attention TCN for early sepsis prediction"};
  app.require_subcommand(1);
  CommonArgs common;
  std::optional<std::string> patient;
  std::optional<int> horizon;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Per-horizon metrics of a checkpoint");
  CLI::App* explain = app.add_subcommand("explain", "Export the attention trace of one patient");
  CLI::App* baselines = app.add_subcommand("baselines", "Logistic regression and InSight");
  CLI::App* search = app.add_subcommand("search", "Hyperparameter random search");
  for (CLI::App* cmd : {generate, train_cmd, evaluate, explain, baselines, search})
    add_common(cmd, common);
  explain->add_option("--patient", patient, "Patient id");
  explain->add_option("--horizon", horizon, "Horizon of the record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(common, out);
    if (*train_cmd) return cmd_train(common, out);
    if (*evaluate) return cmd_evaluate(common, out);
    if (*explain) return cmd_explain(common, patient, horizon, out);
    if (*baselines) return cmd_baselines(common, out);
    if (*search) return cmd_search(common, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mgpatt::cli
