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

#include "mgpatt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "mgpatt/errors.hpp"
#include "mgpatt/random.hpp"

namespace mgpatt {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw InputError("scores and labels differ in length");
  for (int l : labels)
    if (l != 0 && l != 1) throw InputError("labels must be 0 or 1");
}

std::vector<std::size_t> order_by_score(std::span<const double> scores,
                                        bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  double n_pos = 0.0;
  for (int l : labels) n_pos += l;
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0)
    throw UndefinedMetricError("AUROC needs both classes");
  const std::vector<std::size_t> order = order_by_score(scores, false);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum += midrank;
    i = j + 1;
  }
  const double u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  double n_pos = 0.0;
  for (int l : labels) n_pos += l;
  if (n_pos == 0.0) throw UndefinedMetricError("AUPR needs at least one positive");
  const std::size_t n = scores.size();
  const std::vector<std::size_t> order = order_by_score(scores, true);
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, area = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) (labels[order[k]] == 1 ? tp : fp) += 1.0;
    const double recall = tp / n_pos;
    area += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
    i = j + 1;
  }
  return area;
}

MeanStd bootstrap(const MetricFn& metric, std::span<const double> scores,
                  std::span<const int> labels, int n_resamples,
                  std::uint64_t seed, int max_redraws) {
  check_inputs(scores, labels);
  if (n_resamples < 2) throw InputError("bootstrap needs at least 2 resamples");
  if (scores.size() < 2) throw InputError("bootstrap needs at least 2 patients");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  std::vector<double> values;
  std::vector<double> s(scores.size());
  std::vector<int> l(scores.size());
  int redraws = 0;
  while (static_cast<int>(values.size()) < n_resamples) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t k = pick(rng);
      s[i] = scores[k];
      l[i] = labels[k];
    }
    try {
      values.push_back(metric(s, l));
    } catch (const UndefinedMetricError&) {
      if (++redraws > max_redraws)
        throw UndefinedMetricError("bootstrap: too many degenerate resamples");
    }
  }
  MeanStd out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / (values.size() - 1));
  return out;
}

std::vector<HorizonMetrics> per_horizon_report(std::span<const double> scores,
                                               std::span<const int> labels,
                                               std::span<const int> horizons,
                                               int n_resamples,
                                               std::uint64_t seed,
                                               int max_horizon) {
  check_inputs(scores, labels);
  if (horizons.size() != scores.size())
    throw InputError("horizons and scores differ in length");
  std::vector<HorizonMetrics> report;
  for (int h = 0; h <= max_horizon; ++h) {
    std::vector<double> s;
    std::vector<int> l;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (horizons[i] != h) continue;
      s.push_back(scores[i]);
      l.push_back(labels[i]);
    }
    HorizonMetrics m;
    m.horizon = h;
    for (int v : l) (v == 1 ? m.n_cases : m.n_controls) += 1;
    if (m.n_cases > 0 && m.n_controls > 0) {
      m.auroc = bootstrap(auroc, s, l, n_resamples, derive_seed(seed, h, 0));
      m.aupr = bootstrap(aupr, s, l, n_resamples, derive_seed(seed, h, 1));
    }
    report.push_back(m);
  }
  return report;
}

std::string metrics_json_line(const HorizonMetrics& m) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["horizon"] = m.horizon;
  auto put = [&](const char* key, const std::optional<MeanStd>& v) {
    if (v)
      j[key] = {{"mean", v->mean}, {"std", v->std}};
    else
      j[key] = nullptr;
  };
  put("auroc", m.auroc);
  put("aupr", m.aupr);
  j["n_cases"] = m.n_cases;
  j["n_controls"] = m.n_controls;
  return j.dump();
}

HorizonMetrics metrics_from_json_line(const std::string& line) {
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    if (j.at("format_version").get<int>() != 1)
      throw DataError("unsupported metrics format_version");
    HorizonMetrics m;
    m.horizon = j.at("horizon").get<int>();
    auto get = [&](const char* key) -> std::optional<MeanStd> {
      const auto& v = j.at(key);
      if (v.is_null()) return std::nullopt;
      return MeanStd{v.at("mean").get<double>(), v.at("std").get<double>()};
    };
    m.auroc = get("auroc");
    m.aupr = get("aupr");
    m.n_cases = j.at("n_cases").get<int>();
    m.n_controls = j.at("n_controls").get<int>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics line: ") + e.what());
  }
}

}  // namespace mgpatt
