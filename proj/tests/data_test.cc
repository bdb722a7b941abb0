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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "mgpatt/data.hpp"
#include "mgpatt/errors.hpp"
#include "mgpatt/metrics.hpp"

namespace {

using mgpatt::IrregularSeries;
using mgpatt::Observation;

IrregularSeries uniform_series(const std::string& id, int n, double hours, int label = 0) {
  IrregularSeries s;
  s.patient_id = id;
  s.label = label;
  s.static_features = Eigen::Vector2d(0.1, 1.0);
  for (int i = 0; i < n; ++i) s.observations.push_back({-hours + hours * (i + 0.5) / n, i % 2, 1.0 * i});
  s.admission = -hours;
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mgpatt_data_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(HorizonAugment, LastHourOnlySurvivesAtZero) {
  IrregularSeries s;
  s.patient_id = "a";
  for (int i = 0; i < 50; ++i) s.observations.push_back({-0.9 + 0.01 * i, 0, 1.0});
  const auto copies = mgpatt::horizon_augment(s, 6, 1);
  ASSERT_EQ(copies.size(), 1u);
  EXPECT_EQ(copies[0].horizon, 0);
}

TEST(HorizonAugment, FilterCountsMatchDirectFiltering) {
  const IrregularSeries s = uniform_series("b", 100, 10.0);
  const auto copies = mgpatt::horizon_augment(s, 6, 1);
  ASSERT_EQ(copies.size(), 7u);
  std::size_t previous = 1000;
  for (int h = 0; h <= 6; ++h) {
    const auto expected = std::count_if(s.observations.begin(), s.observations.end(),
                                        [&](const Observation& o) { return o.t <= -h; });
    EXPECT_EQ(copies[h].horizon, h);
    EXPECT_EQ(static_cast<long>(copies[h].observations.size()), expected);
    EXPECT_LE(copies[h].observations.size(), previous);
    previous = copies[h].observations.size();
    for (const auto& o : copies[h].observations) EXPECT_LE(o.t, 0.0);
    EXPECT_DOUBLE_EQ(*copies[h].admission, -10.0 + h);
  }
  EXPECT_LT(copies[6].observations.size(), copies[0].observations.size());
}

TEST(HorizonAugment, HorizonZeroIsIdentity) {
  const IrregularSeries s = uniform_series("c", 60, 12.0);
  const auto copies = mgpatt::horizon_augment(s);
  ASSERT_FALSE(copies.empty());
  ASSERT_EQ(copies[0].observations.size(), s.observations.size());
  for (std::size_t i = 0; i < s.observations.size(); ++i) {
    EXPECT_EQ(copies[0].observations[i].t, s.observations[i].t);
    EXPECT_EQ(copies[0].observations[i].value, s.observations[i].value);
  }
}

TEST(HorizonAugment, MinimumObservationRule) {
  const IrregularSeries s = uniform_series("d", 45, 9.0);
  for (const auto& c : mgpatt::horizon_augment(s)) EXPECT_GE(c.observations.size(), 40u);
  EXPECT_LT(mgpatt::horizon_augment(s).size(), 7u);
}

TEST(HorizonAugment, CountsNonIncreasingOnGeneratedData) {
  mgpatt::GeneratorConfig g;
  g.n_patients = 40;
  g.seed = 3;
  const auto data = mgpatt::generate_synthetic(g, mgpatt::synthetic_true_parameters(g));
  for (const auto& s : data) {
    const auto copies = mgpatt::horizon_augment(s, 6, 0);
    for (std::size_t i = 1; i < copies.size(); ++i)
      EXPECT_LE(copies[i].observations.size(), copies[i - 1].observations.size());
  }
}

TEST(MatchControls, ControlTruncatedToCaseWindow) {
  const std::vector<IrregularSeries> cases = {uniform_series("case", 50, 5.0, 1)};
  const std::vector<IrregularSeries> controls = {uniform_series("ctl", 200, 20.0)};
  const auto r = mgpatt::match_controls(cases, controls, 1, 1, 250);
  ASSERT_EQ(r.controls.size(), 1u);
  const auto& c = r.controls[0];
  // Keeps the first five hours after admission, re-anchored at the last kept point.
  const auto kept = std::count_if(controls[0].observations.begin(), controls[0].observations.end(),
                                  [](const Observation& o) { return o.t + 20.0 <= 5.0; });
  EXPECT_EQ(static_cast<long>(c.observations.size()), kept);
  EXPECT_DOUBLE_EQ(c.observations.back().t, 0.0);
  EXPECT_LE(c.span_hours(), 5.0 + 1e-9);
  EXPECT_EQ(r.matched_case[0], 0u);
}

TEST(MatchControls, CapKeepsMostRecent250) {
  const std::vector<IrregularSeries> cases = {uniform_series("case", 50, 30.0, 1)};
  const std::vector<IrregularSeries> controls = {uniform_series("ctl", 300, 30.0)};
  const auto r = mgpatt::match_controls(cases, controls, 1);
  ASSERT_EQ(r.controls.size(), 1u);
  ASSERT_EQ(r.controls[0].observations.size(), 250u);
  EXPECT_EQ(r.controls[0].observations.front().value, 50.0);
  EXPECT_EQ(r.controls[0].observations.back().value, 299.0);
  const auto capped = mgpatt::filter_and_cap({uniform_series("x", 300, 30.0)});
  ASSERT_EQ(capped.size(), 1u);
  EXPECT_EQ(capped[0].observations.front().value, 50.0);
}

TEST(MatchControls, DeterministicAndDropsShort) {
  std::vector<IrregularSeries> cases, controls;
  for (int i = 0; i < 5; ++i) cases.push_back(uniform_series("c" + std::to_string(i), 60, 3.0 + 4 * i, 1));
  for (int i = 0; i < 12; ++i) controls.push_back(uniform_series("k" + std::to_string(i), 240, 40.0));
  const auto a = mgpatt::match_controls(cases, controls, 9);
  const auto b = mgpatt::match_controls(cases, controls, 9);
  EXPECT_EQ(a.matched_case, b.matched_case);
  EXPECT_EQ(a.dropped, b.dropped);
  EXPECT_EQ(a.controls.size() + a.dropped, 12u);
  EXPECT_GT(a.dropped, 0);
  std::set<std::size_t> distinct(a.matched_case.begin(), a.matched_case.end());
  EXPECT_GE(distinct.size(), 1u);
}

std::vector<IrregularSeries> patients_with_copies(int n) {
  std::vector<IrregularSeries> all;
  for (int p = 0; p < n; ++p) {
    auto base = uniform_series("p" + std::to_string(p), 60, 10.0 + p % 7, p % 2);
    for (auto& o : base.observations) o.value = std::sin(p + o.t) * (1 + o.feature) + p * 0.01;
    for (auto& c : mgpatt::horizon_augment(base, 6, 1)) all.push_back(std::move(c));
  }
  return all;
}

TEST(Split, EightyTenTenAtPatientLevel) {
  const auto splits = mgpatt::split_normalize(patients_with_copies(100), 2, 5);
  std::set<std::string> tr, va, te;
  for (const auto& r : splits.train) tr.insert(r.patient_id);
  for (const auto& r : splits.validation) va.insert(r.patient_id);
  for (const auto& r : splits.test) te.insert(r.patient_id);
  EXPECT_EQ(tr.size(), 80u);
  EXPECT_EQ(va.size(), 10u);
  EXPECT_EQ(te.size(), 10u);
  for (const auto& id : va) EXPECT_EQ(tr.count(id), 0u);
  for (const auto& id : te) {
    EXPECT_EQ(tr.count(id), 0u);
    EXPECT_EQ(va.count(id), 0u);
  }
  EXPECT_EQ(splits.train.size(), 80u * 7u);
}

TEST(Split, TrainStatisticsStandardized) {
  const auto raw = patients_with_copies(30);
  const auto splits = mgpatt::split_normalize(raw, 2, 6);
  for (int f = 0; f < 2; ++f) {
    double sum = 0, sq = 0, n = 0;
    for (const auto& r : splits.train)
      if (r.horizon == 0)
        for (const auto& o : r.observations)
          if (o.feature == f) {
            sum += o.value;
            sq += o.value * o.value;
            n += 1;
          }
    EXPECT_NEAR(sum / n, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(sq / n - (sum / n) * (sum / n)), 1.0, 1e-9);
  }
  // Test records use the train statistics.
  std::map<std::string, const IrregularSeries*> original;
  for (const auto& r : raw)
    if (r.horizon == 0) original[r.patient_id] = &r;
  for (const auto& r : splits.test) {
    if (r.horizon != 0) continue;
    const auto* o = original.at(r.patient_id);
    for (std::size_t i = 0; i < r.observations.size(); ++i) {
      const int f = r.observations[i].feature;
      EXPECT_NEAR(r.observations[i].value,
                  (o->observations[i].value - splits.normalization.mean[f]) /
                      splits.normalization.std[f],
                  1e-12);
    }
  }
}

TEST(Split, ConstantFeatureUsesStdFloor) {
  std::vector<IrregularSeries> v;
  for (int p = 0; p < 10; ++p) {
    IrregularSeries s = uniform_series("q" + std::to_string(p), 4, 2.0);
    for (auto& o : s.observations) o.value = 3.0;
    v.push_back(s);
  }
  const auto splits = mgpatt::split_normalize(v, 2, 1);
  EXPECT_DOUBLE_EQ(splits.normalization.std[0], 1e-6);
  EXPECT_THROW(mgpatt::split_normalize(std::vector<IrregularSeries>(v.begin(), v.begin() + 5), 2, 1),
               mgpatt::ConfigError);
}

mgpatt::GeneratorConfig gen_config(double effect, std::uint64_t seed) {
  mgpatt::GeneratorConfig g;
  g.n_patients = 200;
  g.label_effect = effect;
  g.seed = seed;
  return g;
}

TEST(Generator, StrongEffectSeparableByLastValue) {
  const auto g = gen_config(3.0, 4);
  const auto data = mgpatt::generate_synthetic(g, mgpatt::synthetic_true_parameters(g));
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : data) {
    double last_t = -1e9, last_v = 0.0;
    for (const auto& o : s.observations)
      if (o.feature == 0 && o.t > last_t) {
        last_t = o.t;
        last_v = o.value;
      }
    scores.push_back(last_v);
    labels.push_back(s.label);
  }
  EXPECT_GE(mgpatt::auroc(scores, labels), 0.95);
}

TEST(Generator, ZeroEffectIsUninformative) {
  const auto g = gen_config(0.0, 5);
  auto cfg = g;
  cfg.n_patients = 600;
  const auto data = mgpatt::generate_synthetic(cfg, mgpatt::synthetic_true_parameters(cfg));
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : data) {
    double last_t = -1e9, last_v = 0.0;
    for (const auto& o : s.observations)
      if (o.feature == 0 && o.t > last_t) {
        last_t = o.t;
        last_v = o.value;
      }
    scores.push_back(last_v);
    labels.push_back(s.label);
  }
  // Observation-count differences remain; the drifted value alone carries nothing.
  EXPECT_NEAR(mgpatt::auroc(scores, labels), 0.5, 0.08);
}

TEST(Generator, ShapeOfRecords) {
  const auto g = gen_config(2.0, 6);
  const auto data = mgpatt::generate_synthetic(g, mgpatt::synthetic_true_parameters(g));
  ASSERT_EQ(data.size(), 200u);
  int cases = 0;
  std::set<std::string> ids;
  for (const auto& s : data) {
    cases += s.label;
    ids.insert(s.patient_id);
    EXPECT_EQ(s.static_features.size(), 2 + g.n_units);
    EXPECT_NO_THROW(mgpatt::validate_series(s, 5, 5));
    double last = -1e9;
    for (const auto& o : s.observations) last = std::max(last, o.t);
    EXPECT_DOUBLE_EQ(last, 0.0);
  }
  EXPECT_EQ(cases, 100);
  EXPECT_EQ(ids.size(), 200u);
  // Vitals dominate the sampling.
  long vitals = 0, labs = 0;
  for (const auto& s : data)
    for (const auto& o : s.observations) (o.feature < 3 ? vitals : labs)++;
  EXPECT_GT(vitals, 5 * labs);
}

TEST(Generator, FixedSeedByteIdentical) {
  const auto g = gen_config(2.0, 7);
  std::ostringstream a, b;
  mgpatt::write_jsonl(a, mgpatt::generate_synthetic(g, mgpatt::synthetic_true_parameters(g)));
  mgpatt::write_jsonl(b, mgpatt::generate_synthetic(g, mgpatt::synthetic_true_parameters(g)));
  EXPECT_EQ(a.str(), b.str());
  auto other = g;
  other.seed = 8;
  std::ostringstream c;
  mgpatt::write_jsonl(c, mgpatt::generate_synthetic(other, mgpatt::synthetic_true_parameters(other)));
  EXPECT_NE(a.str(), c.str());
}

TEST(Generator, GroundTruthRecordsLengthscales) {
  const auto g = gen_config(2.0, 1);
  const auto j = nlohmann::json::parse(
      mgpatt::ground_truth_json(g, mgpatt::synthetic_true_parameters(g)));
  ASSERT_EQ(j.at("clusters").size(), 2u);
  EXPECT_NEAR(j["clusters"][0]["lengthscale"].get<double>(), 2.0, 1e-12);
  EXPECT_NEAR(j["clusters"][1]["lengthscale"].get<double>(), 64.0, 1e-12);
}

TEST(Jsonl, RoundTrip) {
  std::vector<IrregularSeries> v = {uniform_series("r1", 5, 2.0, 1), uniform_series("r2", 3, 1.0)};
  v[1].admission.reset();
  v[1].horizon = 3;
  std::stringstream s;
  mgpatt::write_jsonl(s, v);
  const auto back = mgpatt::read_jsonl(s, 2, 2);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].patient_id, "r1");
  EXPECT_EQ(back[0].label, 1);
  EXPECT_DOUBLE_EQ(*back[0].admission, -2.0);
  EXPECT_FALSE(back[1].admission.has_value());
  EXPECT_EQ(back[1].horizon, 3);
  for (std::size_t i = 0; i < v[0].observations.size(); ++i) {
    EXPECT_EQ(back[0].observations[i].t, v[0].observations[i].t);
    EXPECT_EQ(back[0].observations[i].value, v[0].observations[i].value);
  }
  EXPECT_NE(s.str().find("\"format_version\":1"), std::string::npos);
}

TEST(Jsonl, SchemaViolationsAreDataErrors) {
  const std::string good =
      R"({"patient_id":"a","horizon":0,"label":1,"static":[0.5],"observations":[{"t":-1.0,"f":0,"v":2.0}]})";
  {
    std::istringstream in(good);
    EXPECT_EQ(mgpatt::read_jsonl(in, 1, 1).size(), 1u);
  }
  const std::vector<std::string> bad = {
      R"({"patient_id":"a","horizon":0,"label":1,"static":[],"observations":[],"extra":1})",
      R"({"patient_id":"a","horizon":0,"label":2,"static":[],"observations":[]})",
      R"({"patient_id":"a","horizon":0,"label":1,"static":[],"observations":[{"t":0.5,"f":0,"v":1}]})",
      R"({"patient_id":"a","horizon":0,"label":1,"static":[],"observations":[{"t":-1,"f":3,"v":1}]})",
      R"({"patient_id":"a","label":1,"static":[],"observations":[]})",
      R"({"format_version":9,"patient_id":"a","horizon":0,"label":1,"static":[],"observations":[]})",
      R"(not json)"};
  for (const auto& line : bad) {
    std::istringstream in(line);
    EXPECT_THROW(mgpatt::read_jsonl(in, 1, 0), mgpatt::DataError) << line;
  }
  std::istringstream in(good);
  EXPECT_THROW(mgpatt::read_jsonl(in, 1, 2), mgpatt::DataError);
}

TEST(Dictionary, NamesAndRoundTrip) {
  const auto d = mgpatt::make_dictionary(7, 17, 4);
  EXPECT_EQ(d.n_features(), 24);
  EXPECT_EQ(d.dynamic[0].name, "heartrate");
  EXPECT_EQ(d.dynamic[7].name, "wbc");
  EXPECT_EQ(d.dynamic[7].kind, mgpatt::FeatureKind::kLab);
  EXPECT_EQ(d.id_of("lactate"), 10);
  EXPECT_THROW(d.id_of("nope"), mgpatt::LookupError);
  EXPECT_EQ(d.static_names.size(), 6u);
  const auto dir = temp_dir("dict");
  mgpatt::write_dictionary(d, (dir / "features.json").string());
  const auto back = mgpatt::read_dictionary((dir / "features.json").string());
  EXPECT_EQ(back.n_features(), 24);
  EXPECT_EQ(back.dynamic[23].name, d.dynamic[23].name);
  EXPECT_EQ(back.static_names, d.static_names);
  EXPECT_THROW(mgpatt::make_dictionary(8, 0, 0), mgpatt::ConfigError);
}

TEST(Statistics, SevenHorizonRows) {
  const auto records = patients_with_copies(12);
  const auto stats = mgpatt::dataset_statistics(records);
  ASSERT_EQ(stats.size(), 7u);
  for (int h = 0; h <= 6; ++h) {
    const auto n = std::count_if(records.begin(), records.end(),
                                 [&](const IrregularSeries& r) { return r.horizon == h; });
    EXPECT_EQ(stats[h].n_records, n);
  }
  const std::string csv = mgpatt::statistics_csv(stats);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
  EXPECT_EQ(csv.rfind("horizon,", 0), 0u);
}

}  // namespace
