// Copyright 2026 The lossguard Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lossguard/runner.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <type_traits>

#include "json.hpp"
#include "lossguard/error.h"
#include "lossguard/rng.h"

namespace lossguard {
namespace {

using nlohmann::json;

// Stream tags for the synthetic data seeds; the federation uses 1..5.
constexpr std::uint64_t kTrainDataTag = 100;
constexpr std::uint64_t kTestDataTag = 101;

// Best-effort mapping from a key path back to a line in the source text.
class KeyLocator {
 public:
  explicit KeyLocator(std::string_view text) : text_(text) {}

  int LineOf(std::initializer_list<std::string_view> path) const {
    std::size_t pos = 0;
    for (std::string_view key : path) {
      const std::string quoted = "\"" + std::string(key) + "\"";
      const std::size_t hit = text_.find(quoted, pos);
      if (hit == std::string_view::npos) return 0;
      pos = hit + quoted.size();
    }
    return LineAt(pos);
  }

  int LineAt(std::size_t pos) const {
    pos = std::min(pos, text_.size());
    return 1 + static_cast<int>(
                   std::count(text_.begin(), text_.begin() + pos, '\n'));
  }

 private:
  std::string_view text_;
};

class Reader {
 public:
  Reader(const json& object, const KeyLocator& locator,
         std::vector<std::string_view> path)
      : object_(object), locator_(locator), path_(std::move(path)) {}

  [[noreturn]] void Fail(std::string_view key, const std::string& what) const {
    throw ConfigError(Line(key), Qualified(key) + ": " + what);
  }

  void RejectUnknown(std::initializer_list<std::string_view> known) const {
    for (const auto& [key, value] : object_.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        Fail(key, "unknown key");
      }
    }
  }

  bool Has(std::string_view key) const {
    return object_.contains(std::string(key));
  }

  const json& At(std::string_view key) const {
    return object_.at(std::string(key));
  }

  void Size(std::string_view key, std::size_t& out, std::size_t min) const {
    if (!Has(key)) return;
    out = SizeValue(key, At(key), min);
  }

  std::size_t SizeValue(std::string_view key, const json& v,
                        std::size_t min) const {
    if (!v.is_number_integer()) Fail(key, "expected a non-negative integer");
    if (v.is_number_unsigned()) {
      const auto n = v.get<std::uint64_t>();
      if (n < min) Fail(key, "must be >= " + std::to_string(min));
      return static_cast<std::size_t>(n);
    }
    const auto n = v.get<std::int64_t>();
    if (n < static_cast<std::int64_t>(min)) {
      Fail(key, "must be >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(n);
  }

  void Double(std::string_view key, double& out) const {
    if (!Has(key)) return;
    const json& v = At(key);
    if (!v.is_number()) Fail(key, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) Fail(key, "must be finite");
  }

  void Bool(std::string_view key, bool& out) const {
    if (!Has(key)) return;
    const json& v = At(key);
    if (!v.is_boolean()) Fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void String(std::string_view key, std::string& out) const {
    if (!Has(key)) return;
    const json& v = At(key);
    if (!v.is_string()) Fail(key, "expected a string");
    out = v.get<std::string>();
  }

  Reader Child(std::string_view key) const {
    const json& v = At(key);
    if (!v.is_object()) Fail(key, "expected an object");
    auto path = path_;
    path.push_back(key);
    return Reader(v, locator_, std::move(path));
  }

  int Line(std::string_view key) const {
    switch (path_.size()) {
      case 0:
        return locator_.LineOf({key});
      case 1:
        return locator_.LineOf({path_[0], key});
      default:
        return locator_.LineOf({path_[0], path_[1], key});
    }
  }

 private:
  std::string Qualified(std::string_view key) const {
    std::string out;
    for (std::string_view p : path_) {
      out += p;
      out += '.';
    }
    return out + std::string(key);
  }

  const json& object_;
  const KeyLocator& locator_;
  std::vector<std::string_view> path_;
};

void ParseDataset(const Reader& root, ExperimentSpec& spec) {
  if (!root.Has("dataset")) root.Fail("dataset", "missing required key");
  const json& v = root.At("dataset");
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (name == "synthetic") {
      spec.dataset = SyntheticSource{};
      return;
    }
    root.Fail("dataset", "\"" + name +
                             "\" needs an object; only \"synthetic\" may be "
                             "given as a bare string");
  }
  const Reader d = root.Child("dataset");
  std::string type;
  d.String("type", type);
  if (type == "synthetic") {
    d.RejectUnknown({"type", "num_classes", "per_class", "dim", "separation",
                     "test_per_class"});
    SyntheticSource s;
    d.Size("num_classes", s.num_classes, 2);
    d.Size("per_class", s.per_class, 1);
    d.Size("dim", s.dim, 1);
    d.Size("test_per_class", s.test_per_class, 1);
    d.Double("separation", s.separation);
    if (s.separation <= 0.0) d.Fail("separation", "must be > 0");
    spec.dataset = s;
  } else if (type == "idx") {
    d.RejectUnknown(
        {"type", "train_images", "train_labels", "test_images", "test_labels"});
    IdxSource s;
    std::string p;
    for (auto [key, dst] :
         {std::pair{"train_images", &s.train_images},
          std::pair{"train_labels", &s.train_labels},
          std::pair{"test_images", &s.test_images},
          std::pair{"test_labels", &s.test_labels}}) {
      if (!d.Has(key)) d.Fail(key, "missing required key");
      p.clear();
      d.String(key, p);
      *dst = p;
    }
    spec.dataset = s;
  } else {
    d.Fail("type", "expected \"synthetic\" or \"idx\"");
  }
}

void ParseDefense(const Reader& root, DefenseConfig& config) {
  if (!root.Has("defense")) return;
  const json& v = root.At("defense");
  std::string kind_name;
  if (v.is_string()) {
    kind_name = v.get<std::string>();
  } else {
    const Reader d = root.Child("defense");
    d.RejectUnknown({"kind", "fixed_fraction", "zscore_threshold",
                     "zscore_one_sided", "kmeans_guard", "kmeans_max_iters"});
    kind_name = std::string(DefenseKindName(config.kind));
    d.String("kind", kind_name);
    d.Double("fixed_fraction", config.fixed_fraction);
    d.Double("zscore_threshold", config.zscore_threshold);
    d.Bool("zscore_one_sided", config.zscore_one_sided);
    d.Double("kmeans_guard", config.kmeans_guard);
    d.Size("kmeans_max_iters", config.kmeans_max_iters, 1);
    try {
      ValidateDefenseConfig(config);
    } catch (const ContractViolation& e) {
      root.Fail("defense", e.what());
    }
  }
  const auto kind = ParseDefenseKind(kind_name);
  if (!kind) {
    root.Fail("defense", "unknown defense \"" + kind_name +
                             "\" (none, fixed_fraction, largest_gap, zscore, "
                             "kmeans)");
  }
  config.kind = *kind;
}

json DatasetJson(const ExperimentSpec& spec) {
  if (const auto* s = std::get_if<SyntheticSource>(&spec.dataset)) {
    return {{"type", "synthetic"},
            {"num_classes", s->num_classes},
            {"per_class", s->per_class},
            {"dim", s->dim},
            {"separation", s->separation},
            {"test_per_class", s->test_per_class}};
  }
  const auto& s = std::get<IdxSource>(spec.dataset);
  return {{"type", "idx"},
          {"train_images", s.train_images.string()},
          {"train_labels", s.train_labels.string()},
          {"test_images", s.test_images.string()},
          {"test_labels", s.test_labels.string()}};
}

json ConfigJson(const ExperimentSpec& spec) {
  const FederationConfig& f = spec.federation;
  json out = {
      {"dataset", DatasetJson(spec)},
      {"total_clients", f.total_clients},
      {"clients_per_round", f.clients_per_round},
      {"global_epochs", f.global_epochs},
      {"client_epochs", f.client_epochs},
      {"client_lr", f.client_lr},
      {"batch_size", f.batch_size},
      {"reported_loss", std::string(LossWindowName(f.loss_window))},
      {"malicious_fraction", f.malicious_fraction},
      {"poison",
       {{"source_class", f.poison.source_class},
        {"target_class", f.poison.target_class}}},
      {"defense",
       {{"kind", std::string(DefenseKindName(f.defense.kind))},
        {"fixed_fraction", f.defense.fixed_fraction},
        {"zscore_threshold", f.defense.zscore_threshold},
        {"zscore_one_sided", f.defense.zscore_one_sided},
        {"kmeans_guard", f.defense.kmeans_guard},
        {"kmeans_max_iters", f.defense.kmeans_max_iters}}},
      {"ldp",
       {{"epsilon", f.ldp.epsilon()}, {"sensitivity", f.ldp.sensitivity()}}},
      {"hidden_layers", f.hidden_layers},
      {"seed", f.seed},
      {"repeats", f.repeats},
      {"output_dir", spec.output_dir.string()},
  };
  if (!spec.sweep.empty()) out["sweep"] = spec.sweep;
  return out;
}

// Round-trips through the 9-digit text form so JSON and CSV agree exactly.
json Num(double value) { return std::stod(FormatFloat(value)); }

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void WriteReports(const std::filesystem::path& dir, const ExperimentSpec& spec,
                  const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  {
    auto out = OpenOut(dir / "rounds.csv");
    WriteRoundsCsv(out, report);
  }
  auto out = OpenOut(dir / "summary.json");
  WriteSummaryJson(out, spec, report);
}

std::string FractionDirName(double fraction) {
  return "fraction_" + FormatFloat(fraction);
}

}  // namespace

ExperimentSpec ParseConfigText(std::string_view text) {
  const KeyLocator locator(text);
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(locator.LineAt(e.byte > 0 ? e.byte - 1 : 0),
                      std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError(1, "config must be a JSON object");

  const Reader r(root, locator, {});
  r.RejectUnknown({"dataset", "total_clients", "clients_per_round",
                   "global_epochs", "client_epochs", "client_lr",
                   "batch_size", "reported_loss", "malicious_fraction",
                   "poison", "defense", "ldp", "hidden_layers", "seed",
                   "repeats", "output_dir", "sweep"});

  ExperimentSpec spec;
  ParseDataset(r, spec);
  FederationConfig& f = spec.federation;
  r.Size("total_clients", f.total_clients, 1);
  r.Size("clients_per_round", f.clients_per_round, 1);
  r.Size("global_epochs", f.global_epochs, 1);
  r.Size("client_epochs", f.client_epochs, 1);
  r.Size("batch_size", f.batch_size, 1);
  r.Size("repeats", f.repeats, 1);
  r.Double("client_lr", f.client_lr);
  if (f.client_lr <= 0.0) r.Fail("client_lr", "must be > 0");
  if (f.clients_per_round > f.total_clients) {
    r.Fail("clients_per_round", "must not exceed total_clients");
  }

  r.Double("malicious_fraction", f.malicious_fraction);
  if (f.malicious_fraction < 0.0 || f.malicious_fraction > 0.5) {
    r.Fail("malicious_fraction", "must lie in [0, 0.5]");
  }

  if (r.Has("reported_loss")) {
    std::string name;
    r.String("reported_loss", name);
    const auto window = ParseLossWindow(name);
    if (!window) {
      r.Fail("reported_loss",
             "expected all_epochs, final_epoch, first_epoch or initial");
    }
    f.loss_window = *window;
  }

  if (r.Has("seed")) {
    const json& v = r.At("seed");
    if (!v.is_number_unsigned()) r.Fail("seed", "expected an unsigned integer");
    f.seed = v.get<std::uint64_t>();
  }

  if (r.Has("poison")) {
    const Reader p = r.Child("poison");
    p.RejectUnknown({"source_class", "target_class"});
    p.Size("source_class", f.poison.source_class, 0);
    p.Size("target_class", f.poison.target_class, 0);
    if (f.poison.source_class == f.poison.target_class) {
      p.Fail("target_class", "must differ from source_class");
    }
  }

  ParseDefense(r, f.defense);

  if (r.Has("ldp")) {
    const Reader l = r.Child("ldp");
    l.RejectUnknown({"epsilon", "sensitivity"});
    double epsilon = f.ldp.epsilon();
    double sensitivity = f.ldp.sensitivity();
    l.Double("epsilon", epsilon);
    l.Double("sensitivity", sensitivity);
    if (epsilon <= 0.0) l.Fail("epsilon", "must be > 0");
    if (sensitivity <= 0.0) l.Fail("sensitivity", "must be > 0");
    f.ldp = LdpConfig(epsilon, sensitivity);
  }

  if (r.Has("hidden_layers")) {
    const json& v = r.At("hidden_layers");
    if (!v.is_array()) r.Fail("hidden_layers", "expected an array of widths");
    f.hidden_layers.clear();
    for (const json& w : v) {
      f.hidden_layers.push_back(r.SizeValue("hidden_layers", w, 1));
    }
  }

  if (r.Has("output_dir")) {
    std::string dir;
    r.String("output_dir", dir);
    if (dir.empty()) r.Fail("output_dir", "must not be empty");
    spec.output_dir = dir;
  }

  if (r.Has("sweep")) {
    const json& v = r.At("sweep");
    if (!v.is_array()) r.Fail("sweep", "expected an array of fractions");
    for (const json& x : v) {
      if (!x.is_number()) r.Fail("sweep", "expected numbers");
      const double fraction = x.get<double>();
      if (!(fraction >= 0.0 && fraction <= 0.5)) {
        r.Fail("sweep", "fractions must lie in [0, 0.5]");
      }
      spec.sweep.push_back(fraction);
    }
  }

  if (const auto* s = std::get_if<SyntheticSource>(&spec.dataset)) {
    if (f.poison.source_class >= s->num_classes ||
        f.poison.target_class >= s->num_classes) {
      r.Fail("poison", "classes must be < dataset.num_classes");
    }
  }
  try {
    ValidateFederationConfig(f);
  } catch (const ContractViolation& e) {
    throw ConfigError(0, e.what());
  }
  return spec;
}

ExperimentSpec ParseConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfigText(text.str());
}

std::string ResolvedConfigJson(const ExperimentSpec& spec) {
  return ConfigJson(spec).dump(2);
}

DataSplit LoadData(const ExperimentSpec& spec) {
  if (const auto* s = std::get_if<SyntheticSource>(&spec.dataset)) {
    const std::uint64_t seed = spec.federation.seed;
    return {Synthesize(s->num_classes, s->per_class, s->dim, s->separation,
                       DeriveSeed({seed, kTrainDataTag})),
            Synthesize(s->num_classes, s->test_per_class, s->dim,
                       s->separation, DeriveSeed({seed, kTestDataTag}))};
  }
  const auto& s = std::get<IdxSource>(spec.dataset);
  DataSplit split{LoadIdx(s.train_images, s.train_labels),
                  LoadIdx(s.test_images, s.test_labels)};
  const std::size_t classes =
      std::max(split.train.num_classes, split.test.num_classes);
  split.train.num_classes = classes;
  split.test.num_classes = classes;
  return split;
}

std::string FormatFloat(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::vector<double> ParseFractionList(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string item(text.substr(start, end - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) {
      throw ConfigError(0, "bad fraction \"" + item + "\"");
    }
    if (!(value >= 0.0 && value <= 0.5)) {
      throw ConfigError(0, "fraction " + item + " outside [0, 0.5]");
    }
    out.push_back(value);
    start = end + 1;
  }
  return out;
}

void WriteRoundsCsv(std::ostream& out, const ExperimentReport& report) {
  const FederationConfig& c = report.config;
  const std::string fraction = FormatFloat(c.malicious_fraction);
  const std::string defense(DefenseKindName(c.defense.kind));
  out << "repeat,epoch,malicious_fraction,defense,accuracy,test_loss,"
         "source_recall,det_accuracy,det_precision,det_recall,det_f1,"
         "eliminated_count,selected_count\n";
  auto row = [&](const std::string& repeat, std::size_t epoch, double acc,
                 double loss, double recall, const DetectionScore& d,
                 const std::string& eliminated, const std::string& selected) {
    out << repeat << ',' << epoch << ',' << fraction << ',' << defense << ','
        << FormatFloat(acc) << ',' << FormatFloat(loss) << ','
        << FormatFloat(recall) << ',' << FormatFloat(d.accuracy) << ','
        << FormatFloat(d.precision) << ',' << FormatFloat(d.recall) << ','
        << FormatFloat(d.f1) << ',' << eliminated << ',' << selected << '\n';
  };
  for (std::size_t r = 0; r < report.runs.size(); ++r) {
    for (const RoundRecord& rec : report.runs[r]) {
      row(std::to_string(r), rec.epoch, rec.accuracy, rec.test_loss,
          rec.source_recall, rec.detection,
          std::to_string(rec.eliminated.size()),
          std::to_string(rec.selected.size()));
    }
  }
  for (const EpochMean& m : report.epoch_means) {
    row("-1", m.epoch, m.accuracy, m.test_loss, m.source_recall, m.detection,
        FormatFloat(m.eliminated_count), FormatFloat(m.selected_count));
  }
}

void WriteSummaryJson(std::ostream& out, const ExperimentSpec& spec,
                      const ExperimentReport& report) {
  ExperimentSpec resolved = spec;
  resolved.federation = report.config;
  const EpochMean& last = report.final_epoch();
  const json summary = {
      {"final_epoch",
       {{"epoch", last.epoch},
        {"accuracy", Num(last.accuracy)},
        {"test_loss", Num(last.test_loss)},
        {"source_recall", Num(last.source_recall)},
        {"det_accuracy", Num(last.detection.accuracy)},
        {"det_precision", Num(last.detection.precision)},
        {"det_recall", Num(last.detection.recall)},
        {"det_f1", Num(last.detection.f1)},
        {"eliminated_count", Num(last.eliminated_count)},
        {"selected_count", Num(last.selected_count)}}},
      {"mean_det_accuracy", Num(report.mean_det_accuracy)},
      {"mean_det_f1", Num(report.mean_det_f1)},
      {"config", ConfigJson(resolved)},
  };
  out << summary.dump(2) << '\n';
}

SweepRow MakeSweepRow(const ExperimentReport& report, bool defense_on) {
  return {report.config.malicious_fraction, defense_on,
          report.final_epoch().accuracy, report.final_epoch().source_recall,
          report.mean_det_accuracy, report.mean_det_f1};
}

void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "malicious_fraction,defense_on,final_accuracy,final_source_recall,"
         "mean_det_accuracy,mean_det_f1\n";
  for (const SweepRow& r : rows) {
    out << FormatFloat(r.malicious_fraction) << ',' << (r.defense_on ? 1 : 0)
        << ',' << FormatFloat(r.final_accuracy) << ','
        << FormatFloat(r.final_source_recall) << ','
        << FormatFloat(r.mean_det_accuracy) << ','
        << FormatFloat(r.mean_det_f1) << '\n';
  }
}

int CmdRun(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    const DataSplit data = LoadData(spec);
    const ExperimentReport report =
        RunExperiment(spec.federation, data.train, data.test);
    WriteReports(spec.output_dir, spec, report);
    const EpochMean& last = report.final_epoch();
    out << "defense=" << DefenseKindName(spec.federation.defense.kind)
        << " malicious_fraction="
        << FormatFloat(spec.federation.malicious_fraction)
        << " accuracy=" << FormatFloat(last.accuracy)
        << " source_recall=" << FormatFloat(last.source_recall)
        << " det_accuracy=" << FormatFloat(report.mean_det_accuracy)
        << " det_f1=" << FormatFloat(report.mean_det_f1) << '\n'
        << "wrote " << (spec.output_dir / "rounds.csv").string() << " and "
        << (spec.output_dir / "summary.json").string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int CmdSweep(const ExperimentSpec& spec, std::ostream& out,
             std::ostream& err) {
  if (spec.sweep.empty()) {
    err << "error: no sweep fractions given\n";
    return 2;
  }
  try {
    const DataSplit data = LoadData(spec);
    std::vector<SweepRow> rows;
    for (double fraction : spec.sweep) {
      for (bool defense_on : {false, true}) {
        ExperimentSpec run = spec;
        run.federation.malicious_fraction = fraction;
        if (!defense_on) run.federation.defense.kind = DefenseKind::kNone;
        run.output_dir = spec.output_dir / FractionDirName(fraction) /
                         (defense_on ? "defense_on" : "defense_off");
        const ExperimentReport report =
            RunExperiment(run.federation, data.train, data.test);
        WriteReports(run.output_dir, run, report);
        rows.push_back(MakeSweepRow(report, defense_on));
        out << "fraction=" << FormatFloat(fraction)
            << " defense=" << (defense_on ? "on" : "off")
            << " accuracy=" << FormatFloat(rows.back().final_accuracy)
            << " source_recall="
            << FormatFloat(rows.back().final_source_recall) << '\n';
      }
    }
    std::filesystem::create_directories(spec.output_dir);
    auto csv = OpenOut(spec.output_dir / "sweep.csv");
    WriteSweepCsv(csv, rows);
    out << "wrote " << (spec.output_dir / "sweep.csv").string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lossguard
