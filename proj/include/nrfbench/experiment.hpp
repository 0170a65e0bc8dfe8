/*
 * Copyright 2026 The nrfbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// On-disk experiments. Layout under cfg.output_dir:
//
//   state.json                          config digest and completed phases
//   runs/seed-<s>/model.json            source classifier checkpoint
//   runs/seed-<s>/standard.json         per-run clean evaluation
//   runs/seed-<s>/robust-<tm>.json      per-run attacked evaluation
//   runs/seed-<s>/nrf-<tm>/             NRF dataset (see nrf.hpp)
//   runs/seed-<s>/nrf-<tm>/model.json   NRF classifier checkpoint
//   runs/seed-<s>/nrf_on_nrf-<tm>.json, nrf_on_original-<tm>.json
//
// A phase is skipped when state.json records it under the current config
// digest and every recorded input and output file still hashes to the
// recorded value. All files are written to a temporary name and renamed.

#ifndef NRFBENCH_EXPERIMENT_HPP_
#define NRFBENCH_EXPERIMENT_HPP_

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "nrfbench/checkpoint.hpp"
#include "nrfbench/digest.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/harness.hpp"
#include "nrfbench/nrf.hpp"
#include "nrfbench/report.hpp"

namespace nrfbench {

namespace fs = std::filesystem;

inline void WriteFileAtomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIoError, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorKind::kIoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot rename to " + path.string());
}

inline nlohmann::json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
}

/// Report file stem: <phase>_<encoder>_<eps>, with '/' in the epsilon label
/// replaced so "4/255" stays a single path component.
inline std::string ReportStem(const std::string& phase, const std::string& encoder,
                              const std::optional<ThreatModel>& tm) {
  std::string eps = "clean";
  if (tm) {
    eps = tm->EpsilonLabel();
    std::replace(eps.begin(), eps.end(), '/', '-');
    if (tm->norm == Norm::kL2) eps += "-l2";
  }
  return phase + "_" + encoder + "_" + eps;
}

class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) { LoadState(); }

  const ExperimentConfig& config() const { return cfg_; }

  /// Digest of every config field that affects results.
  std::string ConfigDigest() const {
    nlohmann::json tms = nlohmann::json::object();
    for (const auto& [name, tm] : cfg_.threat_models) tms[name] = tm;
    const nlohmann::json j{{"manifest", ManifestToJson(cfg_.manifest)},
                           {"encoder", cfg_.encoder},
                           {"encoder_options", cfg_.encoder_options},
                           {"train", cfg_.train},
                           {"val_fraction", cfg_.val_fraction},
                           {"threat_models", tms},
                           {"seeds", cfg_.seeds},
                           {"tpr_metrics", cfg_.tpr_metrics}};
    return Sha256Hex(j.dump());
  }

  bool PhaseValid(const std::string& phase) const {
    const auto& phases = state_["phases"];
    if (!phases.contains(phase)) return false;
    for (const char* key : {"inputs", "outputs"}) {
      for (const auto& [rel, digest] : phases[phase][key].items()) {
        const fs::path p = cfg_.output_dir / rel;
        std::error_code ec;
        if (!fs::is_regular_file(p, ec) || Sha256File(p) != digest.get<std::string>()) {
          return false;
        }
      }
    }
    return true;
  }

  // Each phase returns false when skipped because its artifacts validate.

  bool Train(bool force = false) {
    const std::string phase = "train";
    if (!force && PhaseValid(phase)) return false;
    const auto t0 = std::chrono::steady_clock::now();
    const StandardOutcome out = RunStandard(cfg_, Data());
    std::vector<fs::path> outputs;
    for (std::size_t k = 0; k < cfg_.seeds.size(); ++k) {
      const fs::path dir = RunDir(k);
      outputs.push_back(dir / "model.json");
      WriteFileAtomic(outputs.back(),
                      CheckpointToJson({out.models[k], cfg_.seeds[k], cfg_.train}).dump() + "\n");
      outputs.push_back(dir / "standard.json");
      WriteFileAtomic(outputs.back(), RunEvaluationToJson(out.runs[k]).dump(1) + "\n");
    }
    RecordPhase(phase, {}, outputs, t0);
    return true;
  }

  bool AttackEval(const std::string& tm_name, bool force = false) {
    const ThreatModel& tm = cfg_.tm(tm_name);
    Train();
    const std::string phase = "robust:" + tm_name;
    if (!force && PhaseValid(phase)) return false;
    const auto t0 = std::chrono::steady_clock::now();
    const auto models = LoadModels();
    std::vector<fs::path> outputs;
    for (std::size_t k = 0; k < models.size(); ++k) {
      const RunEvaluation e = RobustRun(cfg_, models[k], Data().test, tm, cfg_.seeds[k]);
      outputs.push_back(RunDir(k) / ("robust-" + tm_name + ".json"));
      WriteFileAtomic(outputs.back(), RunEvaluationToJson(e).dump(1) + "\n");
    }
    RecordPhase(phase, ModelFiles(), outputs, t0);
    return true;
  }

  bool GenNrf(const std::string& tm_name, bool force = false) {
    const ThreatModel& tm = cfg_.tm(tm_name);
    Train();
    const std::string phase = "gen-nrf:" + tm_name;
    if (!force && PhaseValid(phase)) return false;
    const auto t0 = std::chrono::steady_clock::now();
    const auto models = LoadModels();
    std::vector<fs::path> outputs;
    for (std::size_t k = 0; k < models.size(); ++k) {
      const fs::path dir = NrfDir(k, tm_name);
      fs::path tmp = dir;
      tmp += ".tmp";
      std::error_code ec;
      fs::remove_all(tmp, ec);
      WriteNrfDataset(MakeNrfSplits(models[k], Data(), tm, cfg_.seeds[k]), cfg_.manifest, tmp);
      fs::remove_all(dir, ec);
      fs::rename(tmp, dir, ec);
      if (ec) throw Error(ErrorKind::kIoError, "cannot rename to " + dir.string());
      for (const auto& f : FilesUnder(dir)) outputs.push_back(f);
    }
    RecordPhase(phase, ModelFiles(), outputs, t0);
    return true;
  }

  bool TrainNrf(const std::string& tm_name, bool force = false) {
    cfg_.tm(tm_name);
    GenNrf(tm_name);
    const std::string phase = "train-nrf:" + tm_name;
    if (!force && PhaseValid(phase)) return false;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<fs::path> inputs, outputs;
    for (std::size_t k = 0; k < cfg_.seeds.size(); ++k) {
      const fs::path dir = NrfDir(k, tm_name);
      for (const auto& f : FilesUnder(dir)) {
        if (f.filename() != "model.json") inputs.push_back(f);
      }
      NrfRun run = TrainNrfRun(cfg_, ReadNrfDataset(dir), Data(), cfg_.seeds[k]);
      outputs.push_back(dir / "model.json");
      WriteFileAtomic(outputs.back(),
                      CheckpointToJson({run.model, cfg_.seeds[k], cfg_.train}).dump() + "\n");
      outputs.push_back(RunDir(k) / ("nrf_on_nrf-" + tm_name + ".json"));
      WriteFileAtomic(outputs.back(), RunEvaluationToJson(run.on_nrf).dump(1) + "\n");
      outputs.push_back(RunDir(k) / ("nrf_on_original-" + tm_name + ".json"));
      WriteFileAtomic(outputs.back(), RunEvaluationToJson(run.on_original).dump(1) + "\n");
    }
    RecordPhase(phase, inputs, outputs, t0);
    return true;
  }

  /// Writes one CSV and one SVG per completed phase and threat model.
  std::vector<fs::path> Report(const fs::path& out_dir) const {
    const auto groups = EvalGroupsOf(cfg_.manifest);
    std::vector<fs::path> written;
    auto emit = [&](const std::string& phase, const std::optional<ThreatModel>& tm,
                    const std::string& file_prefix, const char* colour) {
      std::vector<RunEvaluation> runs;
      for (std::size_t k = 0; k < cfg_.seeds.size(); ++k) {
        runs.push_back(RunEvaluationFromJson(ReadJsonFile(RunDir(k) / (file_prefix + ".json"))));
      }
      const EvalReport report = AggregateReport(runs, groups);
      const std::string stem = ReportStem(phase, cfg_.encoder, tm);
      written.push_back(out_dir / (stem + ".csv"));
      WriteFileAtomic(written.back(), ReportCsv(report));
      written.push_back(out_dir / (stem + ".svg"));
      WriteFileAtomic(written.back(), ReportSvg(report, stem, colour));
    };
    if (PhaseValid("train")) emit("standard", std::nullopt, "standard", "#1f77b4");
    for (const auto& name : cfg_.eval_tms) {
      if (PhaseValid("robust:" + name)) emit("robust", cfg_.tm(name), "robust-" + name, "#d62728");
    }
    for (const auto& name : cfg_.nrf_tms) {
      if (!PhaseValid("train-nrf:" + name)) continue;
      emit("nrf_on_nrf", cfg_.tm(name), "nrf_on_nrf-" + name, "#ff7f0e");
      emit("nrf_on_original", cfg_.tm(name), "nrf_on_original-" + name, "#9467bd");
    }
    if (written.empty()) throw Error(ErrorKind::kEmptyResults, "no completed phases to report");
    return written;
  }

  /// Full loop; reports go to <output_dir>/reports.
  std::vector<fs::path> All(bool force = false) {
    Train(force);
    for (const auto& name : cfg_.eval_tms) AttackEval(name, force);
    for (const auto& name : cfg_.nrf_tms) {
      GenNrf(name, force);
      TrainNrf(name, force);
    }
    return Report(cfg_.output_dir / "reports");
  }

 private:
  fs::path RunDir(std::size_t k) const {
    return cfg_.output_dir / "runs" / ("seed-" + std::to_string(cfg_.seeds[k]));
  }

  fs::path NrfDir(std::size_t k, const std::string& tm_name) const {
    return RunDir(k) / ("nrf-" + tm_name);
  }

  std::vector<fs::path> ModelFiles() const {
    std::vector<fs::path> out;
    for (std::size_t k = 0; k < cfg_.seeds.size(); ++k) out.push_back(RunDir(k) / "model.json");
    return out;
  }

  static std::vector<fs::path> FilesUnder(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const DataSplits& Data() {
    if (!data_) data_ = LoadData(cfg_);
    return *data_;
  }

  std::vector<OneClassClassifier> LoadModels() const {
    std::vector<OneClassClassifier> out;
    for (const auto& p : ModelFiles()) out.push_back(LoadCheckpoint(p).classifier);
    return out;
  }

  fs::path StatePath() const { return cfg_.output_dir / "state.json"; }

  void LoadState() {
    const std::string digest = ConfigDigest();
    std::error_code ec;
    if (fs::is_regular_file(StatePath(), ec)) {
      try {
        state_ = ReadJsonFile(StatePath());
      } catch (const Error&) {
        state_ = nullptr;  // unreadable state only costs a rerun
      }
    }
    if (!state_.is_object() || state_.value("config_digest", "") != digest ||
        !state_.contains("phases")) {
      state_ = {{"config_digest", digest}, {"phases", nlohmann::json::object()}};
    }
  }

  void RecordPhase(const std::string& phase, const std::vector<fs::path>& inputs,
                   const std::vector<fs::path>& outputs,
                   std::chrono::steady_clock::time_point t0) {
    auto digests = [&](const std::vector<fs::path>& files) {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& f : files) j[fs::relative(f, cfg_.output_dir).generic_string()] = Sha256File(f);
      return j;
    };
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state_["phases"][phase] = {{"inputs", digests(inputs)},
                               {"outputs", digests(outputs)},
                               {"seeds", cfg_.seeds},
                               {"wall_seconds", secs}};
    WriteFileAtomic(StatePath(), state_.dump(1) + "\n");
  }

  ExperimentConfig cfg_;
  std::optional<DataSplits> data_;
  nlohmann::json state_;
};

}  // namespace nrfbench

#endif  // NRFBENCH_EXPERIMENT_HPP_
