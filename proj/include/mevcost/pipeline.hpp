#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mevcost/effects.hpp"
#include "mevcost/ingest.hpp"
#include "mevcost/synth.hpp"

namespace mevcost::pipeline {

enum class Stage {
  kIngestCheck,
  kFit,
  kEffects,
  kInsurance,
  kSandwich,
  kConcentration,
};

struct PipelineConfig {
  IngestConfig inputs;
  bool extended = false;
  int n_buckets = 4;  // 10 = decile robustness variant
  double amm_fee_rate = 0.003;
  int ttest_sides = 2;
  std::size_t bootstrap_resamples = 999;
  double effect_threshold = 0.5;
  effects::InsuranceMode insurance_mode = effects::InsuranceMode::kGapToCertainty;
  double me_gas_floor = 1e-12;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  unsigned threads = 0;
  synth::SynthConfig synth;
  std::string config_hash;  // FNV-1a of the raw config file bytes
};

// Parses the JSON config file; unknown keys are rejected so typos fail
// loudly. CLI flags are applied on top by the caller.
PipelineConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

struct OutputRecord {
  std::string name;
  std::size_t rows = 0;
  bool incomplete = false;
};

struct Manifest {
  std::vector<OutputRecord> outputs;
  std::vector<std::pair<std::string, std::string>> figures;  // figureNN -> file
  std::string config_hash;
  std::vector<UtcDay> excluded_dates;
  std::string error;  // non-empty when a stage failed
};

// Runs the requested stages over the configured window, emitting report
// files plus manifest.txt into config.out_dir. A module error is surfaced
// with the failing day and stage after the manifest (with any partial
// output marked incomplete) has been written.
Manifest run_pipeline(const PipelineConfig& config, const std::set<Stage>& stages);

void write_manifest(const Manifest& manifest, const std::string& path);

}  // namespace mevcost::pipeline
