#pragma once

#include <string>

#include "tracklab/eval/ablation.hpp"
#include "tracklab/rl/distill.hpp"

namespace tracklab {

// Whole-run configuration. Every field has a working default; a JSON config
// file overrides sections selectively. Unknown keys are rejected with their
// path, and the fully-resolved configuration is written into the run
// directory so a run is reproducible from its artifacts alone.
struct RunConfig {
  uint64_t seed = 1;

  EnvConfig env;           // sim + rewards + dr + rsi sections
  PpoConfig ppo;
  PolicyConfig policy;     // omoe section (obs_dim derived, not configurable)
  EncoderConfig encoder;
  DistillConfig distill;

  struct EvalSection {
    int trials = 50;
    std::vector<double> duration_buckets{5.0, 15.0};
  } eval;

  struct AblateSection {
    int iterations = 300;
    int eval_trials = 16;
  } ablate;

  static RunConfig load(const std::string& path);  // throws on any problem
  static RunConfig from_json_text(const std::string& text);
  std::string resolved_json() const;

  void validate() const;  // semantic checks with field paths in messages
};

// FNV-1a content hash of a list of files plus the resolved config text.
uint64_t input_content_hash(const std::string& resolved_config,
                            const std::vector<std::string>& files);

}  // namespace tracklab
