#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pjem/eval.hpp"
#include "pjem/train.hpp"

namespace pjem {

// Every tunable as a flat namespaced key (train.batch_size, layout.K, ...).
// Resolution order: defaults, then the config file, then overrides. Unknown
// keys, type mismatches and out-of-range values are rejected by key name.
struct RunConfig {
  TrainConfig train;        // includes loss weights, both augmentation branches
  EncoderConfig encoder;
  SegmentLayout layout;
  ProjectorConfig projector;
  ProbeConfig probe;

  // The fully resolved key set as one sorted, compact JSON object.
  std::string to_json() const;
  void validate() const;
};

// `overrides` entries are KEY=VALUE; values parse as JSON where possible,
// bare strings otherwise, and comma lists as arrays.
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides);
// Empty or all-whitespace files resolve to the defaults.
RunConfig parse_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

}  // namespace pjem
