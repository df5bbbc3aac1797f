#pragma once

#include <filesystem>
#include <string>

#include "pjem/runconfig.hpp"

namespace pjem {

// One struct covers the option surface of all five commands; each command
// reads only its own fields.
struct CommandOptions {
  std::filesystem::path out;         // gen: dataset dir; probe/diagnose: json; embed: csv
  std::filesystem::path data_dir;    // dataset directory (pretrain/probe/diagnose/embed)
  std::filesystem::path checkpoint;  // model input (probe/diagnose/embed) or output (pretrain)
  std::filesystem::path log;         // pretrain CSV
  int classes = 8;                   // gen
  int per_class = 125;               // gen
  int points = 256;                  // gen
  std::uint64_t seed = 1;            // gen
};

void run_gen(const CommandOptions& options);
void run_pretrain(const CommandOptions& options, const RunConfig& config);
ProbeResult run_probe(const CommandOptions& options, const RunConfig& config);
void run_diagnose(const CommandOptions& options, const RunConfig& config);
void run_embed(const CommandOptions& options, const RunConfig& config);

// command is one of gen|pretrain|probe|diagnose|embed. Returns the process
// exit status: 0 on success, 1 with a one-line cause on stderr otherwise.
int dispatch(const std::string& command, const CommandOptions& options, const RunConfig& config);

}  // namespace pjem
