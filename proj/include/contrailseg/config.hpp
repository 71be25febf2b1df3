#pragma once

#include <cstdint>
#include <string>

#include "contrailseg/synth.hpp"
#include "contrailseg/train.hpp"
#include "contrailseg/validity.hpp"

namespace contrailseg {

// Union of everything the command-line tool can run; each subcommand reads
// the sections it needs. Unknown keys are rejected with their full path.
struct RunConfig {
  uint64_t seed = 0;
  std::string out_dir = "out";
  std::string data_dir;
  std::string unlabeled_dir;
  std::string eval_dir;
  SceneConfig scene;
  NetworkSpec network;
  TrainConfig train;
  AugmentConfig augment;
  ValidityConfig validity;
  LossConfig loss;
};

RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Canonical serialisation of the fully resolved config: stable key order,
// every field present. config_hash is FNV-1a(64) of this text.
std::string canonical_config_json(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

void write_resolved_config(const std::string& path, const RunConfig& cfg);

}  // namespace contrailseg
