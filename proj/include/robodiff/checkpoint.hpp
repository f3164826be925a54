#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "robodiff/backbone.hpp"

namespace robodiff {

// Everything needed to rebuild the network and its sampling schedule.
struct CheckpointMeta {
  BlockConfig cfg;
  int T = 200;
  double beta_start = 5e-4;
  double beta_end = 0.1;
};

// Format: a magic line, the meta as `key = value` text, an `end` line, then
// per parameter one `name dim0 dim1 ...` line followed by the raw
// little-endian float32 values. Save/load/save is byte-identical.
void save_checkpoint(const std::string& path, const Backbone& net, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<Backbone> net;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

// FNV-1a 64-bit hash of a whole file, hex-encoded; used as the checkpoint
// fingerprint in run manifests.
std::string file_fnv1a64(const std::string& path);

}  // namespace robodiff
