#pragma once

#include <string>

#include "docdial/model.hpp"
#include "docdial/tokenizer.hpp"

namespace docdial {

// Checkpoint file layout: one JSON header line {format_version, model_config,
// vocab listing, parameter manifest of (name, shape), blob_bytes, blob_crc32,
// run metadata}, then a newline, then the raw little-endian float32 blob in
// manifest order (Eigen column-major within each tensor).
struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  ModelParams<float> params;
  double inference_tau = 1.0;  // temperature the model last trained under
  int max_input_len = 512;     // truncation length used when training
  std::string prompt_style = "connected";
  std::string blob_crc32;  // hex; doubles as the checkpoint id
};

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const Vocabulary& vocab,
                     const ModelParams<float>& params, double inference_tau, int max_input_len,
                     const std::string& prompt_style);

// Verifies the manifest against the config and the blob against its CRC;
// throws CheckpointError on any mismatch.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace docdial
