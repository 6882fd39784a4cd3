#pragma once

#include <string>

#include "benh/pipeline.hpp"

namespace benh {

// Trained model state: SEM + FFN tensors plus the two frozen whitening
// transforms and the full pipeline configuration.
//
// File format ("BENH"): magic bytes, version u32 LE, header length u64 LE,
// JSON header (config + tensor directory with name/shape/offset), then raw
// f64 LE tensor payloads at the listed offsets.
struct Checkpoint {
  PipelineConfig cfg;
  SemParams params;
  WhiteningTransform whiten_fn;
  WhiteningTransform whiten_str;
};

std::string serialize_checkpoint(const Checkpoint& c);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin = "<memory>");
Checkpoint load_checkpoint(const std::string& path);

}  // namespace benh
