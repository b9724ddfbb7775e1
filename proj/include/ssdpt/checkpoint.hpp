#pragma once

#include <string>

#include "ssdpt/model.hpp"

namespace ssdpt {

// Checkpoint container, version "ssdpt-ckpt-1": a little-endian u32 JSON
// header length, the JSON header (config plus a parameter manifest of
// name/shape/offset), then all parameter data as 64-bit little-endian
// floats in manifest order.
void save_checkpoint(const std::string& path, const DptModel& model);

DptModel load_checkpoint(const std::string& path);

}  // namespace ssdpt
