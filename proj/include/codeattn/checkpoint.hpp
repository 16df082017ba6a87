#pragma once

#include <filesystem>
#include <string>

#include "codeattn/encoder.hpp"

namespace codeattn {

struct Checkpoint {
  EncoderConfig config;
  EncoderParams params;
};

// Layout:
//   codeattn-checkpoint 1
//   config <EncoderConfig::describe()>
//   tensors <count>
//   <name> <rows>x<cols> f32 <byte offset>     (one line per tensor)
//   end
// followed by little-endian f32 payloads in header order; offsets are
// relative to the first payload byte.
std::string serialize_checkpoint(const EncoderParams& params, const EncoderConfig& config);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const EncoderConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace codeattn
