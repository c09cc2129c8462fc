#pragma once

#include "qoie/numerics/parameter.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qoie::numerics {

inline constexpr const char* kCheckpointMagic = "QOIE-CKPT v1";

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

// Layout: the magic line terminated by '\n', then per tensor
//   u32 name length, name bytes (UTF-8), u32 rank, u32 dims[rank],
//   f32 values[product(dims)]
// with every integer and float little-endian. Parameters are stored as rank 2.
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into `params`. Every parameter must be present with
// a matching shape and the checkpoint may not carry extras; otherwise throws
// std::runtime_error naming the first offending tensor.
void load_checkpoint(const std::filesystem::path& path, ParameterSet& params);

}  // namespace qoie::numerics
