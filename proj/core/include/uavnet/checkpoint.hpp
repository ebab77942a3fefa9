#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/tensor.hpp"
#include "uavnet/training.hpp"

namespace uavnet::checkpoint {

// Little-endian binary file:
//   "UAVNCKPT" u32 version u32 count
//   count x { u32 name_len, name bytes, u32 rank, rank x u64 dim, f64 data }
inline constexpr std::uint32_t kFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  ad::Tensor value;
};

void write(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read(const std::filesystem::path& path);

// Tensors are named agent<j>/<parameter name>.
std::vector<NamedTensor> collect(training::MultiAgent& agents);
void save(const std::filesystem::path& path, training::MultiAgent& agents);
// Throws CheckpointError when names or shapes differ from `agents`.
void load(const std::filesystem::path& path, training::MultiAgent& agents);

}  // namespace uavnet::checkpoint
