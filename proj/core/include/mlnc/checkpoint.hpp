#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlnc/tensor.hpp"

namespace mlnc {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string id;
  Tensor2 value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Binary layout, all integers and doubles little-endian:
//   "MLNCCKPT"  u32 version  u64 count
//   count x { u32 id_len  id bytes  u64 rows  u64 cols  rows*cols f64 row-major }
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& file, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& file);

}  // namespace mlnc
