#include "mlnc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mlnc {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'L', 'N', 'C', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  auto bits = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw CheckpointError("checkpoint truncated");
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(bits);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& file, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + file.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, tensors.size());
  for (const auto& t : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.id.size()));
    out.write(t.id.data(), static_cast<std::streamsize>(t.id.size()));
    put_le<std::uint64_t>(out, t.value.rows());
    put_le<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw CheckpointError("failed writing " + file.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + file.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CheckpointError(file.string() + " is not a checkpoint");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(in);
  std::vector<NamedTensor> out;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint32_t>(in);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw CheckpointError("checkpoint truncated");
    const auto rows = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    std::vector<double> data(rows * cols);
    for (double& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    out.push_back({std::move(id), Tensor2(rows, cols, std::move(data))});
  }
  return out;
}

}  // namespace mlnc
