#include "stm/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "stm/error.hpp"

namespace stm {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& value) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

[[noreturn]] void truncated(const std::string& name, std::uint64_t expected, std::uint64_t offset) {
  throw Error(ErrorCode::format_error, name + ": truncated tensor file, expected " +
                                           std::to_string(expected) + " bytes, data ends near byte " +
                                           std::to_string(offset));
}

}  // namespace

void write_tensor(std::ostream& out, const DenseTensor& t) {
  out.write("TNSR", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.order()));
  for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
  for (double v : t.values()) put<double>(out, v);
}

void write_tensor(const std::filesystem::path& path, const DenseTensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, path.string() + ": cannot open for writing");
  write_tensor(out, t);
  if (!out) throw Error(ErrorCode::io_error, path.string() + ": write failed");
}

DenseTensor read_tensor(std::istream& in, const std::string& name) {
  char magic[4];
  if (!in.read(magic, 4)) truncated(name, 8, 0);
  if (std::memcmp(magic, "TNSR", 4) != 0)
    throw Error(ErrorCode::format_error, name + ": bad magic, expected \"TNSR\"");
  std::uint32_t order = 0;
  if (!get(in, order)) truncated(name, 8, 4);
  if (order == 0 || order > kMaxOrder)
    throw Error(ErrorCode::format_error, name + ": tensor order " + std::to_string(order) +
                                             " not in 1.." + std::to_string(kMaxOrder));
  const std::uint64_t header = 8 + 8ull * order;
  Shape shape(order);
  for (std::uint32_t k = 0; k < order; ++k) {
    std::uint64_t d = 0;
    if (!get(in, d)) truncated(name, header, 8 + 8ull * k);
    if (d == 0)
      throw Error(ErrorCode::format_error, name + ": mode " + std::to_string(k + 1) + " has size 0");
    shape[k] = static_cast<std::size_t>(d);
  }
  const std::size_t count = element_count(shape);
  const std::uint64_t expected = header + 8ull * count;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!get(in, values[i])) truncated(name, expected, header + 8ull * i);
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::format_error, name + ": trailing bytes after " +
                                             std::to_string(expected) + " bytes of tensor data");
  return DenseTensor(std::move(shape), std::move(values));
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, path.string() + ": cannot open");
  return read_tensor(in, path.string());
}

}  // namespace stm
