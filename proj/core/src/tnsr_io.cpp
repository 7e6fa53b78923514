#include "chtf/tnsr_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace chtf {

static_assert(std::endian::native == std::endian::little,
              "TNSR reader/writer assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};
constexpr std::uint16_t kVersion = 1;
} // namespace

void write_tnsr(const std::filesystem::path& path, const DenseTensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  const std::uint16_t version = kVersion;
  const std::uint16_t order = static_cast<std::uint16_t>(t.order());
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&order), sizeof order);
  for (Index d : t.dims()) {
    const std::uint64_t v = static_cast<std::uint64_t>(d);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!out) throw IoError("short write: " + path.string());
}

DenseTensor read_tnsr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a TNSR file: " + path.string());

  std::uint16_t version = 0, order = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&order), sizeof order);
  if (!in) throw FormatError("truncated TNSR header: " + path.string());
  if (version != kVersion)
    throw FormatError("unsupported TNSR version " + std::to_string(version));
  if (order == 0) throw FormatError("TNSR order must be >= 1");

  std::vector<Index> dims(order);
  std::uint64_t prod = 1;
  for (auto& d : dims) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError("truncated TNSR dims: " + path.string());
    if (v == 0 || v > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
      throw FormatError("invalid TNSR extent");
    if (prod > std::numeric_limits<std::uint64_t>::max() / v ||
        prod * v > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) / sizeof(double))
      throw FormatError("TNSR extent product overflows");
    prod *= v;
    d = static_cast<Index>(v);
  }

  std::vector<double> data(prod);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(prod * sizeof(double)));
  if (static_cast<std::uint64_t>(in.gcount()) != prod * sizeof(double))
    throw FormatError("TNSR payload length mismatch: " + path.string());
  in.peek();
  if (!in.eof()) throw FormatError("trailing bytes in TNSR file: " + path.string());

  return DenseTensor(std::move(dims), std::move(data));
}

} // namespace chtf
