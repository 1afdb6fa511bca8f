#pragma once

// Weight-file container, little-endian throughout:
//
//   "GWML"            4 bytes magic
//   version           u16 (currently 1)
//   payload kind      u8, 'M' (network layers) or 'Q' (Q-table)
//   record count      u32
//   records...
//
// 'M' record: rows u32, cols u32, rows*cols f64 row-major. A dense layer is
//             stored as an out x (in + 1) matrix whose last column is the bias.
// 'Q' record: key u64, length u32, length f64 action values. Records are
//             sorted by key.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gridlab {

inline constexpr std::uint16_t kModelFileVersion = 1;

struct MatrixRecord {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> data;

  friend bool operator==(const MatrixRecord&, const MatrixRecord&) = default;
};

struct QRecord {
  std::uint64_t key = 0;
  std::vector<double> values;

  friend bool operator==(const QRecord&, const QRecord&) = default;
};

void write_matrices(const std::filesystem::path& path, const std::vector<MatrixRecord>& records);
std::vector<MatrixRecord> read_matrices(const std::filesystem::path& path);

void write_qrecords(const std::filesystem::path& path, const std::vector<QRecord>& records);
std::vector<QRecord> read_qrecords(const std::filesystem::path& path);

}  // namespace gridlab
