#include "gridlab/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "gridlab/errors.hpp"

namespace gridlab {

namespace {

constexpr char kMagic[4] = {'G', 'W', 'M', 'L'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }

  void flush(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path_ + "' for reading");
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool at_end() const { return pos_ == bytes_.size(); }

  /// Validates magic and version and returns the payload kind.
  char header() {
    need(4);
    if (std::memcmp(bytes_.data(), kMagic, 4) != 0) throw IoError("'" + path_ + "' is not a GWML file");
    pos_ = 4;
    const std::uint16_t version = u16();
    if (version != kModelFileVersion) {
      throw VersionError("'" + path_ + "' has model file version " + std::to_string(version) + ", expected " +
                         std::to_string(kModelFileVersion));
    }
    return static_cast<char>(u8());
  }

  const std::string& path() const { return path_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("'" + path_ + "' is truncated");
  }

  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

void header(Writer& w, char kind, std::size_t count) {
  w.raw(kMagic, 4);
  w.u16(kModelFileVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(static_cast<std::uint32_t>(count));
}

}  // namespace

void write_matrices(const std::filesystem::path& path, const std::vector<MatrixRecord>& records) {
  Writer w;
  header(w, 'M', records.size());
  for (const auto& m : records) {
    if (m.data.size() != static_cast<std::size_t>(m.rows) * m.cols) {
      throw ContractError("matrix record size does not match its shape");
    }
    w.u32(m.rows);
    w.u32(m.cols);
    for (double d : m.data) w.f64(d);
  }
  w.flush(path);
}

std::vector<MatrixRecord> read_matrices(const std::filesystem::path& path) {
  Reader r(path);
  if (r.header() != 'M') throw IoError("'" + r.path() + "' does not hold network weights");
  const std::uint32_t count = r.u32();
  std::vector<MatrixRecord> out(count);
  for (auto& m : out) {
    m.rows = r.u32();
    m.cols = r.u32();
    m.data.resize(static_cast<std::size_t>(m.rows) * m.cols);
    for (double& d : m.data) d = r.f64();
  }
  if (!r.at_end()) throw IoError("'" + r.path() + "' has trailing bytes");
  return out;
}

void write_qrecords(const std::filesystem::path& path, const std::vector<QRecord>& records) {
  Writer w;
  header(w, 'Q', records.size());
  for (const auto& q : records) {
    w.u64(q.key);
    w.u32(static_cast<std::uint32_t>(q.values.size()));
    for (double d : q.values) w.f64(d);
  }
  w.flush(path);
}

std::vector<QRecord> read_qrecords(const std::filesystem::path& path) {
  Reader r(path);
  if (r.header() != 'Q') throw IoError("'" + r.path() + "' does not hold a Q-table");
  const std::uint32_t count = r.u32();
  std::vector<QRecord> out(count);
  for (auto& q : out) {
    q.key = r.u64();
    q.values.resize(r.u32());
    for (double& d : q.values) d = r.f64();
  }
  if (!r.at_end()) throw IoError("'" + r.path() + "' has trailing bytes");
  return out;
}

}  // namespace gridlab
