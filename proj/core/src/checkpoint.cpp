#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "taco/error.hpp"
#include "taco/model.hpp"

namespace taco {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'C', 'O', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(const float* p, std::size_t n) { bytes(p, n * sizeof(float)); }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("truncated checkpoint: " + path_);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str(std::uint32_t limit = 1u << 20) {
    const std::uint32_t n = u32();
    if (n > limit) throw DataError("corrupt checkpoint string length in " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void floats(float* p, std::size_t n) { bytes(p, n * sizeof(float)); }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::string& path, const TaskEncoder& encoder) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    Writer w(out);
    const std::string config = encoder.config().to_json();
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u64(encoder.config().digest());
    w.str(config);

    const auto& params = encoder.params().entries();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, p] : params) {
      w.str(name);
      const nn::Shape4 s = p.value.shape();
      w.u32(s.n);
      w.u32(s.c);
      w.u32(s.h);
      w.u32(s.w);
      w.floats(p.value.data(), p.value.size());
    }
    const auto& stats = encoder.running_stats();
    w.u32(static_cast<std::uint32_t>(stats.size()));
    for (const auto& [name, rs] : stats) {
      w.str(name);
      w.u32(static_cast<std::uint32_t>(rs.mean.size()));
      w.floats(rs.mean.data(), rs.mean.size());
      w.floats(rs.var.data(), rs.var.size());
    }
    if (!out) throw DataError("failed writing checkpoint: " + path);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

TaskEncoder load_impl(const std::string& path, const EncoderConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  Reader r(in, path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a checkpoint file: " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  const std::uint64_t digest = r.u64();
  const EncoderConfig config = EncoderConfig::from_json(r.str());
  if (config.digest() != digest) throw DataError("checkpoint header digest does not match its config: " + path);
  if (expected && expected->digest() != digest) {
    throw VersionError("checkpoint config digest mismatch: " + path + " stores " + config.to_json() +
                       ", expected " + expected->to_json());
  }

  TaskEncoder encoder(config, 0);
  auto& params = encoder.params();
  const std::uint32_t n_params = r.u32();
  if (n_params != params.size()) throw DataError("checkpoint parameter count mismatch: " + path);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.str();
    if (!params.contains(name)) throw DataError("unknown parameter '" + name + "' in " + path);
    nn::Parameter& p = params.at(name);
    nn::Shape4 s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    if (!(s == p.value.shape())) {
      throw DataError("shape mismatch for '" + name + "': " + s.str() + " vs " + p.value.shape().str());
    }
    r.floats(p.value.data(), p.value.size());
  }
  auto& stats = encoder.running_stats();
  const std::uint32_t n_stats = r.u32();
  if (n_stats != stats.size()) throw DataError("checkpoint running-stat count mismatch: " + path);
  for (std::uint32_t i = 0; i < n_stats; ++i) {
    const std::string name = r.str();
    auto it = stats.find(name);
    if (it == stats.end()) throw DataError("unknown running stats '" + name + "' in " + path);
    const std::uint32_t channels = r.u32();
    if (channels != it->second.mean.size()) throw DataError("running-stat width mismatch for '" + name + "'");
    r.floats(it->second.mean.data(), channels);
    r.floats(it->second.var.data(), channels);
  }
  return encoder;
}

}  // namespace

TaskEncoder load_checkpoint(const std::string& path) { return load_impl(path, nullptr); }

TaskEncoder load_checkpoint(const std::string& path, const EncoderConfig& expected) {
  return load_impl(path, &expected);
}

}  // namespace taco
