#include "taco/embedding_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "taco/error.hpp"

namespace taco {

namespace {

constexpr const char* kHeaderPrefix = "#taco-embeddings v1 dim=";

void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw DataError(std::string("cannot export ") + what + " containing a comma or newline: " + s);
  }
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_flag(const std::string& s, bool& out) {
  if (s == "1") {
    out = true;
  } else if (s == "0") {
    out = false;
  } else {
    return false;
  }
  return true;
}

}  // namespace

void export_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path, int dim) {
  if (dim < 0) dim = records.empty() ? 0 : static_cast<int>(records.front().vector.size());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write embeddings: " + path.string());
  out << kHeaderPrefix << dim << '\n';
  char buf[32];
  for (const auto& r : records) {
    if (static_cast<int>(r.vector.size()) != dim) {
      throw ShapeError("record " + r.sample_id + " has " + std::to_string(r.vector.size()) + " values, expected " +
                       std::to_string(dim));
    }
    check_field(r.sample_id, "sample id");
    check_field(r.key.dataset_id, "dataset id");
    out << r.sample_id << ',' << r.key.dataset_id << ',' << task_name(r.key.task) << ',' << split_name(r.split) << ','
        << (r.seen_task ? 1 : 0) << ',' << (r.seen_dataset ? 1 : 0) << ',' << (r.is_failure ? 1 : 0);
    for (float v : r.vector) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing embeddings: " + path.string());
}

std::vector<EmbeddingRecord> import_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind(kHeaderPrefix, 0) != 0) {
    throw DataError(path.string() + ":1: missing '#taco-embeddings v1 dim=D' header");
  }
  int dim = -1;
  try {
    std::size_t used = 0;
    const std::string tail = line.substr(std::string(kHeaderPrefix).size());
    dim = std::stoi(tail, &used);
    if (used != tail.size() || dim < 0) dim = -1;
  } catch (const std::exception&) {
    dim = -1;
  }
  if (dim < 0) throw DataError(path.string() + ":1: invalid dimension in header");

  std::vector<EmbeddingRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError(path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    const auto fields = split_commas(line);
    if (fields.size() != 7 + static_cast<std::size_t>(dim)) {
      throw fail("expected " + std::to_string(dim) + " values, found " +
                 std::to_string(fields.size() >= 7 ? fields.size() - 7 : 0));
    }
    EmbeddingRecord r;
    r.sample_id = fields[0];
    r.key.dataset_id = fields[1];
    const auto task = parse_task(fields[2]);
    if (!task) throw fail("unknown task '" + fields[2] + "'");
    r.key.task = *task;
    try {
      r.split = parse_split(fields[3]);
    } catch (const Error&) {
      throw fail("unknown split '" + fields[3] + "'");
    }
    if (!parse_flag(fields[4], r.seen_task) || !parse_flag(fields[5], r.seen_dataset) ||
        !parse_flag(fields[6], r.is_failure)) {
      throw fail("flags must be 0 or 1");
    }
    r.key.failure = r.is_failure;
    r.vector.reserve(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      const std::string& f = fields[7 + static_cast<std::size_t>(j)];
      char* end = nullptr;
      const float v = std::strtof(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size()) throw fail("malformed value '" + f + "'");
      r.vector.push_back(v);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace taco
