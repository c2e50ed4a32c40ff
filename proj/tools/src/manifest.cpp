#include "manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "taco/error.hpp"

namespace taco::cli {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json j{{"command", command},
                   {"config", config},
                   {"seed", seed},
                   {"inputs", inputs},
                   {"outputs", outputs},
                   {"code_version", TACO_CODE_VERSION},
                   {"created_at", stamp}};
  write_text_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace taco::cli
