#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

namespace taco::cli {

// Record of one command invocation, written to <out>/manifest.json before any
// other artifact.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;

  // Atomic: written to a temporary file and renamed into place.
  void write(const std::filesystem::path& out_dir) const;
};

// Writes text to path via a temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace taco::cli
