#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "taco/model.hpp"

namespace taco {

// Text format: a header "#taco-embeddings v1 dim=D", then one comma-separated
// line per record: sample_id, dataset_id, task_name, split, seen_task,
// seen_dataset, is_failure, then D values printed with 9 significant digits
// (exact for single precision).
void export_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path, int dim = -1);
// Throws DataError naming the offending line.
std::vector<EmbeddingRecord> import_embeddings(const std::filesystem::path& path);

}  // namespace taco
