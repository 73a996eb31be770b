#pragma once
// Observation files: CSV with a numeric column `x` and optional integer
// column `batch`, or JSON lines {"x": number, "batch": integer}.

#include <cstdint>
#include <string>
#include <vector>

namespace evlab::cli {

enum class Format { csv, jsonl };

/// Format from the file extension: .jsonl / .ndjson are JSON lines, anything
/// else CSV.
Format format_for_path(const std::string& path);

struct Batch {
  std::int64_t id = 0;
  std::vector<double> values;
};

struct Dataset {
  std::vector<double> values;  // all rows in file order
  std::vector<Batch> batches;  // groups in order of first appearance; empty without a batch column
  bool has_batch = false;
};

/// Errors are DataError messages starting with "<path>:<line>:".
Dataset ingest(const std::string& path, Format format);
Dataset ingest_text(const std::string& text, Format format, const std::string& source = "<input>");

}  // namespace evlab::cli
