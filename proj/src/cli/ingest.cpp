#include "evlab/cli/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

#include "evlab/cli/json.hpp"
#include "evlab/errors.hpp"

namespace evlab::cli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

class Builder {
 public:
  void add(double x, std::optional<std::int64_t> batch) {
    data_.values.push_back(x);
    if (!batch) return;
    data_.has_batch = true;
    auto [it, fresh] = index_.try_emplace(*batch, data_.batches.size());
    if (fresh) data_.batches.push_back(Batch{*batch, {}});
    data_.batches[it->second].values.push_back(x);
  }
  Dataset finish(const std::string& source) {
    if (data_.values.empty()) throw DataError(source + ": no observations");
    return std::move(data_);
  }

 private:
  Dataset data_;
  std::map<std::int64_t, std::size_t> index_;
};

Dataset parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  std::size_t width = 0;
  std::size_t x_col = 0;
  std::optional<std::size_t> batch_col;
  bool header = false;
  Builder out;
  while (std::getline(in, raw)) {
    ++line;
    auto body = trim(raw);
    if (body.empty()) continue;
    auto fields = split(body);
    if (!header) {
      bool found = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "x") {
          x_col = i;
          found = true;
        } else if (fields[i] == "batch") {
          batch_col = i;
        }
      }
      if (!found) fail(source, line, "header has no column named x");
      width = fields.size();
      header = true;
      continue;
    }
    if (fields.size() != width) {
      fail(source, line, "expected " + std::to_string(width) + " fields, found " +
                             std::to_string(fields.size()));
    }
    double x = 0.0;
    auto f = fields[x_col];
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
    if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(x)) {
      fail(source, line, "x is not a finite number: '" + std::string(f) + "'");
    }
    std::optional<std::int64_t> batch;
    if (batch_col) {
      std::int64_t b = 0;
      auto g = fields[*batch_col];
      auto [q, ec2] = std::from_chars(g.data(), g.data() + g.size(), b);
      if (ec2 != std::errc() || q != g.data() + g.size()) {
        fail(source, line, "batch is not an integer: '" + std::string(g) + "'");
      }
      batch = b;
    }
    out.add(x, batch);
  }
  if (!header) throw DataError(source + ": empty file");
  return out.finish(source);
}

Dataset parse_jsonl(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  Builder out;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    Json obj;
    try {
      obj = Json::parse(raw);
    } catch (const Json::parse_error& e) {
      fail(source, line, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail(source, line, "expected a JSON object");
    auto x = obj.find("x");
    if (x == obj.end()) fail(source, line, "missing field x");
    if (!x->is_number()) fail(source, line, "x is not a number");
    double v = x->get<double>();
    if (!std::isfinite(v)) fail(source, line, "x is not finite");
    std::optional<std::int64_t> batch;
    if (auto b = obj.find("batch"); b != obj.end()) {
      if (!b->is_number_integer()) fail(source, line, "batch is not an integer");
      batch = b->get<std::int64_t>();
    }
    out.add(v, batch);
  }
  if (line == 0) throw DataError(source + ": empty file");
  return out.finish(source);
}

}  // namespace

Format format_for_path(const std::string& path) {
  auto ends = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends(".jsonl") || ends(".ndjson") ? Format::jsonl : Format::csv;
}

Dataset ingest_text(const std::string& text, Format format, const std::string& source) {
  return format == Format::csv ? parse_csv(text, source) : parse_jsonl(text, source);
}

Dataset ingest(const std::string& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_text(buf.str(), format, path);
}

}  // namespace evlab::cli
