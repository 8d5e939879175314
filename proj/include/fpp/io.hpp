#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpp/config.hpp"
#include "fpp/lattice.hpp"

namespace fpp {

/// Shortest round-trip decimal image of a double (locale-independent).
inline std::string decimal(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{})
    throw std::runtime_error("decimal: formatting failed");
  return std::string(buf, res.ptr);
}

inline std::string decimal(std::int64_t v) { return std::to_string(v); }
inline std::string decimal(std::uint64_t v) { return std::to_string(v); }

/// Compact single-cell vertex image, e.g. "3:-7" (no comma, CSV-safe).
inline std::string vertex_cell(Vertex v) {
  return std::to_string(v.x) + ":" + std::to_string(v.y);
}

/**
 * In-memory CSV assembly: one provenance comment line (# key=value ...),
 * then the header row, then data rows. UTF-8, comma separators, LF endings.
 */
class CsvBuilder {
 public:
  CsvBuilder(const std::string& provenance, std::vector<std::string> columns)
      : columns_(std::move(columns)) {
    if (columns_.empty())
      throw std::invalid_argument("CsvBuilder: no columns");
    if (!provenance.empty()) out_ += "# " + provenance + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out_ += ",";
      out_ += columns_[i];
    }
    out_ += "\n";
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw std::invalid_argument("CsvBuilder: cell count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ",";
      out_ += cells[i];
    }
    out_ += "\n";
  }

  const std::string& str() const { return out_; }

 private:
  std::vector<std::string> columns_;
  std::string out_;
};

/// Writes via a sibling temp file and renames into place, so a failed run
/// never leaves a partial artifact at the final path.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(content.data(),
            static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::vector<std::uint8_t>& bytes) {
  write_file_atomic(path,
                    std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                     bytes.size()));
}

/// Provenance string stamped into every artifact header.
inline std::string provenance_line(const RunConfig& c) {
  return "seed=" + std::to_string(c.seed) + " config=" + config_hash(c);
}

/// Canonical pretty JSON image: sorted keys, two-space indent, LF endings.
inline std::string json_bytes(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/**
 * Summary skeleton shared by every command: the semantic config echo, its
 * hash, and the master seed. Execution-only parameters (thread count,
 * output directory, wall-clock) are deliberately absent so summaries are
 * byte-identical across thread counts.
 */
inline nlohmann::json summary_base(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["config"] = semantic_json(c);
  j["config_hash"] = config_hash(c);
  j["seed"] = c.seed;
  return j;
}

}  // namespace fpp
