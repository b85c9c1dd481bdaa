#pragma once

// Run directories, manifests and append-only CSV logs.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace tdm {

inline constexpr int kRunLogVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Creates `dir` (and parents). Throws std::runtime_error if it already
/// exists and is not empty, so finished runs are never touched again.
void create_run_dir(const std::filesystem::path& dir);

/// Writes `content` to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// CSV log whose first line is "# tdm-log v<version>" followed by a fixed
/// column header. Rows must carry non-decreasing iterations.
class CsvLog {
 public:
  CsvLog(const std::filesystem::path& path, std::vector<std::string> columns);

  /// First column is the iteration; `values` fill the remaining columns.
  void append(std::size_t iteration, const std::vector<std::string>& values);
  void append(std::size_t iteration, const std::vector<double>& values);
  std::size_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
  std::size_t rows_ = 0;
  std::size_t last_iteration_ = 0;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

/// Reads a log written by CsvLog; checks the version line.
CsvTable read_csv_log(const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace tdm
