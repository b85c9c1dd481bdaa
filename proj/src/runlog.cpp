#include "tdm/runlog.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tdm {

namespace fs = std::filesystem;

void create_run_dir(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      throw std::runtime_error("run directory " + dir.string() +
                               " already holds a run; choose another --out");
    }
    return;
  }
  fs::create_directories(dir);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

CsvLog::CsvLog(const fs::path& path, std::vector<std::string> columns)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(std::move(columns)) {
  if (!out_) throw std::runtime_error("cannot open log " + path.string());
  if (columns_.empty() || columns_.front() != "iteration") {
    throw std::invalid_argument("CsvLog: first column must be 'iteration'");
  }
  out_ << "# tdm-log v" << kRunLogVersion << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << "\n";
  out_.flush();
}

void CsvLog::append(std::size_t iteration, const std::vector<std::string>& values) {
  if (values.size() + 1 != columns_.size()) throw std::invalid_argument("CsvLog: wrong number of values");
  if (rows_ > 0 && iteration < last_iteration_) {
    throw std::invalid_argument("CsvLog: iterations must not decrease");
  }
  out_ << iteration;
  for (const auto& v : values) out_ << ',' << v;
  out_ << "\n";
  out_.flush();
  last_iteration_ = iteration;
  ++rows_;
}

void CsvLog::append(std::size_t iteration, const std::vector<double>& values) {
  std::vector<std::string> s;
  s.reserve(values.size());
  for (double v : values) s.push_back(format_number(v));
  append(iteration, s);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("log has no column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(std::stod(r.at(c)));
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing log " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "# tdm-log v" + std::to_string(kRunLogVersion)) {
    throw std::runtime_error(path.string() + ": not a v" + std::to_string(kRunLogVersion) +
                             " tdm log");
  }
  CsvTable t;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header row");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.columns.size()) throw std::runtime_error(path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace tdm
