#include "mec/table.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mec {
namespace {

void check_token(const std::string& s, const char* what) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
    throw std::invalid_argument(std::string(what) + " must not contain ',' or newlines: " + s);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Full-field double parse; returns nothing for labels and malformed cells.
std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

ResultTable::ResultTable(std::vector<std::string> columns,
                         std::optional<std::string> label_column)
    : columns_(std::move(columns)), label_(std::move(label_column)) {
  if (columns_.empty())
    throw std::invalid_argument("ResultTable needs at least one column");
  for (const auto& c : columns_) check_token(c, "column name");
  if (label_) check_token(*label_, "label column name");
}

void ResultTable::set_meta(const std::string& key, const std::string& value) {
  if (key.empty() || key.find(':') != std::string::npos ||
      key.find('\n') != std::string::npos)
    throw std::invalid_argument("metadata key must be non-empty without ':'");
  if (value.find('\n') != std::string::npos)
    throw std::invalid_argument("metadata value must not contain newlines");
  meta_[key] = value;
}

void ResultTable::add_row(const std::vector<double>& values) {
  if (label_)
    throw std::invalid_argument("labeled table: use add_row(label, values)");
  if (values.size() != columns_.size())
    throw std::invalid_argument("row width does not match column count");
  rows_.push_back(values);
}

void ResultTable::add_row(const std::string& label,
                          const std::vector<double>& values) {
  if (!label_)
    throw std::invalid_argument("unlabeled table: use add_row(values)");
  if (values.size() != columns_.size())
    throw std::invalid_argument("row width does not match column count");
  check_token(label, "row label");
  if (parse_double(label))
    throw std::invalid_argument("row label must not parse as a number: " +
                                label);
  labels_.push_back(label);
  rows_.push_back(values);
}

double ResultTable::at(int r, const std::string& column) const {
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (columns_[c] == column) return rows_.at(r).at(c);
  throw std::out_of_range("ResultTable has no column named " + column);
}

void ResultTable::write_csv(std::ostream& os) const {
  for (const auto& [key, value] : meta_) os << "# " << key << ": " << value << "\n";
  if (label_) os << *label_ << ",";
  for (std::size_t c = 0; c < columns_.size(); ++c)
    os << columns_[c] << (c + 1 < columns_.size() ? "," : "\n");
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (label_) os << labels_[r] << ",";
    for (std::size_t c = 0; c < columns_.size(); ++c)
      os << format_double(rows_[r][c]) << (c + 1 < columns_.size() ? "," : "\n");
  }
}

void ResultTable::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(os);
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path);
}

ResultTable ResultTable::read_csv(std::istream& is) {
  std::map<std::string, std::string> meta;
  std::string line;
  bool have_header = false;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) == 0) {
      const std::size_t sep = line.find(": ", 2);
      if (sep == std::string::npos)
        throw std::runtime_error("malformed metadata line: " + line);
      meta[line.substr(2, sep - 2)] = line.substr(sep + 2);
      continue;
    }
    header = split_csv(line);
    have_header = true;
    break;
  }
  if (!have_header) throw std::runtime_error("CSV has no header row");

  std::vector<std::vector<std::string>> raw;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw std::runtime_error("CSV row has " + std::to_string(fields.size()) +
                               " fields, expected " +
                               std::to_string(header.size()));
    raw.push_back(std::move(fields));
  }

  // The first column is a label column exactly when some data cell in it is
  // not a number (labels are forbidden from parsing as numbers on write).
  bool labeled = false;
  for (const auto& row : raw)
    if (!parse_double(row[0])) labeled = true;
  if (labeled && header.size() < 2)
    throw std::runtime_error("labeled CSV needs at least one numeric column");

  std::vector<std::string> columns(header.begin() + (labeled ? 1 : 0),
                                   header.end());
  ResultTable table(columns, labeled ? std::optional<std::string>(header[0])
                                     : std::nullopt);
  for (auto& [key, value] : meta) table.set_meta(key, value);
  for (const auto& row : raw) {
    std::vector<double> values;
    values.reserve(columns.size());
    for (std::size_t c = labeled ? 1 : 0; c < row.size(); ++c) {
      const auto v = parse_double(row[c]);
      if (!v) throw std::runtime_error("non-numeric cell: " + row[c]);
      values.push_back(*v);
    }
    if (labeled)
      table.add_row(row[0], values);
    else
      table.add_row(values);
  }
  return table;
}

ResultTable ResultTable::read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_csv(is);
}

}  // namespace mec
