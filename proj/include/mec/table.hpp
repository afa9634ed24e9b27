#pragma once
// Columnar result tables with deterministic CSV serialization.  Numbers are
// rendered with %.17g so a write -> read round trip reproduces every double
// bit-for-bit; metadata rides along as sorted "# key: value" comment lines
// (never timestamps, so identical runs produce identical bytes).
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mec {

// FNV-1a 64-bit hash; used to fingerprint canonicalized configurations.
std::uint64_t fnv1a64(const std::string& bytes);

class ResultTable {
 public:
  // Numeric column names, plus an optional leading text column (points in a
  // sweep are labeled by topology, preset phase, ...).  Column names and
  // labels must not contain commas or newlines.
  explicit ResultTable(std::vector<std::string> columns,
                       std::optional<std::string> label_column = {});

  void set_meta(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& meta() const { return meta_; }

  void add_row(const std::vector<double>& values);  // unlabeled tables
  void add_row(const std::string& label, const std::vector<double>& values);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::optional<std::string>& label_column() const { return label_; }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<double>& row(int r) const { return rows_.at(r); }
  const std::string& label(int r) const { return labels_.at(r); }
  // Value by column name; throws std::out_of_range on unknown columns.
  double at(int r, const std::string& column) const;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;  // throws on I/O failure
  static ResultTable read_csv(std::istream& is);
  static ResultTable read_csv(const std::string& path);

 private:
  std::vector<std::string> columns_;
  std::optional<std::string> label_;
  std::map<std::string, std::string> meta_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::string> labels_;
};

}  // namespace mec
