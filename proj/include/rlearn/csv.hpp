#pragma once

// Headerful CSV serialization for datasets (columns x1..xd, w, y and the
// optional ground-truth columns) plus a small row writer used by the
// experiment drivers. Numbers are written shortest-round-trip so a load of a
// save is bit-identical.

#include "rlearn/data.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rlearn {

void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

std::string format_double(double value);

// Line-buffered CSV writer: header on construction, one flush per row so a
// crashed run leaves a parseable prefix.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write_row(const std::vector<std::string>& cells);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Minimal reader for our own outputs: header + string cells, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const;  // throws if absent
};
CsvTable read_csv(const std::string& path);

}  // namespace rlearn
