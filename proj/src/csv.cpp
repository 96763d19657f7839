#include "rlearn/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace rlearn {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& cell, const char* what) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument(std::string("csv: bad number in column ") + what +
                                ": '" + cell + "'");
  }
  return value;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') {
    cells.back().pop_back();
  }
  return cells;
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("csv: cannot open for writing: " + path);
  const Index n = data.n(), d = data.d();
  for (Index j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "w,y";
  if (data.truth) out << ",tau_star,e_star,m_star,b_star";
  out << "\n";
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) out << format_double(data.x(i, j)) << ",";
    out << format_double(data.w[i]) << "," << format_double(data.y[i]);
    if (data.truth) {
      out << "," << format_double(data.truth->tau_star[i])
          << "," << format_double(data.truth->e_star[i])
          << "," << format_double(data.truth->m_star[i])
          << "," << format_double(data.truth->b_star[i]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("csv: write failed: " + path);
}

Dataset read_dataset_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  Index d = 0;
  while (true) {
    const std::string name = "x" + std::to_string(d + 1);
    bool found = false;
    for (const auto& h : table.header) {
      if (h == name) { found = true; break; }
    }
    if (!found) break;
    ++d;
  }
  if (d == 0) throw std::invalid_argument("csv: no x1..xd columns in " + path);

  const Index n = static_cast<Index>(table.rows.size());
  if (n == 0) throw std::invalid_argument("csv: no data rows in " + path);

  Dataset data;
  data.x.resize(n, d);
  data.w.resize(n);
  data.y.resize(n);

  std::vector<Index> xcols(d);
  for (Index j = 0; j < d; ++j) xcols[j] = table.column("x" + std::to_string(j + 1));
  const Index wcol = table.column("w");
  const Index ycol = table.column("y");

  const bool has_truth = [&] {
    for (const auto& h : table.header) {
      if (h == "tau_star") return true;
    }
    return false;
  }();
  Index tau_col = 0, e_col = 0, m_col = 0, b_col = 0;
  if (has_truth) {
    tau_col = table.column("tau_star");
    e_col = table.column("e_star");
    m_col = table.column("m_star");
    b_col = table.column("b_star");
    data.truth.emplace();
    data.truth->tau_star.resize(n);
    data.truth->e_star.resize(n);
    data.truth->m_star.resize(n);
    data.truth->b_star.resize(n);
  }

  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != static_cast<Index>(table.header.size())) {
      throw std::invalid_argument("csv: ragged row in " + path);
    }
    for (Index j = 0; j < d; ++j) data.x(i, j) = parse_double(row[xcols[j]], "x");
    data.w[i] = parse_double(row[wcol], "w");
    data.y[i] = parse_double(row[ycol], "y");
    if (has_truth) {
      data.truth->tau_star[i] = parse_double(row[tau_col], "tau_star");
      data.truth->e_star[i] = parse_double(row[e_col], "e_star");
      data.truth->m_star[i] = parse_double(row[m_col], "m_star");
      data.truth->b_star[i] = parse_double(row[b_col], "b_star");
    }
  }
  data.validate();
  return data;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path, std::ios::trunc);
  if (!impl_->out) throw std::runtime_error("csv: cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) impl_->out << ",";
    impl_->out << header[i];
  }
  impl_->out << "\n";
  impl_->out.flush();
  if (!impl_->out) throw std::runtime_error("csv: write failed: " + path);
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ",";
    impl_->out << cells[i];
  }
  impl_->out << "\n";
  impl_->out.flush();
  if (!impl_->out) throw std::runtime_error("csv: write failed");
}

Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Index>(i);
  }
  throw std::invalid_argument("csv: missing column " + name);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file: " + path);
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(split_line(line));
  }
  return table;
}

}  // namespace rlearn
