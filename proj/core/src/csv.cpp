#include "uavnet/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace uavnet::csv {

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void Writer::separator() {
  if (current_ >= columns_) throw std::logic_error("csv row has more fields than the header");
  if (current_++ > 0) out_ << ',';
}

Writer& Writer::operator<<(double v) {
  separator();
  out_ << format(v);
  return *this;
}

Writer& Writer::operator<<(int v) {
  separator();
  out_ << v;
  return *this;
}

Writer& Writer::operator<<(std::int64_t v) {
  separator();
  out_ << v;
  return *this;
}

Writer& Writer::operator<<(std::uint64_t v) {
  separator();
  out_ << v;
  return *this;
}

Writer& Writer::operator<<(const std::string& v) {
  separator();
  out_ << v;
  return *this;
}

void Writer::end_row() {
  if (current_ != columns_) throw std::logic_error("csv row is missing fields");
  out_ << '\n';
  current_ = 0;
}

void Writer::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("csv write failed");
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("csv has no column '" + name + "'");
}

double Table::number(std::size_t row, const std::string& name) const {
  return std::stod(rows.at(row).at(column(name)));
}

long long Table::integer(std::size_t row, const std::string& name) const {
  return std::stoll(rows.at(row).at(column(name)));
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size()) {
        throw std::runtime_error(path.string() + ": row width differs from header");
      }
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw std::runtime_error(path.string() + ": missing header");
  return t;
}

}  // namespace uavnet::csv
