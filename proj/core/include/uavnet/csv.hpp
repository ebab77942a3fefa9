#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace uavnet::csv {

// Formats a double with enough digits to round-trip.
std::string format(double v);

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  Writer& operator<<(double v);
  Writer& operator<<(int v);
  Writer& operator<<(std::int64_t v);
  Writer& operator<<(std::uint64_t v);
  Writer& operator<<(const std::string& v);
  void end_row();
  void close();

 private:
  void separator();

  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t current_ = 0;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  long long integer(std::size_t row, const std::string& name) const;
};

Table read(const std::filesystem::path& path);

}  // namespace uavnet::csv
