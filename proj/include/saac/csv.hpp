// Copyright 2026 The SAAC Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAAC_CSV_HPP_
#define SAAC_CSV_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "saac/common.hpp"

namespace saac {

// Minimal comma-separated tables: UTF-8, mandatory header row, no quoting
// (no emitted field ever contains a comma).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw ConfigError("csv: missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  SAAC_CHECK(in.good(), "cannot open csv file: " + path);
  CsvTable table;
  std::string line;
  SAAC_CHECK(static_cast<bool>(std::getline(in, line)),
             "csv file has no header: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> row = split_csv_line(line);
    SAAC_CHECK(row.size() == table.header.size(),
               "csv row width mismatch in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline double csv_double(const std::string& field) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    SAAC_CHECK(pos == field.size(), "csv: trailing characters in number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("csv: expected a number, got '" + field + "'");
  }
}

inline long csv_long(const std::string& field) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(field, &pos);
    SAAC_CHECK(pos == field.size(), "csv: trailing characters in integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("csv: expected an integer, got '" + field + "'");
  }
}

}  // namespace saac

#endif  // SAAC_CSV_HPP_
