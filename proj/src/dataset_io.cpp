#include "psqkd/dataset_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace psqkd::dataset_io {

std::string format_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

double round_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

void write_sifted_csv(const std::string& path,
                      const std::vector<simulator::SiftedRecord>& records,
                      const MetadataList& metadata) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_sifted_csv: cannot open " + path);
  }
  for (const auto& [key, value] : metadata) {
    out << "# " << key << " = " << value << "\n";
  }
  out << "index,quadrature,s_a,m_b,bit_a,bit_b\n";
  for (const auto& r : records) {
    out << r.index << ',' << r.quadrature << ',' << format_sig(r.s_a) << ','
        << format_sig(r.m_b) << ',' << r.bit_a << ',' << r.bit_b << "\n";
  }
  if (!out) {
    throw std::runtime_error("write_sifted_csv: write failed for " + path);
  }
}

SiftedDataset read_sifted_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_sifted_csv: cannot open " + path);
  }
  SiftedDataset ds;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        auto trim = [](std::string s) {
          const auto b = s.find_first_not_of(" \t#");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string()
                                        : s.substr(b, e - b + 1);
        };
        ds.metadata.emplace_back(trim(line.substr(0, eq)),
                                 trim(line.substr(eq + 1)));
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    simulator::SiftedRecord r{};
    std::getline(ss, field, ',');
    r.index = std::strtoull(field.c_str(), nullptr, 10);
    std::getline(ss, field, ',');
    if (field != "X" && field != "P") {
      throw std::runtime_error("read_sifted_csv: bad quadrature '" + field +
                               "' in " + path);
    }
    r.quadrature = field[0];
    std::getline(ss, field, ',');
    r.s_a = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    r.m_b = std::strtod(field.c_str(), nullptr);
    std::getline(ss, field, ',');
    r.bit_a = std::atoi(field.c_str());
    std::getline(ss, field, ',');
    r.bit_b = std::atoi(field.c_str());
    ds.records.push_back(r);
  }
  return ds;
}

void write_table_csv(std::ostream& out, const Table& table) {
  for (const auto& [key, value] : table.metadata) {
    out << "# " << key << " = " << value << "\n";
  }
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << table.columns[c]
        << (c + 1 < table.columns.size() ? "," : "\n");
  }
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << format_sig(row[c], 17) << (c + 1 < row.size() ? "," : "\n");
    }
  }
}

void write_table_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_table_csv: cannot open " + path);
  }
  write_table_csv(out, table);
  if (!out) {
    throw std::runtime_error("write_table_csv: write failed for " + path);
  }
}

json table_to_json(const Table& table) {
  json j;
  json meta = json::object();
  for (const auto& [key, value] : table.metadata) meta[key] = value;
  j["metadata"] = meta;
  j["columns"] = table.columns;
  json rows = json::array();
  for (const auto& row : table.rows) rows.push_back(row);
  j["rows"] = rows;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_json_file: cannot open " + path);
  }
  out << j.dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("write_json_file: write failed for " + path);
  }
}

}  // namespace psqkd::dataset_io
