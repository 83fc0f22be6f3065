#pragma once

#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "psqkd/simulator.hpp"

namespace psqkd::dataset_io {

using json = nlohmann::ordered_json;
using MetadataList = std::vector<std::pair<std::string, std::string>>;

// Format with `digits` significant decimals (%.{digits}g).
std::string format_sig(double x, int digits = 12);

// Round through the decimal text form, so the in-memory value is exactly
// what the CSV will store and re-reading is an identity.
double round_sig(double x, int digits = 12);

// Sifted-dataset CSV: '#'-prefixed "key = value" metadata block, then the
// header `index,quadrature,s_a,m_b,bit_a,bit_b`, one record per row with
// 12-significant-digit values.
void write_sifted_csv(const std::string& path,
                      const std::vector<simulator::SiftedRecord>& records,
                      const MetadataList& metadata);

struct SiftedDataset {
  std::vector<simulator::SiftedRecord> records;
  MetadataList metadata;
};
SiftedDataset read_sifted_csv(const std::string& path);

// Generic numeric result table, the common currency of the CLI commands.
struct Table {
  MetadataList metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_table_csv(std::ostream& out, const Table& table);
void write_table_csv(const std::string& path, const Table& table);
json table_to_json(const Table& table);
void write_json_file(const std::string& path, const json& j);

}  // namespace psqkd::dataset_io
