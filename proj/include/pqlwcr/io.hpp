#pragma once

// File formats: the clustered-data CSV (`cluster,y,<covariate names...>`),
// the flat key=value simulation config, and per-replicate record files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pqlwcr/bench.hpp"
#include "pqlwcr/model.hpp"

namespace pqlwcr {

inline constexpr int kSchemaVersion = 1;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LabeledDataset {
  Dataset data;
  std::vector<std::string> covariate_names;
  std::vector<std::string> cluster_ids;  // order of first appearance
};

// Rows may appear in any order; observations are grouped by cluster id in
// order of first appearance. Blank lines and lines starting with '#' are skipped.
LabeledDataset read_dataset_csv(std::istream& in, const std::string& source = "<input>");
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

// Cluster ids are written as 1..n; names default to x1..xp.
void write_dataset_csv(std::ostream& out, const Dataset& data,
                       std::span<const std::string> names = {});

// Shortest decimal string that round-trips.
std::string format_number(double value);

// "a.bc(d.ef)" with the given number of decimals.
std::string format_mean_sd(double mean, double sd, int decimals);

// Ordered key=value pairs; duplicate keys are errors. '-' in keys reads as '_'.
std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& source);

std::vector<std::string> split_list(std::string_view text, char sep = ',');

struct RecordRow {
  int example = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  double rho = 0.0;
  std::string method;
  ReplicateRecord record;
};

void write_records_header(std::ostream& out);
void write_record(std::ostream& out, const RecordRow& row);
std::vector<RecordRow> read_records(std::istream& in, const std::string& source = "<records>");

}  // namespace pqlwcr
