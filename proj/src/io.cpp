#include "pqlwcr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace pqlwcr {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool skippable(std::string_view line) {
  const std::string_view t = trim(line);
  return t.empty() || t.front() == '#';
}

bool parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(value);
}

template <class Int>
bool parse_integer(std::string_view text, Int& value) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    const std::string_view piece =
        trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                              : pos - start));
    out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

LabeledDataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    header = split_list(line);
    break;
  }
  if (header.empty()) throw ParseError(source, line_no, "missing header");
  if (header.size() < 3 || header[0] != "cluster" || header[1] != "y") {
    throw ParseError(source, line_no, "header must be cluster,y,<covariates...>");
  }
  const std::size_t p = header.size() - 2;
  std::vector<std::string> names(header.begin() + 2, header.end());

  std::unordered_map<std::string, std::size_t> index_of;
  std::vector<std::string> ids;
  std::vector<Vector> ys;
  std::vector<Vector> xs;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const std::vector<std::string> fields = split_list(line);
    if (fields.size() != header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError(source, line_no, "empty cluster id");
    auto [it, inserted] = index_of.try_emplace(fields[0], ids.size());
    if (inserted) {
      ids.push_back(fields[0]);
      ys.emplace_back();
      xs.emplace_back();
    }
    double value = 0.0;
    if (!parse_double(fields[1], value)) {
      throw ParseError(source, line_no, "response '" + fields[1] + "' is not a finite number");
    }
    ys[it->second].push_back(value);
    for (std::size_t d = 0; d < p; ++d) {
      if (!parse_double(fields[d + 2], value)) {
        throw ParseError(source, line_no,
                         "covariate " + names[d] + " value '" + fields[d + 2] +
                             "' is not a finite number");
      }
      xs[it->second].push_back(value);
    }
  }
  if (ids.empty()) throw ParseError(source, line_no, "no data rows");

  std::vector<std::size_t> sizes;
  Vector y;
  Vector x;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    sizes.push_back(ys[i].size());
    y.insert(y.end(), ys[i].begin(), ys[i].end());
    x.insert(x.end(), xs[i].begin(), xs[i].end());
  }
  return {Dataset(p, std::move(sizes), std::move(y), std::move(x)), std::move(names),
          std::move(ids)};
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(in, path.string());
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::string format_mean_sd(double mean, double sd, int decimals) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f(%.*f)", decimals, mean, decimals, sd);
  return buf;
}

void write_dataset_csv(std::ostream& out, const Dataset& data,
                       std::span<const std::string> names) {
  out << "cluster,y";
  for (std::size_t d = 0; d < data.dim(); ++d) {
    out << ',' << (names.empty() ? "x" + std::to_string(d + 1) : names[d]);
  }
  out << '\n';
  for (std::size_t i = 0; i < data.num_clusters(); ++i) {
    for (std::size_t j = 0; j < data.cluster_size(i); ++j) {
      const std::size_t obs = data.offset(i) + j;
      out << (i + 1) << ',' << format_number(data.response(obs));
      for (double v : data.row(obs)) out << ',' << format_number(v);
      out << '\n';
    }
  }
}

std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
    std::string key(trim(std::string_view(line).substr(0, eq)));
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value(trim(std::string_view(line).substr(eq + 1)));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (!values.emplace(key, value).second) {
      throw ParseError(source, line_no, "duplicate key '" + key + "'");
    }
  }
  return values;
}

namespace {

std::string join_indices(const IndexSet& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0) s += ' ';
    s += std::to_string(idx[k] + 1);
  }
  return s;
}

std::string join_numbers(const Vector& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) s += ' ';
    s += format_number(v[k]);
  }
  return s;
}

}  // namespace

void write_records_header(std::ostream& out) {
  out << "schema_version,example,n,p,rho,method,replicate,seed,k_effective,tp,fp,covered,"
         "sq_err,support,beta_hat\n";
}

void write_record(std::ostream& out, const RecordRow& row) {
  const ReplicateRecord& r = row.record;
  out << kSchemaVersion << ',' << row.example << ',' << row.n << ',' << row.p << ','
      << format_number(row.rho) << ',' << row.method << ',' << r.replicate << ',' << r.seed
      << ',' << r.k_effective << ',' << r.score.tp << ',' << r.score.fp << ','
      << (r.score.covered ? 1 : 0) << ',' << format_number(r.score.sq_err) << ','
      << join_indices(r.support) << ',' << join_numbers(r.beta_hat) << '\n';
}

std::vector<RecordRow> read_records(std::istream& in, const std::string& source) {
  std::vector<RecordRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("schema_version,", 0) != 0) {
        throw ParseError(source, line_no, "not a replicate record file");
      }
      continue;
    }
    const std::vector<std::string> f = split_list(line);
    if (f.size() != 15) throw ParseError(source, line_no, "expected 15 fields");
    int version = 0;
    RecordRow row;
    ReplicateRecord& r = row.record;
    int covered = 0;
    bool ok = parse_integer(f[0], version) && parse_integer(f[1], row.example) &&
              parse_integer(f[2], row.n) && parse_integer(f[3], row.p) &&
              parse_double(f[4], row.rho) && parse_integer(f[6], r.replicate) &&
              parse_integer(f[7], r.seed) && parse_integer(f[8], r.k_effective) &&
              parse_integer(f[9], r.score.tp) && parse_integer(f[10], r.score.fp) &&
              parse_integer(f[11], covered) && parse_double(f[12], r.score.sq_err);
    if (!ok) throw ParseError(source, line_no, "malformed record");
    if (version != kSchemaVersion) {
      throw ParseError(source, line_no, "unsupported schema version " + f[0]);
    }
    row.method = f[5];
    r.score.covered = covered != 0;
    if (!f[13].empty()) {
      for (const std::string& tok : split_list(f[13], ' ')) {
        std::size_t idx = 0;
        if (!parse_integer(tok, idx) || idx == 0) {
          throw ParseError(source, line_no, "bad support index");
        }
        r.support.push_back(idx - 1);
      }
    }
    if (!f[14].empty()) {
      for (const std::string& tok : split_list(f[14], ' ')) {
        double v = 0.0;
        if (!parse_double(tok, v)) throw ParseError(source, line_no, "bad coefficient");
        r.beta_hat.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pqlwcr
