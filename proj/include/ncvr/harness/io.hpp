#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ncvr/datagen.hpp"
#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/format.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/rng.hpp"

namespace ncvr {

enum class DataFormat { Libsvm, Csv };

inline DataFormat parse_data_format(const std::string& s) {
  if (s == "libsvm") return DataFormat::Libsvm;
  if (s == "csv") return DataFormat::Csv;
  throw InvalidParameter("unknown data format '" + s + "'");
}

struct LoadOptions {
  DataFormat format = DataFormat::Csv;
  /// csv only; defaults to the last column.
  std::optional<std::string> target_column;
  /// Classification maps labels to {0, 1}; regression keeps raw targets.
  Family family = Family::BinaryClassification;
  /// Keep only rows labelled `positive` (-> 1) or `negative` (-> 0).
  std::optional<std::pair<double, double>> class_filter;
  /// libsvm only; 0 infers p from the largest index seen.
  Index dim = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_number(std::string_view tok, std::size_t line, const char* what) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || tok.empty()) {
    throw ParseError(std::string("cannot parse ") + what + " '" + std::string(tok) + "'", line);
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Maps raw classification labels to {0, 1}, applying the class filter.
/// Returns the rows to keep.
inline std::vector<Index> map_binary_labels(std::vector<double>& labels, const LoadOptions& opts) {
  std::vector<Index> keep;
  if (opts.class_filter) {
    const auto [pos, neg] = *opts.class_filter;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == pos || labels[i] == neg) {
        labels[i] = labels[i] == pos ? 1.0 : 0.0;
        keep.push_back(static_cast<Index>(i));
      }
    }
    if (keep.empty()) throw InvalidData("class filter matched no rows");
    return keep;
  }
  const std::set<double> seen(labels.begin(), labels.end());
  const bool pm_one = std::all_of(seen.begin(), seen.end(), [](double v) { return v == 1.0 || v == -1.0; });
  const bool zero_one = std::all_of(seen.begin(), seen.end(), [](double v) { return v == 1.0 || v == 0.0; });
  if (!pm_one && !zero_one) {
    std::string list;
    for (const double v : seen) list += (list.empty() ? "" : ", ") + format_double(v);
    throw InvalidData("labels {" + list + "} are not two-class {-1,+1} or {0,1}; configure a class filter");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = labels[i] == 1.0 ? 1.0 : 0.0;
    keep.push_back(static_cast<Index>(i));
  }
  return keep;
}

inline DataSet assemble(const std::vector<std::vector<double>>& rows, std::vector<double> labels, Index p,
                        const LoadOptions& opts, DataMeta meta) {
  std::vector<Index> keep;
  if (opts.family == Family::BinaryClassification) {
    keep = map_binary_labels(labels, opts);
  } else {
    keep.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) keep[i] = static_cast<Index>(i);
  }
  RowMatrix x = RowMatrix::Zero(static_cast<Index>(keep.size()), p);
  Vector y(static_cast<Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto& src = rows[static_cast<std::size_t>(keep[r])];
    for (std::size_t j = 0; j < src.size(); ++j) x(static_cast<Index>(r), static_cast<Index>(j)) = src[j];
    y[static_cast<Index>(r)] = labels[static_cast<std::size_t>(keep[r])];
  }
  meta["rows_read"] = std::to_string(rows.size());
  return DataSet(std::move(x), std::move(y), std::move(meta));
}

}  // namespace detail

/// libsvm text: `label idx:val ...` with 1-based indices; absent entries are 0.
inline DataSet read_libsvm(std::istream& in, const LoadOptions& opts, DataMeta meta = {}) {
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  Index p = opts.dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::vector<double> row;
    bool first = true;
    Index last_idx = 0;
    std::size_t pos = 0;
    while (pos < sv.size()) {
      const auto end = std::min(sv.find_first_of(" \t", pos), sv.size());
      const std::string_view tok = sv.substr(pos, end - pos);
      pos = sv.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = sv.size();
      if (tok.empty()) continue;
      if (first) {
        labels.push_back(detail::parse_number(tok, lineno, "label"));
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError("expected idx:val, got '" + std::string(tok) + "'", lineno);
      const double idx_d = detail::parse_number(tok.substr(0, colon), lineno, "index");
      const auto idx = static_cast<Index>(idx_d);
      if (idx < 1 || static_cast<double>(idx) != idx_d) throw ParseError("feature index must be a positive integer", lineno);
      if (idx <= last_idx) throw ParseError("feature indices must be increasing", lineno);
      if (opts.dim > 0 && idx > opts.dim) throw ParseError("feature index exceeds configured dimension", lineno);
      last_idx = idx;
      if (static_cast<Index>(row.size()) < idx) row.resize(static_cast<std::size_t>(idx), 0.0);
      row[static_cast<std::size_t>(idx - 1)] = detail::parse_number(tok.substr(colon + 1), lineno, "value");
    }
    p = std::max(p, static_cast<Index>(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidData("libsvm input contains no samples");
  if (p < 1) throw InvalidData("libsvm input has no features");
  meta["format"] = "libsvm";
  return detail::assemble(rows, std::move(labels), p, opts, std::move(meta));
}

/// Numeric CSV with a header row; the target column becomes y.
inline DataSet read_csv(std::istream& in, const LoadOptions& opts, DataMeta meta = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    for (const auto f : detail::split(detail::trim(line), ',')) header.emplace_back(detail::trim(f));
  }
  if (header.size() < 2) throw ParseError("csv needs a header with at least two columns", lineno);
  std::size_t target = header.size() - 1;
  if (opts.target_column) {
    const auto it = std::find(header.begin(), header.end(), *opts.target_column);
    if (it == header.end()) throw InvalidData("target column '" + *opts.target_column + "' not in header");
    target = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    const auto fields = detail::split(sv, ',');
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()),
                       lineno);
    }
    std::vector<double> row;
    row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const double v = detail::parse_number(fields[j], lineno, "value");
      if (j == target) {
        labels.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidData("csv input contains no samples");
  meta["format"] = "csv";
  meta["target_column"] = header[target];
  return detail::assemble(rows, std::move(labels), static_cast<Index>(header.size() - 1), opts, std::move(meta));
}

inline DataSet load_dataset(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InvalidData("cannot open '" + path + "'");
  DataMeta meta{{"source", path}};
  return opts.format == DataFormat::Libsvm ? read_libsvm(in, opts, std::move(meta)) : read_csv(in, opts, std::move(meta));
}

/// Header x1..xp,y then one row per sample, round-trip precision.
inline void write_dataset_csv(std::ostream& out, const DataSet& data) {
  for (Index j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) out << format_double(data.features()(i, j)) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

/// Maps each column affinely onto [-1, 1]; constant columns become 0.
inline DataSet normalize_features(const DataSet& data) {
  RowMatrix x = data.features();
  std::string params;
  for (Index j = 0; j < x.cols(); ++j) {
    const double lo = x.col(j).minCoeff();
    const double hi = x.col(j).maxCoeff();
    if (hi > lo) {
      const double span = hi - lo;
      for (Index i = 0; i < x.rows(); ++i) x(i, j) = std::clamp(2.0 * (x(i, j) - lo) / span - 1.0, -1.0, 1.0);
    } else {
      x.col(j).setZero();
    }
    params += (j ? ";" : "") + format_double(lo) + ":" + format_double(hi);
  }
  DataMeta meta = data.meta();
  meta["normalized"] = "[-1,1]";
  meta["normalization_min_max"] = params;
  return DataSet(std::move(x), data.targets(), std::move(meta));
}

/// y_i += eps_i with eps_i ~ (1 - delta) N(0, 1) + delta N(0, sigma^2).
inline DataSet corrupt_targets(const DataSet& data, const NoiseSpec& noise, std::uint64_t seed) {
  Rng rng{derive_seed(seed, 0xc7)};
  Vector y = data.targets() + sample_mixture_noise(data.size(), noise, rng);
  DataMeta meta = data.meta();
  meta["corruption_delta"] = format_double(noise.delta);
  meta["corruption_sigma"] = format_double(noise.sigma);
  meta["corruption_seed"] = std::to_string(seed);
  return DataSet(data.features(), std::move(y), std::move(meta));
}

}  // namespace ncvr
