#pragma once

#include <set>
#include <string>
#include <vector>

#include "bdml/error.hpp"
#include "bdml/io/csv.hpp"
#include "bdml/score.hpp"

namespace bdml::io {

struct BoroughRecord {
  std::string name;
  double di = 0.0;
  double treatment = 0.0;
  std::vector<double> confounders;
};

/// Borough-level analysis table: outcome `di`, treatment `treatment` (a
/// percentage) and the remaining numeric columns as confounders, in file
/// order. A `borough` or `name` column, if present, labels the rows.
struct BoroughTable {
  std::vector<std::string> confounder_names;
  std::vector<BoroughRecord> records;

  ObservationSet observations() const {
    const auto n = static_cast<Eigen::Index>(records.size());
    const auto p = static_cast<Eigen::Index>(confounder_names.size());
    Vector y(n), d(n);
    Matrix x(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = records[static_cast<std::size_t>(i)];
      y[i] = r.di;
      d[i] = r.treatment;
      for (Eigen::Index j = 0; j < p; ++j) x(i, j) = r.confounders[static_cast<std::size_t>(j)];
    }
    return ObservationSet(std::move(y), std::move(d), std::move(x));
  }
};

inline BoroughTable parse_borough_table(const CsvTable& csv, const std::string& source) {
  const auto di_col = csv.column("di");
  const auto t_col = csv.column("treatment");
  if (di_col < 0) throw DataError(source + ": header has no 'di' column");
  if (t_col < 0) throw DataError(source + ": header has no 'treatment' column");
  auto name_col = csv.column("borough");
  if (name_col < 0) name_col = csv.column("name");

  BoroughTable t;
  std::vector<std::size_t> conf_cols;
  std::set<std::string> seen_cols;
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (!seen_cols.insert(csv.header[j]).second) {
      throw DataError(source + ": duplicate column '" + csv.header[j] + "'");
    }
    const auto sj = static_cast<std::ptrdiff_t>(j);
    if (sj == di_col || sj == t_col || sj == name_col) continue;
    conf_cols.push_back(j);
    t.confounder_names.push_back(csv.header[j]);
  }
  if (conf_cols.empty()) throw DataError(source + ": no confounder columns");

  std::set<std::string> names;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    // Header is line 1, so data row r sits on line r + 2.
    auto where = [&](std::size_t col) {
      return source + ": row " + std::to_string(r + 2) + ", column '" + csv.header[col] + "'";
    };
    BoroughRecord rec;
    rec.name = name_col >= 0 ? row[static_cast<std::size_t>(name_col)] : "row" + std::to_string(r + 1);
    if (rec.name.empty()) throw DataError(where(static_cast<std::size_t>(name_col)) + ": empty name");
    if (!names.insert(rec.name).second) {
      throw DataError(source + ": row " + std::to_string(r + 2) + ": duplicate borough '" +
                      rec.name + "'");
    }
    const auto dc = static_cast<std::size_t>(di_col);
    const auto tc = static_cast<std::size_t>(t_col);
    rec.di = parse_number(row[dc], where(dc));
    if (!(rec.di > 0.0)) throw DataError(where(dc) + ": di must be positive");
    rec.treatment = parse_number(row[tc], where(tc));
    if (rec.treatment < 0.0 || rec.treatment > 100.0) {
      throw DataError(where(tc) + ": treatment must be a percentage in [0, 100]");
    }
    for (auto c : conf_cols) rec.confounders.push_back(parse_number(row[c], where(c)));
    t.records.push_back(std::move(rec));
  }
  if (t.records.size() < ObservationSet::kMinUnits) {
    throw DataError(source + ": need at least " + std::to_string(ObservationSet::kMinUnits) +
                    " boroughs, found " + std::to_string(t.records.size()));
  }
  return t;
}

inline BoroughTable load_borough_csv(const std::string& path) {
  return parse_borough_table(read_csv(path), path);
}

}  // namespace bdml::io
