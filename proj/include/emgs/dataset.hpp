#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emgs {

enum class ColumnKind { Continuous, Ordinal };

// Observation matrix with a missingness mask.  The mask is authoritative:
// the value stored under a masked cell is never read as data.
struct Dataset {
  Eigen::MatrixXd values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
  std::vector<ColumnKind> kinds;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
  bool has_missing() const { return missing.any(); }

  static Dataset from_matrix(const Eigen::MatrixXd& x) {
    Dataset d;
    d.values = x;
    d.missing = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
        x.rows(), x.cols(), false);
    d.kinds.assign(static_cast<std::size_t>(x.cols()), ColumnKind::Continuous);
    d.column_names.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      d.column_names[static_cast<std::size_t>(j)] = "V" + std::to_string(j + 1);
    return d;
  }

  Dataset rows(const std::vector<Eigen::Index>& idx) const {
    Dataset out;
    out.values.resize(static_cast<Eigen::Index>(idx.size()), p());
    out.missing.resize(static_cast<Eigen::Index>(idx.size()), p());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.values.row(static_cast<Eigen::Index>(i)) = values.row(idx[i]);
      out.missing.row(static_cast<Eigen::Index>(i)) = missing.row(idx[i]);
    }
    out.kinds = kinds;
    out.column_names = column_names;
    return out;
  }
};

// Mean-centers the observed cells of continuous columns; masked cells and
// ordinal columns are untouched.  Idempotent.
inline Dataset center_columns(const Dataset& data) {
  Dataset out = data;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    if (data.kinds[static_cast<std::size_t>(j)] != ColumnKind::Continuous)
      continue;
    double sum = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (!data.missing(i, j)) {
        sum += data.values(i, j);
        ++cnt;
      }
    }
    if (cnt == 0)
      throw std::invalid_argument("center_columns: column " +
                                  std::to_string(j + 1) +
                                  " has no observed cells");
    double mean = sum / static_cast<double>(cnt);
    for (Eigen::Index i = 0; i < data.n(); ++i)
      if (!out.missing(i, j)) out.values(i, j) -= mean;
  }
  return out;
}

// Optional unit-variance scaling of continuous columns (off by default in
// the pipelines; exposed behind a CLI flag).
inline Dataset scale_columns(const Dataset& data) {
  Dataset out = data;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    if (data.kinds[static_cast<std::size_t>(j)] != ColumnKind::Continuous)
      continue;
    double ss = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (!data.missing(i, j)) {
        ss += data.values(i, j) * data.values(i, j);
        ++cnt;
      }
    }
    if (cnt < 2 || ss <= 0.0) continue;
    double sd = std::sqrt(ss / static_cast<double>(cnt - 1));
    for (Eigen::Index i = 0; i < data.n(); ++i)
      if (!out.missing(i, j)) out.values(i, j) /= sd;
  }
  return out;
}

// CSV: first row is a header; an empty cell or the literal "NA" is missing.
// Columns that are integer-valued with <= 50 distinct observed values are
// inferred ordinal unless overridden.
inline Dataset read_csv(const std::string& path,
                        const std::optional<std::vector<ColumnKind>>&
                            kind_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
  };
  Dataset d;
  d.column_names = split(line);
  const std::size_t p = d.column_names.size();
  std::vector<std::vector<double>> vals;
  std::vector<std::vector<bool>> miss;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != p)
      throw std::runtime_error("malformed CSV row in " + path);
    std::vector<double> row(p, 0.0);
    std::vector<bool> mrow(p, false);
    for (std::size_t j = 0; j < p; ++j) {
      if (cells[j].empty() || cells[j] == "NA") {
        mrow[j] = true;
      } else {
        row[j] = std::stod(cells[j]);
      }
    }
    vals.push_back(std::move(row));
    miss.push_back(std::move(mrow));
  }
  const std::size_t n = vals.size();
  d.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.missing.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          vals[i][j];
      d.missing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          miss[i][j];
    }
  if (kind_override) {
    if (kind_override->size() != p)
      throw std::runtime_error("kind override length mismatch");
    d.kinds = *kind_override;
  } else {
    d.kinds.resize(p, ColumnKind::Continuous);
    for (std::size_t j = 0; j < p; ++j) {
      std::set<double> distinct;
      bool integral = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (miss[i][j]) continue;
        double v = vals[i][j];
        if (v != std::floor(v)) {
          integral = false;
          break;
        }
        distinct.insert(v);
      }
      if (integral && !distinct.empty() && distinct.size() <= 50)
        d.kinds[j] = ColumnKind::Ordinal;
    }
  }
  return d;
}

inline void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t j = 0; j < data.column_names.size(); ++j)
    out << (j ? "," : "") << data.column_names[j];
  out << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      if (j) out << ",";
      if (data.missing(i, j))
        out << "NA";
      else
        out << data.values(i, j);
    }
    out << "\n";
  }
}

}  // namespace emgs
