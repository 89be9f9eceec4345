#include "cate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "cate/error.hpp"
#include "cate/rng.hpp"

namespace cate {

namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_field(const std::string& raw, double* out) {
  std::string f = trim(raw);
  if (f.empty()) return false;  // missing
  size_t pos = 0;
  double v;
  try {
    v = std::stod(f, &pos);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Data, "non-numeric field '" + f + "'");
  }
  if (pos != f.size())
    throw Error(ErrorKind::Data, "non-numeric field '" + f + "'");
  *out = v;
  return true;
}

}  // namespace

long CohortDataset::n_trial() const {
  long c = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] == 1.0) ++c;
  return c;
}

long CohortDataset::n_trial_arm(int arm) const {
  long c = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] == 1.0 && a[i] == static_cast<double>(arm)) ++c;
  return c;
}

int CohortDataset::column_index(const std::string& name) const {
  for (size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == name) return static_cast<int>(j);
  return -1;
}

Eigen::VectorXd CohortDataset::column(const std::string& name) const {
  int j = column_index(name);
  if (j < 0) throw Error(ErrorKind::Config, "unknown column '" + name + "'");
  return covariates.col(j);
}

std::vector<Eigen::Index> CohortDataset::trial_rows() const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] == 1.0) rows.push_back(i);
  return rows;
}

void CohortDataset::validate() const {
  const Eigen::Index n = s.size();
  if (n == 0) throw Error(ErrorKind::Data, "empty dataset");
  if (a.size() != n || y.size() != n || covariates.rows() != n)
    throw Error(ErrorKind::Data, "inconsistent dataset dimensions");
  std::unordered_set<std::string> seen;
  for (const auto& c : columns)
    if (!seen.insert(c).second)
      throw Error(ErrorKind::Data, "duplicated column name '" + c + "'");
  for (const auto& m : effect_modifier_columns)
    if (column_index(m) < 0)
      throw Error(ErrorKind::Data, "effect modifier '" + m + "' is not a covariate column");
  long n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s[i] != 0.0 && s[i] != 1.0)
      throw Error(ErrorKind::Data, "trial indicator outside {0,1}");
    if (s[i] == 1.0) {
      ++n1;
      if (std::isnan(a[i]) || std::isnan(y[i]))
        throw Error(ErrorKind::Data, "treatment or outcome absent on a trial row");
      if (a[i] != 0.0 && a[i] != 1.0)
        throw Error(ErrorKind::Data, "treatment outside {0,1}");
    } else {
      if (!std::isnan(a[i]))
        throw Error(ErrorKind::Data, "treatment on non-trial row");
      if (!std::isnan(y[i]))
        throw Error(ErrorKind::Data, "outcome on non-trial row");
    }
    if (!covariates.row(i).allFinite())
      throw Error(ErrorKind::Data, "non-finite covariate value");
  }
  if (n1 == 0) throw Error(ErrorKind::Data, "no trial rows (all s=0): estimation impossible");
}

CohortDataset load_cohort(std::istream& in, const Schema& schema) {
  std::string header_line;
  if (!std::getline(in, header_line))
    throw Error(ErrorKind::Data, "empty input: missing header row");
  std::vector<std::string> header = split_csv_line(header_line);
  for (auto& h : header) h = trim(h);

  auto col_of = [&](const std::string& name) {
    for (size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    throw Error(ErrorKind::Data, "missing mandatory column '" + name + "'");
  };

  int si = col_of(schema.s_col);
  int ai = col_of(schema.a_col);
  int yi = col_of(schema.y_col);
  std::vector<int> cov_idx;
  for (const auto& c : schema.covariate_cols) cov_idx.push_back(col_of(c));
  for (const auto& m : schema.modifier_cols) {
    if (std::find(schema.covariate_cols.begin(), schema.covariate_cols.end(), m) ==
        schema.covariate_cols.end())
      throw Error(ErrorKind::Config, "effect modifier '" + m + "' not listed among covariates");
  }

  std::vector<double> s_v, a_v, y_v;
  std::vector<double> cov_v;
  long dropped = 0;
  std::string line;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw Error(ErrorKind::Data, "row " + std::to_string(lineno) +
                                       ": expected " + std::to_string(header.size()) +
                                       " fields, got " + std::to_string(fields.size()));
    double sv;
    if (!parse_field(fields[si], &sv))
      throw Error(ErrorKind::Data, "row " + std::to_string(lineno) + ": missing trial indicator");
    if (sv != 0.0 && sv != 1.0)
      throw Error(ErrorKind::Data, "row " + std::to_string(lineno) + ": trial indicator outside {0,1}");

    double av, yv;
    bool has_a = parse_field(fields[ai], &av);
    bool has_y = parse_field(fields[yi], &yv);
    if (sv == 0.0) {
      if (has_a) throw Error(ErrorKind::Data, "row " + std::to_string(lineno) + ": treatment on non-trial row");
      if (has_y) throw Error(ErrorKind::Data, "row " + std::to_string(lineno) + ": outcome on non-trial row");
    }

    std::vector<double> row(cov_idx.size());
    bool missing = false;
    for (size_t j = 0; j < cov_idx.size(); ++j)
      if (!parse_field(fields[cov_idx[j]], &row[j])) missing = true;
    if (sv == 1.0 && (!has_a || !has_y)) missing = true;  // complete-case on trial rows
    if (missing) {
      ++dropped;
      continue;
    }
    if (sv == 1.0 && av != 0.0 && av != 1.0)
      throw Error(ErrorKind::Data, "row " + std::to_string(lineno) + ": treatment outside {0,1}");

    s_v.push_back(sv);
    a_v.push_back(sv == 1.0 ? av : kAbsent);
    y_v.push_back(sv == 1.0 ? yv : kAbsent);
    cov_v.insert(cov_v.end(), row.begin(), row.end());
  }

  const Eigen::Index n = static_cast<Eigen::Index>(s_v.size());
  const Eigen::Index d = static_cast<Eigen::Index>(cov_idx.size());
  if (n == 0) throw Error(ErrorKind::Data, "no usable rows after complete-case filtering");

  CohortDataset ds;
  ds.columns = schema.covariate_cols;
  ds.effect_modifier_columns = schema.modifier_cols;
  ds.dropped_missing = dropped;
  ds.covariates.resize(n, d);
  ds.s.resize(n);
  ds.a.resize(n);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.s[i] = s_v[i];
    ds.a[i] = a_v[i];
    ds.y[i] = y_v[i];
    for (Eigen::Index j = 0; j < d; ++j) ds.covariates(i, j) = cov_v[i * d + j];
  }
  long n1 = ds.n_trial();
  if (n1 == 0) throw Error(ErrorKind::Data, "no trial rows (all s=0): estimation impossible");
  if (n1 == n) throw Error(ErrorKind::Data, "no non-trial rows (all s=1): target population unrepresented");

  ds.outcome_binary = true;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ds.s[i] == 1.0 && ds.y[i] != 0.0 && ds.y[i] != 1.0) ds.outcome_binary = false;

  ds.validate();
  return ds;
}

CohortDataset load_cohort_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return load_cohort(in, schema);
}

void write_cohort(std::ostream& out, const CohortDataset& ds) {
  out << "s,a,y";
  for (const auto& c : ds.columns) out << ',' << c;
  out << '\n';
  char buf[64];
  auto put = [&](double v) {
    snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    put(ds.s[i]);
    out << ',';
    if (!std::isnan(ds.a[i])) put(ds.a[i]);
    out << ',';
    if (!std::isnan(ds.y[i])) put(ds.y[i]);
    for (Eigen::Index j = 0; j < ds.covariates.cols(); ++j) {
      out << ',';
      put(ds.covariates(i, j));
    }
    out << '\n';
  }
}

CohortDataset subset(const CohortDataset& ds, const std::vector<Eigen::Index>& rows) {
  CohortDataset out;
  out.columns = ds.columns;
  out.effect_modifier_columns = ds.effect_modifier_columns;
  out.outcome_binary = ds.outcome_binary;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  out.covariates.resize(n, ds.covariates.cols());
  out.s.resize(n);
  out.a.resize(n);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.covariates.row(i) = ds.covariates.row(rows[i]);
    out.s[i] = ds.s[rows[i]];
    out.a[i] = ds.a[rows[i]];
    out.y[i] = ds.y[rows[i]];
  }
  return out;
}

FoldAssignment assign_folds(const CohortDataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::Config, "fold count must be >= 2");
  ds.validate();
  long arm0 = ds.n_trial_arm(0), arm1 = ds.n_trial_arm(1);
  if (k > arm0 || k > arm1)
    throw Error(ErrorKind::Data, "fold count exceeds trial rows in an arm (" +
                                     std::to_string(arm0) + " control, " +
                                     std::to_string(arm1) + " treated)");

  // cells: s=0; s=1,a=0; s=1,a=1
  std::vector<std::vector<Eigen::Index>> cells(3);
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    if (ds.s[i] == 0.0)
      cells[0].push_back(i);
    else
      cells[ds.a[i] == 0.0 ? 1 : 2].push_back(i);
  }

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_id.assign(ds.n_rows(), 0);
  RngStream rng(seed, /*stream_id=*/0x0F01D5);
  for (auto& cell : cells) {
    for (size_t i = cell.size(); i > 1; --i)
      std::swap(cell[i - 1], cell[rng.below(i)]);
    for (size_t i = 0; i < cell.size(); ++i)
      fa.fold_id[cell[i]] = static_cast<int>(i % k) + 1;
  }
  return fa;
}

}  // namespace cate
