#include <algorithm>
#include <cmath>

#include "twinpipe/model.hpp"

namespace twinpipe {

namespace detail {

// Rows of `table` where target and every feature are present; column pointers
// ordered as spec.features.
struct DesignData {
  std::vector<std::size_t> rows;
  std::vector<const std::vector<double>*> feature_cols;
  const std::vector<double>* target = nullptr;
  std::size_t excluded = 0;
};

DesignData collect_complete_rows(const TimeTable& table, const ModelSpec& spec) {
  DesignData d;
  for (const auto& f : spec.features) {
    int idx = table.column_index(f);
    if (idx < 0) raise(Errc::missing_feature_column, "feature column '" + f + "' not in table");
    d.feature_cols.push_back(&table.columns()[static_cast<std::size_t>(idx)].values);
  }
  int t = table.column_index(spec.target);
  if (t < 0) raise(Errc::missing_target_column, "target column '" + spec.target + "' not in table");
  d.target = &table.columns()[static_cast<std::size_t>(t)].values;

  for (std::size_t r = 0; r < table.row_count(); ++r) {
    bool complete = !is_missing((*d.target)[r]);
    for (const auto* col : d.feature_cols)
      if (is_missing((*col)[r])) complete = false;
    if (complete)
      d.rows.push_back(r);
    else
      d.excluded++;
  }
  return d;
}

void fill_metadata(ModelArtifact& art, const TimeTable& table, const DesignData& d) {
  art.n_train = d.rows.size();
  art.rows_excluded = d.excluded;
  for (std::size_t j = 0; j < art.spec.features.size(); ++j) {
    const std::string& name = art.spec.features[j];
    const auto& col = table.column(name);
    if (!col.unit.empty()) art.feature_units[name] = col.unit;
    double lo = 0, hi = 0;
    bool first = true;
    for (std::size_t r : d.rows) {
      double v = (*d.feature_cols[j])[r];
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!first) art.feature_ranges[name] = {lo, hi};
  }
}

}  // namespace detail

namespace {

// Householder QR least squares on an n x m column-major matrix. Returns false
// when R is numerically rank-deficient.
bool qr_solve(std::vector<std::vector<double>>& a, std::vector<double>& y,
              std::vector<double>& beta) {
  const std::size_t n = y.size();
  const std::size_t m = a.size();
  std::vector<double> diag(m, 0.0);

  for (std::size_t k = 0; k < m; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += a[k][i] * a[k][i];
    norm = std::sqrt(norm);
    if (norm == 0.0) return false;
    if (a[k][k] > 0) norm = -norm;
    for (std::size_t i = k; i < n; ++i) a[k][i] /= norm;
    a[k][k] -= 1.0;
    for (std::size_t j = k + 1; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += a[k][i] * a[j][i];
      s /= a[k][k];
      for (std::size_t i = k; i < n; ++i) a[j][i] += s * a[k][i];
    }
    double s = 0.0;
    for (std::size_t i = k; i < n; ++i) s += a[k][i] * y[i];
    s /= a[k][k];
    for (std::size_t i = k; i < n; ++i) y[i] += s * a[k][i];
    diag[k] = norm;
  }

  double max_diag = 0.0;
  for (double dkk : diag) max_diag = std::max(max_diag, std::fabs(dkk));
  for (double dkk : diag)
    if (std::fabs(dkk) <= 1e-12 * max_diag) return false;

  beta.assign(m, 0.0);
  for (std::size_t k = m; k-- > 0;) {
    double s = y[k];
    for (std::size_t j = k + 1; j < m; ++j) s -= a[j][k] * beta[j];
    beta[k] = s / diag[k];
  }
  return true;
}

// Normal equations with ridge on the diagonal, solved by Cholesky.
bool ridge_solve(const std::vector<std::vector<double>>& cols, const std::vector<double>& y,
                 double epsilon, std::vector<double>& beta) {
  const std::size_t m = cols.size();
  const std::size_t n = y.size();
  std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
  std::vector<double> b(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += cols[i][r] * cols[j][r];
      g[i][j] = g[j][i] = s;
    }
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += cols[i][r] * y[r];
    b[i] = s;
    g[i][i] += epsilon;
  }
  // Cholesky G = L L^T
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = g[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= g[i][k] * g[j][k];
      if (i == j) {
        if (s <= 0.0) return false;
        g[i][i] = std::sqrt(s);
      } else {
        g[i][j] = s / g[j][j];
      }
    }
  }
  std::vector<double> z(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= g[i][k] * z[k];
    z[i] = s / g[i][i];
  }
  beta.assign(m, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = i + 1; k < m; ++k) s -= g[k][i] * beta[k];
    beta[i] = s / g[i][i];
  }
  return true;
}

}  // namespace

ModelArtifact fit_linear(const TimeTable& train, const ModelSpec& spec) {
  if (spec.features.empty()) raise(Errc::invalid_argument, "model needs at least one feature");
  detail::DesignData d = detail::collect_complete_rows(train, spec);
  const std::size_t p = spec.features.size();
  if (d.rows.empty()) raise(Errc::all_rows_incomplete, "no row has all features and the target");
  if (d.rows.size() < p + 1)
    raise(Errc::insufficient_rows, "need >= " + std::to_string(p + 1) + " complete rows, have " +
                                       std::to_string(d.rows.size()));

  const std::size_t n = d.rows.size();
  std::vector<std::vector<double>> cols(p + 1, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cols[0][i] = 1.0;
    for (std::size_t j = 0; j < p; ++j) cols[j + 1][i] = (*d.feature_cols[j])[d.rows[i]];
    y[i] = (*d.target)[d.rows[i]];
  }

  ModelArtifact art;
  art.spec = spec;

  std::vector<double> beta;
  std::vector<std::vector<double>> qr_cols = cols;
  std::vector<double> qr_y = y;
  if (qr_solve(qr_cols, qr_y, beta)) {
    art.ridge_applied = false;
  } else {
    if (!ridge_solve(cols, y, spec.linear.ridge_epsilon, beta))
      raise(Errc::degenerate_data, "normal equations not positive definite even with ridge");
    art.ridge_applied = true;
  }

  art.intercept = beta[0];
  art.coefficients.assign(beta.begin() + 1, beta.end());
  detail::fill_metadata(art, train, d);
  return art;
}

}  // namespace twinpipe
