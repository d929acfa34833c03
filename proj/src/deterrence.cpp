#include "greensec/deterrence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "greensec/csv.hpp"
#include "json.hpp"

namespace greensec {

void PatrolPanel::validate() const {
  const std::size_t n = size();
  if (n == 0) throw ArgumentError("panel: empty");
  if (period.size() != n || current_effort.size() != n || past_effort.size() != n ||
      neighbor_effort.size() != n || observed.size() != n)
    throw ArgumentError("panel: column lengths differ");
  std::set<std::pair<int, int>> keys;
  for (std::size_t i = 0; i < n; ++i) {
    if (observed[i] != 0 && observed[i] != 1)
      throw ArgumentError("panel: observed must be 0 or 1 (row " + std::to_string(i) + ")");
    if (!keys.insert({target[i], period[i]}).second)
      throw ArgumentError("panel: duplicate (target, period) = (" + std::to_string(target[i]) +
                          ", " + std::to_string(period[i]) + ")");
  }
}

PatrolPanel read_panel_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int ct = t.column("target", path);
  const int cp = t.column("period", path);
  const int cc = t.column("current_effort", path);
  const int ca = t.column("past_effort", path);
  const int cn = t.column("neighbor_effort", path);
  const int co = t.column("observed", path);
  PatrolPanel p;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    p.target.push_back(static_cast<int>(parse_field_long(t, r, ct, path)));
    p.period.push_back(static_cast<int>(parse_field_long(t, r, cp, path)));
    p.current_effort.push_back(parse_field_double(t, r, cc, path));
    p.past_effort.push_back(parse_field_double(t, r, ca, path));
    p.neighbor_effort.push_back(parse_field_double(t, r, cn, path));
    const long obs = parse_field_long(t, r, co, path);
    p.observed.push_back(static_cast<int>(obs));
  }
  p.validate();
  return p;
}

void write_panel_csv(const std::string& path, const PatrolPanel& panel) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    rows.push_back({std::to_string(panel.target[i]), std::to_string(panel.period[i]),
                    format_double(panel.current_effort[i]), format_double(panel.past_effort[i]),
                    format_double(panel.neighbor_effort[i]), std::to_string(panel.observed[i])});
  }
  write_csv(path, {"target", "period", "current_effort", "past_effort", "neighbor_effort", "observed"},
            rows);
}

namespace {

ColumnNormalization normalize_column(std::vector<double>& col) {
  ColumnNormalization info;
  const double n = static_cast<double>(col.size());
  double mean = 0.0;
  for (double v : col) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : col) var += sq(v - mean);
  var /= n;  // population variance
  info.mean = mean;
  if (var <= 0.0) {
    info.degenerate = true;
    info.std = 1.0;
    for (double& v : col) v = 0.0;
    return info;
  }
  info.std = std::sqrt(var);
  for (double& v : col) v = (v - mean) / info.std;
  return info;
}

}  // namespace

PanelNormalization normalize_efforts(PatrolPanel& panel) {
  if (panel.size() == 0) throw ArgumentError("normalize_efforts: empty panel");
  PanelNormalization n;
  n.current = normalize_column(panel.current_effort);
  n.past = normalize_column(panel.past_effort);
  n.neighbor = normalize_column(panel.neighbor_effort);
  return n;
}

namespace {

double log1pexp(double x) {  // log(1 + e^x), stable
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double log_likelihood(const Mat& x, const Eigen::VectorXi& y, const Vec& coef) {
  const Vec lp = x * coef;
  double ll = 0.0;
  for (int i = 0; i < lp.size(); ++i) ll += y[i] * lp[i] - log1pexp(lp[i]);
  return ll;
}

}  // namespace

DeterrenceCoefficients fit_logistic(const PatrolPanel& panel, const FitOptions& opts) {
  const int n = static_cast<int>(panel.size());
  if (n == 0) throw ArgumentError("fit_logistic: empty panel");
  int n_pos = 0;
  for (int o : panel.observed) n_pos += o;
  if (n_pos == 0 || n_pos == n)
    throw ArgumentError("fit_logistic: need at least one positive and one negative observation");

  // design: [intercept or per-target dummies | current | past | neighbor?]
  int n_intercepts = 1;
  std::vector<int> target_col;
  if (opts.per_target_intercepts) {
    std::vector<int> ids(panel.target);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    n_intercepts = static_cast<int>(ids.size());
    target_col.resize(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i)
      target_col[i] = static_cast<int>(
          std::lower_bound(ids.begin(), ids.end(), panel.target[i]) - ids.begin());
  }
  const int p = n_intercepts + 2 + (opts.include_neighbors ? 1 : 0);
  Mat x = Mat::Zero(n, p);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    x(i, opts.per_target_intercepts ? target_col[si] : 0) = 1.0;
    x(i, n_intercepts) = panel.current_effort[si];
    x(i, n_intercepts + 1) = panel.past_effort[si];
    if (opts.include_neighbors) x(i, n_intercepts + 2) = panel.neighbor_effort[si];
    y[i] = panel.observed[si];
  }

  {
    Eigen::FullPivLU<Mat> lu(x.transpose() * x);
    if (lu.rank() < p)
      throw NumericError("fit_logistic: singular design matrix (rank " +
                         std::to_string(lu.rank()) + " < " + std::to_string(p) + " columns)");
  }

  Vec coef = Vec::Zero(p);
  FitDiagnostics diag;
  double ll = log_likelihood(x, y, coef);
  diag.log_likelihood_trace.push_back(ll);
  Mat info_mat;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vec lp = x * coef;
    Vec prob(n), w(n);
    for (int i = 0; i < n; ++i) {
      prob[i] = logistic(lp[i]);
      w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-12);
    }
    Vec grad = x.transpose() * (y.cast<double>() - prob);
    diag.iterations = it;
    if (grad.norm() < opts.grad_tol) {
      diag.converged = true;
      info_mat = x.transpose() * w.asDiagonal() * x;
      break;
    }
    info_mat = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Mat> ldlt(info_mat);
    Vec step = ldlt.solve(grad);
    if (!step.allFinite())
      throw NumericError("fit_logistic: IRLS step is not finite (ill-conditioned design)");

    // step-halving keeps the log-likelihood non-decreasing
    double lam = 1.0;
    double ll_new = log_likelihood(x, y, coef + lam * step);
    while (ll_new < ll && lam > 1e-10) {
      lam *= 0.5;
      ll_new = log_likelihood(x, y, coef + lam * step);
    }
    coef += lam * step;
    ll = ll_new;
    diag.log_likelihood_trace.push_back(ll);
    if (coef.lpNorm<Eigen::Infinity>() > 1e2)
      throw NumericError(
          "fit_logistic: coefficients diverging (|coef| > 100); the data are likely perfectly "
          "separated");
  }
  diag.log_likelihood = ll;

  // Perfect separation leaves no finite MLE; IRLS either diverges (caught
  // above) or stalls with saturated probabilities.  In the latter case the
  // fitted direction itself separates the classes, which is the test here.
  {
    const Vec lp = x * coef;
    double min_pos = std::numeric_limits<double>::infinity();
    double max_neg = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (y[i] == 1) min_pos = std::min(min_pos, lp[i]);
      else max_neg = std::max(max_neg, lp[i]);
    }
    if (min_pos > max_neg)
      throw NumericError(
          "fit_logistic: the data are perfectly separated along the fitted direction; no finite "
          "maximum-likelihood estimate exists");
  }

  // observed-information Wald standard errors
  {
    Eigen::FullPivLU<Mat> lu(info_mat);
    if (lu.isInvertible()) {
      const Mat cov = lu.inverse();
      diag.std_errors.resize(static_cast<std::size_t>(p));
      for (int j = 0; j < p; ++j)
        diag.std_errors[static_cast<std::size_t>(j)] = std::sqrt(std::max(cov(j, j), 0.0));
      if (opts.compute_p_values) {
        diag.p_values.resize(static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) {
          const double se = diag.std_errors[static_cast<std::size_t>(j)];
          const double z = se > 0.0 ? std::abs(coef[j]) / se : 0.0;
          diag.p_values[static_cast<std::size_t>(j)] = std::erfc(z / std::sqrt(2.0));
        }
      }
    }
  }

  DeterrenceCoefficients out;
  out.diagnostics = std::move(diag);
  if (opts.per_target_intercepts) {
    out.per_target_intercepts.assign(coef.data(), coef.data() + n_intercepts);
    out.mean_attractiveness = coef.head(n_intercepts).mean();
  } else {
    out.mean_attractiveness = coef[0];
  }
  out.gamma = coef[n_intercepts];
  out.beta = coef[n_intercepts + 1];
  if (opts.include_neighbors) out.eta = coef[n_intercepts + 2];
  return out;
}

std::string coefficients_to_json(const DeterrenceCoefficients& c) {
  nlohmann::json j;
  j["mean_attractiveness"] = c.mean_attractiveness;
  j["gamma"] = c.gamma;
  j["beta"] = c.beta;
  if (c.eta) j["eta"] = *c.eta;
  if (!c.per_target_intercepts.empty()) j["per_target_intercepts"] = c.per_target_intercepts;
  j["diagnostics"] = {{"log_likelihood", c.diagnostics.log_likelihood},
                      {"iterations", c.diagnostics.iterations},
                      {"converged", c.diagnostics.converged}};
  if (!c.diagnostics.std_errors.empty()) j["diagnostics"]["std_errors"] = c.diagnostics.std_errors;
  if (!c.diagnostics.p_values.empty()) j["diagnostics"]["p_values"] = c.diagnostics.p_values;
  auto norm = [](const ColumnNormalization& cn) {
    return nlohmann::json{{"mean", cn.mean}, {"std", cn.std}, {"degenerate", cn.degenerate}};
  };
  j["normalization"] = {{"current", norm(c.normalization.current)},
                        {"past", norm(c.normalization.past)},
                        {"neighbor", norm(c.normalization.neighbor)}};
  return j.dump(2) + "\n";
}

PatrolPanel synth_panel(double intercept, double gamma, double beta, std::optional<double> eta,
                        int n_targets, int n_periods, const EffortProcess& process, Rng& rng) {
  if (n_targets <= 0 || n_periods <= 0)
    throw ArgumentError("synth_panel: n_targets and n_periods must be positive");

  // grid layout for neighbor sums
  int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_targets))));
  int grid_rows, grid_cols;
  if (side * side == n_targets) {
    grid_rows = grid_cols = side;
  } else {
    grid_rows = 1;
    grid_cols = n_targets;
  }
  const int half = (process.neighbor_window - 1) / 2;
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(n_targets));
  for (int i = 0; i < n_targets; ++i) {
    const int r0 = i / grid_cols, c0 = i % grid_cols;
    for (int dr = -half; dr <= half; ++dr)
      for (int dc = -half; dc <= half; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int r = r0 + dr, c = c0 + dc;
        if (r < 0 || r >= grid_rows || c < 0 || c >= grid_cols) continue;
        nbr[static_cast<std::size_t>(i)].push_back(r * grid_cols + c);
      }
  }

  // effort slices for periods 0..n_periods
  const int n_slices = n_periods + 1;
  Mat effort(n_slices, n_targets);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> cell(0, n_targets - 1);
  if (process.kind == EffortProcess::Kind::kIidExponential) {
    std::exponential_distribution<double> ex(1.0 / process.exp_mean);
    for (int t = 0; t < n_slices; ++t)
      for (int i = 0; i < n_targets; ++i) effort(t, i) = ex(rng);
  } else {
    std::exponential_distribution<double> base(1.0 / std::max(process.base_mean, 1e-12));
    std::vector<int> centers(static_cast<std::size_t>(process.n_hotspots));
    for (auto& c : centers) c = cell(rng);
    for (int t = 0; t < n_slices; ++t) {
      for (auto& c : centers)
        if (unif(rng) >= process.persist) c = cell(rng);
      for (int i = 0; i < n_targets; ++i) effort(t, i) = base(rng);
      for (int c : centers) {
        const int r0 = c / grid_cols, c0 = c % grid_cols;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int r = r0 + dr, cc = c0 + dc;
            if (r < 0 || r >= grid_rows || cc < 0 || cc >= grid_cols) continue;
            if (unif(rng) < process.membership) {
              const double mult = 1.0 + process.surge_jitter * (unif(rng) - 0.5);
              effort(t, r * grid_cols + cc) += process.surge_effort * mult;
            }
          }
      }
    }
  }

  PatrolPanel panel;
  const std::size_t n_rows = static_cast<std::size_t>(n_targets) * n_periods;
  panel.target.reserve(n_rows);
  for (int t = 1; t <= n_periods; ++t) {
    for (int i = 0; i < n_targets; ++i) {
      panel.target.push_back(i);
      panel.period.push_back(t);
      panel.current_effort.push_back(effort(t, i));
      panel.past_effort.push_back(effort(t - 1, i));
      double nb = 0.0;
      for (int j : nbr[static_cast<std::size_t>(i)]) nb += effort(t - 1, j);
      panel.neighbor_effort.push_back(nb);
      panel.observed.push_back(0);
    }
  }

  // probabilities use the standardized columns (the table coefficients are
  // on the normalized scale); the emitted efforts stay raw
  PatrolPanel std_panel = panel;
  normalize_efforts(std_panel);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    double lp = intercept + gamma * std_panel.current_effort[i] + beta * std_panel.past_effort[i];
    if (eta) lp += *eta * std_panel.neighbor_effort[i];
    panel.observed[i] = unif(rng) < logistic(lp) ? 1 : 0;
  }
  return panel;
}

}  // namespace greensec
