#include "greensec/matrix_game.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <sstream>

#include "greensec/csv.hpp"

namespace greensec {

void PayoffMatrix::validate() const {
  if (entries.rows() < 1 || entries.cols() < 1)
    throw ArgumentError("payoff matrix: must have at least one row and column");
  if (!entries.allFinite()) throw ArgumentError("payoff matrix: entries must be finite");
}

std::string PayoffMatrix::dump() const {
  std::ostringstream out;
  out << rows() << "x" << cols() << " payoff matrix\n";
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) out << (j ? "," : "") << format_double(entries(i, j));
    out << "\n";
  }
  return out.str();
}

namespace {

// Tableau simplex for: max c'x  s.t.  Ax <= b, x >= 0, with b >= 0.
// Returns the optimum; fills primal x and the duals under the slack columns.
double simplex_max(const Mat& a, const Vec& b, const Vec& c, Vec& x, Vec& duals,
                   const std::string& context) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Mat t = Mat::Zero(m + 1, n + m + 1);
  t.block(0, 0, m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(n + m).head(m) = b;
  t.row(m).head(n) = -c.transpose();

  std::vector<int> basis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  const double eps = 1e-11;
  const long max_iter = 2000L * (m + n) + 2000;
  long iter = 0;
  while (true) {
    if (++iter > max_iter)
      throw NumericError("simplex: iteration limit reached\n" + context);
    const bool bland = iter > 50L * (m + n);  // anti-cycling fallback

    int enter = -1;
    double best = -eps;
    for (int j = 0; j < n + m; ++j) {
      const double rc = t(m, j);
      if (rc < -eps) {
        if (bland) {
          enter = j;
          break;
        }
        if (rc < best) {
          best = rc;
          enter = j;
        }
      }
    }
    if (enter < 0) break;  // optimal

    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t(i, enter) > eps) {
        const double ratio = t(i, n + m) / t(i, enter);
        if (leave < 0 || ratio < best_ratio - eps ||
            (ratio < best_ratio + eps && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw NumericError("simplex: unbounded program\n" + context);

    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  x = Vec::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n) x[basis[static_cast<std::size_t>(i)]] = t(i, n + m);
  duals = t.row(m).segment(n, m).transpose();
  return t(m, n + m);
}

MixedStrategy to_mixed(Vec v) {
  for (int i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
  const double s = v.sum();
  if (s <= 0.0) throw NumericError("game solver produced a zero strategy vector");
  MixedStrategy out;
  out.probs.resize(static_cast<std::size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) out.probs[static_cast<std::size_t>(i)] = v[i] / s;
  return out;
}

}  // namespace

GameSolution solve_zero_sum(const PayoffMatrix& m) {
  m.validate();
  const int nr = m.rows(), nc = m.cols();

  // Shift entries positive so the game value is strictly positive, then use
  // the classic reduction: max sum(w) s.t. A~ w <= 1 gives the column
  // strategy, the duals give the row strategy, value = 1/sum(w) - shift.
  const double shift = std::max(0.0, -m.entries.minCoeff()) + 1.0;
  const Mat shifted = m.entries.array() + shift;

  Vec w, duals;
  double opt;
  try {
    opt = simplex_max(shifted, Vec::Ones(nr), Vec::Ones(nc), w, duals, m.dump());
  } catch (const NumericError& e) {
    throw NumericError(std::string("solve_zero_sum failed: ") + e.what());
  }
  if (!(opt > 0.0)) throw NumericError("solve_zero_sum: degenerate optimum\n" + m.dump());

  GameSolution sol;
  sol.value = 1.0 / opt - shift;
  sol.col = to_mixed(std::move(w));
  sol.row = to_mixed(std::move(duals));
  return sol;
}

GameSolution solve_support_enumeration(const PayoffMatrix& m, double tol) {
  m.validate();
  const int nr = m.rows(), nc = m.cols();
  const Mat& a = m.entries;

  std::vector<int> rows_idx, cols_idx;
  for (int k = 1; k <= std::min(nr, nc); ++k) {
    // iterate k-subsets via bitmasks, smallest first for determinism
    for (int rmask = 0; rmask < (1 << nr); ++rmask) {
      if (__builtin_popcount(static_cast<unsigned>(rmask)) != k) continue;
      rows_idx.clear();
      for (int i = 0; i < nr; ++i)
        if (rmask & (1 << i)) rows_idx.push_back(i);
      for (int cmask = 0; cmask < (1 << nc); ++cmask) {
        if (__builtin_popcount(static_cast<unsigned>(cmask)) != k) continue;
        cols_idx.clear();
        for (int j = 0; j < nc; ++j)
          if (cmask & (1 << j)) cols_idx.push_back(j);

        // x on rows and value v: sum_i x_i a(i, j) = v for j in C, sum x = 1
        Mat sx = Mat::Zero(k + 1, k + 1);
        Vec bx = Vec::Zero(k + 1);
        for (int jj = 0; jj < k; ++jj) {
          for (int ii = 0; ii < k; ++ii) sx(jj, ii) = a(rows_idx[static_cast<std::size_t>(ii)], cols_idx[static_cast<std::size_t>(jj)]);
          sx(jj, k) = -1.0;
        }
        sx.row(k).head(k).setOnes();
        bx[k] = 1.0;
        Eigen::FullPivLU<Mat> lux(sx);
        if (!lux.isInvertible()) continue;
        Vec solx = lux.solve(bx);

        // y on cols: sum_j a(i, j) y_j = v for i in R, sum y = 1
        Mat sy = Mat::Zero(k + 1, k + 1);
        Vec by = Vec::Zero(k + 1);
        for (int ii = 0; ii < k; ++ii) {
          for (int jj = 0; jj < k; ++jj) sy(ii, jj) = a(rows_idx[static_cast<std::size_t>(ii)], cols_idx[static_cast<std::size_t>(jj)]);
          sy(ii, k) = -1.0;
        }
        sy.row(k).head(k).setOnes();
        by[k] = 1.0;
        Eigen::FullPivLU<Mat> luy(sy);
        if (!luy.isInvertible()) continue;
        Vec soly = luy.solve(by);

        const double vx = solx[k], vy = soly[k];
        if (std::abs(vx - vy) > 1e-7) continue;
        bool ok = true;
        for (int ii = 0; ii < k && ok; ++ii) ok = solx[ii] >= -tol;
        for (int jj = 0; jj < k && ok; ++jj) ok = soly[jj] >= -tol;
        if (!ok) continue;

        Vec x = Vec::Zero(nr), y = Vec::Zero(nc);
        for (int ii = 0; ii < k; ++ii) x[rows_idx[static_cast<std::size_t>(ii)]] = std::max(solx[ii], 0.0);
        for (int jj = 0; jj < k; ++jj) y[cols_idx[static_cast<std::size_t>(jj)]] = std::max(soly[jj], 0.0);

        for (int i = 0; i < nr && ok; ++i) ok = a.row(i).dot(y) <= vy + tol;
        for (int j = 0; j < nc && ok; ++j) ok = a.col(j).dot(x) >= vx - tol;
        if (!ok) continue;

        GameSolution sol;
        sol.value = 0.5 * (vx + vy);
        sol.row = to_mixed(std::move(x));
        sol.col = to_mixed(std::move(y));
        return sol;
      }
    }
  }
  throw NumericError("support enumeration found no equilibrium (degenerate game?)\n" + m.dump());
}

double equilibrium_gap(const PayoffMatrix& m, const GameSolution& s) {
  const int nr = m.rows(), nc = m.cols();
  Vec x(nr), y(nc);
  for (int i = 0; i < nr; ++i) x[i] = s.row.probs[static_cast<std::size_t>(i)];
  for (int j = 0; j < nc; ++j) y[j] = s.col.probs[static_cast<std::size_t>(j)];
  const Vec col_payoffs = m.entries.transpose() * x;  // row mix vs each pure column
  const Vec row_payoffs = m.entries * y;              // each pure row vs col mix
  double gap = 0.0;
  gap = std::max(gap, s.value - col_payoffs.minCoeff());
  gap = std::max(gap, row_payoffs.maxCoeff() - s.value);
  return gap;
}

std::pair<int, double> best_response_value(const PayoffMatrix& m, const MixedStrategy& opponent,
                                           Side side) {
  opponent.validate();
  const int expect = side == Side::kRow ? m.cols() : m.rows();
  if (opponent.size() != expect)
    throw ArgumentError("best_response_value: opponent mixture has wrong length");
  Vec w(expect);
  for (int i = 0; i < expect; ++i) w[i] = opponent.probs[static_cast<std::size_t>(i)];
  if (side == Side::kRow) {
    const Vec ev = m.entries * w;
    int best = 0;
    for (int i = 1; i < ev.size(); ++i)
      if (ev[i] > ev[best]) best = i;
    return {best, ev[best]};
  }
  const Vec ev = m.entries.transpose() * w;
  int best = 0;
  for (int j = 1; j < ev.size(); ++j)
    if (ev[j] < ev[best]) best = j;
  return {best, ev[best]};
}

void write_matrix_csv(const std::string& path, const Mat& m) {
  std::vector<std::string> header;
  for (int j = 0; j < m.cols(); ++j) header.push_back("col_" + std::to_string(j));
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (int j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

Mat read_matrix_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  const int nc = static_cast<int>(t.header.size());
  const int nr = static_cast<int>(t.rows.size());
  Mat m(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) m(i, j) = parse_field_double(t, static_cast<std::size_t>(i), j, path);
  return m;
}

}  // namespace greensec
