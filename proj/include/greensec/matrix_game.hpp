#pragma once

#include <string>

#include "greensec/park.hpp"

namespace greensec {

// Two-player zero-sum game; entries are the row player's payoff.
struct PayoffMatrix {
  Mat entries;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
  void validate() const;  // nonempty, finite
  std::string dump() const;
};

struct GameSolution {
  MixedStrategy row;  // maximizer
  MixedStrategy col;  // minimizer
  double value = 0.0;
};

// Exact mixed Nash equilibrium by the standard shifted-matrix linear
// programs, solved with a dense tableau simplex.  Any equilibrium of a
// zero-sum game has the same value, so ties are broken by whatever basic
// solution the simplex lands on.
GameSolution solve_zero_sum(const PayoffMatrix& m);

// Equal-size support enumeration, usable as an independent cross-check on
// small nondegenerate games (intended for rows, cols <= 6).
GameSolution solve_support_enumeration(const PayoffMatrix& m, double tol = 1e-9);

// Largest violation of the equilibrium inequalities for (x, y, v):
// value is >= all column responses against x and <= all row responses to y.
double equilibrium_gap(const PayoffMatrix& m, const GameSolution& s);

enum class Side { kRow, kCol };

// Pure best response against a mixed strategy of the opponent: the row
// maximizing (side == kRow) or column minimizing (side == kCol) expected
// payoff.  Ties break toward the lowest index.
std::pair<int, double> best_response_value(const PayoffMatrix& m, const MixedStrategy& opponent,
                                           Side side);

void write_matrix_csv(const std::string& path, const Mat& m);
Mat read_matrix_csv(const std::string& path);

}  // namespace greensec
