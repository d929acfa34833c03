#pragma once

#include <optional>
#include <string>
#include <vector>

#include "greensec/common.hpp"

namespace greensec {

// Gridded effort/observation panel: one row per (target, period).
struct PatrolPanel {
  std::vector<int> target;
  std::vector<int> period;
  std::vector<double> current_effort;
  std::vector<double> past_effort;
  std::vector<double> neighbor_effort;  // sum of neighbors' past effort
  std::vector<int> observed;            // illegal activity seen, {0,1}

  std::size_t size() const { return target.size(); }
  void validate() const;  // nonneg efforts, binary observations, unique keys
};

PatrolPanel read_panel_csv(const std::string& path);
void write_panel_csv(const std::string& path, const PatrolPanel& panel);

struct ColumnNormalization {
  double mean = 0.0;
  double std = 1.0;       // population standard deviation
  bool degenerate = false;  // zero-variance column, left at zero
};

struct PanelNormalization {
  ColumnNormalization current, past, neighbor;
};

// Standardizes the three effort columns to zero mean, unit variance in
// place; zero-variance columns are flagged and zeroed.
PanelNormalization normalize_efforts(PatrolPanel& panel);

struct FitOptions {
  bool include_neighbors = false;
  bool per_target_intercepts = false;  // otherwise one shared intercept
  bool compute_p_values = false;
  double grad_tol = 1e-8;
  int max_iterations = 200;
};

struct FitDiagnostics {
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood_trace;  // non-decreasing across iterations
  std::vector<double> std_errors;            // observed-information Wald
  std::vector<double> p_values;              // filled when requested
};

struct DeterrenceCoefficients {
  double mean_attractiveness = 0.0;  // shared intercept, or mean of per-target ones
  double gamma = 0.0;                // current effort
  double beta = 0.0;                 // own past effort (deterrence)
  std::optional<double> eta;         // neighbors' past effort (displacement)
  std::vector<double> per_target_intercepts;  // empty unless requested
  FitDiagnostics diagnostics;
  PanelNormalization normalization;  // recorded for inverting the scaling
};

// Maximum-likelihood logistic regression of observation on
// (intercept, current, past[, neighbor sum]) by IRLS with step-halving.
// The panel must already be normalized.  Throws NumericError on perfect
// separation or a singular design.
DeterrenceCoefficients fit_logistic(const PatrolPanel& panel, const FitOptions& opts = {});

std::string coefficients_to_json(const DeterrenceCoefficients& c);

// --- synthetic panels ---

struct EffortProcess {
  enum class Kind { kIidExponential, kHotspot };
  Kind kind = Kind::kHotspot;

  // iid exponential efforts
  double exp_mean = 1.0;

  // hotspot process: a few 3x3 patrol surges per period that persist across
  // periods, over a small exponential base effort.  Concentrated, repeated
  // patrols are what make the rare-event coefficients recoverable at panel
  // sizes like 50k rows.
  int n_hotspots = 1;
  double persist = 0.55;     // hotspot keeps its center next period
  double membership = 0.8;   // cell inside the block actually gets surged
  double surge_effort = 8.0;
  double surge_jitter = 0.3;  // surge multiplier U[1 - j/2, 1 + j/2] spread
  double base_mean = 0.2;

  int neighbor_window = 3;
};

// Draws efforts from the process on a grid, standardizes columns, applies
// the logistic model with the given coefficients and samples observations.
// Rows cover periods 1..n_periods for every target (n_targets * n_periods
// rows); the emitted efforts are the raw draws.
PatrolPanel synth_panel(double intercept, double gamma, double beta, std::optional<double> eta,
                        int n_targets, int n_periods, const EffortProcess& process, Rng& rng);

}  // namespace greensec
