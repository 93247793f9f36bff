#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "slasso/group_system.hpp"
#include "slasso/solver.hpp"
#include "slasso/variable_set.hpp"

namespace slasso {

// Synthetic regression instance: a hull placed uniformly at random
// (contiguous interval on sequences, diamond on grids), standard Gaussian
// loadings on a subset of the hull chosen so the subset spans the full hull,
// standard Gaussian design, and noise rescaled so that on the training rows
// ||X w||_2 = snr * ||noise||_2 holds exactly.
struct SyntheticSpec {
  Topology topology = SequenceTopology{100};
  std::size_t hull_size = 12;
  double nonzero_fraction = 1.0;  // share of hull variables carrying a loading, in (0,1]
  std::size_t n_train = 200;
  std::size_t n_test = 500;
  std::uint64_t seed = 0;
  double snr = 3.0;

  std::size_t p() const;
};

struct SyntheticInstance {
  Dataset train;
  Dataset test;
  Eigen::VectorXd w_true;
  VariableSet hull;  // the placed hull; equals the hull of the support by construction
};

// Grid hulls are diamonds centered on a lattice vertex, so hull_size must be
// of the form 2r(r+1) (4, 12, 24, 40, ...) and the 2r x 2r bounding box must
// fit the grid; anything else is invalid-input. Draws are deterministic in
// spec.seed: hull position, support subset, loadings, train design, train
// noise, test design, test noise, in that order.
SyntheticInstance generate_instance(const SyntheticSpec& spec);

// Interval groups for a sequence, half-plane groups at the given
// orientations for a grid.
GroupSystem topology_groups(const Topology& topology, const std::vector<double>& grid_thetas);

// ||X_test (w_true - w_hat)||^2 / ||X_test w_true||^2; a zero denominator is
// invalid-input.
double prediction_error(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_true,
                        const Dataset& test);

enum class FitMethod { kLasso, kSlasso, kIslasso };

FitMethod fit_method_from_string(const std::string& s);
std::string to_string(FitMethod m);

// Descending ladder of squared-penalty strengths: num_points log-spaced
// values from the dual-norm bound at w = 0 down by min_ratio.
std::vector<double> lambda_grid(const Dataset& train, const GroupSystem& sys,
                                std::size_t num_points, double min_ratio);

struct CvFit {
  VariableSet pattern;             // selected nonzero pattern
  Eigen::VectorXd refit;           // least squares on the pattern, zero elsewhere
  std::vector<double> chosen_lambdas;  // one entry per fitted model
  bool rank_deficient = false;     // refit design was rank deficient
};

// K-fold cross-validation (folds stripe the rows: row i goes to fold i % k)
// over the given descending grid, scored by held-out mean squared error,
// ties resolved toward the strongest penalty. The lasso swaps in singleton
// groups; the intersected variant fits one model per orientation of sys over
// that orientation's groups plus the full group, intersects the selected
// patterns, and refits on the intersection (an empty intersection yields the
// zero vector).
CvFit fit_with_cv(const Dataset& train, const GroupSystem& sys, FitMethod method,
                  const std::vector<double>& grid, std::size_t k_folds = 5,
                  const SolverConfig& cfg = {});

// One model variant in a sweep: the fitting method plus the weight scheme
// applied to the structured groups (ignored by the lasso).
struct MethodSpec {
  FitMethod method = FitMethod::kSlasso;
  WeightScheme weights = WeightScheme::kW3;
  std::optional<double> rho = 0.5;

  std::string label() const;
};

// Prediction-error sweep over sample sizes and within-hull nonzero
// fractions. Every method sees the same instances; instance draws are
// deterministic in (seed, sample size, fraction, setting). Reported seconds
// are wall-clock measurements and the only fields not reproducible bit for
// bit.
struct SweepConfig {
  Topology topology = SequenceTopology{100};
  std::vector<double> grid_thetas = pi_over_four_thetas();
  std::size_t hull_size = 12;
  std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
  std::vector<std::size_t> sample_sizes = {100, 200, 400};
  std::size_t n_test = 500;
  std::size_t settings = 20;
  std::vector<MethodSpec> methods = {{FitMethod::kLasso, WeightScheme::kW1, std::nullopt},
                                     {FitMethod::kSlasso, WeightScheme::kW3, 0.5},
                                     {FitMethod::kIslasso, WeightScheme::kW3, 0.5}};
  std::size_t lambda_points = 30;
  double lambda_min_ratio = 1e-3;
  std::size_t k_folds = 5;
  std::uint64_t seed = 1;
  bool full_scale = false;
  SolverConfig solver = [] {
    SolverConfig c;
    c.gap_tol = 1e-6;          // candidate fits only feed selection; the refit is least squares
    c.support_tol_rel = 1e-4;  // selection threshold, one decade above the fit noise
    return c;
  }();
};

// Paper-scale dimensions: 400 variables (sequence 400 or grid 20x20), hull
// 24, samples {250, 500, 1000}, 50 settings.
SweepConfig apply_full_scale(SweepConfig cfg);

struct RunRecord {
  std::string method;
  std::size_t n = 0;
  double fraction = 0.0;
  std::size_t setting = 0;
  std::uint64_t seed = 0;
  double error = 0.0;
  VariableSet pattern;
  std::size_t support_size = 0;
  bool pattern_in_family = false;  // pattern equals its hull under the fit system
  std::vector<double> chosen_lambdas;
  double seconds = 0.0;
};

struct SummaryRecord {
  std::string method;
  std::size_t n = 0;
  double fraction = 0.0;
  std::size_t runs = 0;
  double median_error = 0.0;
  double q1_error = 0.0;
  double q3_error = 0.0;
  double median_support_fraction = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<SummaryRecord> summary;  // one row per (method, n, fraction), insertion order
};

ExperimentResult run_error_sweep(const SweepConfig& cfg);

// Wall-clock comparison of the active-set walk against the direct solver,
// where one timed unit is a full k-fold cross-validation over the grid (the
// protocol whose cost the walk is meant to cut). Grids are square with
// p = side^2; the walk stops at smax_factor times the hull size.
struct TimingConfig {
  std::vector<std::size_t> grid_sides = {10, 15, 20, 30};
  std::size_t hull_size = 12;
  double nonzero_fraction = 0.5;
  std::size_t n_train = 500;
  std::size_t n_test = 8;
  std::size_t settings = 3;
  WeightScheme weights = WeightScheme::kW3;
  std::optional<double> rho = 0.5;
  std::size_t lambda_points = 10;
  double lambda_min_ratio = 1e-3;
  std::size_t k_folds = 5;
  double eps = 1e-6;
  std::size_t smax_factor = 4;
  std::uint64_t seed = 1;
  SolverConfig solver = [] {
    SolverConfig c;
    c.gap_tol = 1e-6;          // direct solves certify to the same eps the walk targets
    c.support_tol_rel = 1e-4;
    return c;
  }();
};

struct TimingRecord {
  std::string method;
  std::size_t p = 0;
  std::size_t setting = 0;
  double seconds = 0.0;
};

struct MethodScaling {
  std::string method;
  std::vector<std::size_t> p;
  std::vector<double> median_seconds;  // aligned with p
  double slope = 0.0;                  // least-squares slope of log median vs log p
};

struct TimingStudyResult {
  std::vector<TimingRecord> records;
  std::vector<MethodScaling> scaling;
};

TimingStudyResult run_timing_study(const TimingConfig& cfg);

// CSV writers; doubles are printed with max_digits10 so files round-trip.
void write_runs_csv(const std::vector<RunRecord>& runs, const std::string& path);
void write_summary_csv(const std::vector<SummaryRecord>& rows, const std::string& path);
void write_timing_csv(const TimingStudyResult& result, const std::string& path);
void write_scaling_csv(const TimingStudyResult& result, const std::string& path);

// JSON shapes: {"kind":"sequence","l":100} or {"kind":"grid","h":10,"l":10};
// configs accept any subset of fields and keep defaults for the rest.
Topology topology_from_json(const nlohmann::json& j);
nlohmann::json topology_to_json(const Topology& topology);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
SweepConfig sweep_config_from_json(const nlohmann::json& j);
TimingConfig timing_config_from_json(const nlohmann::json& j);

}  // namespace slasso
