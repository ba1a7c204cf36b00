#pragma once

#include <string>
#include <vector>

#include "reglearn/outer_loop.hpp"

namespace reglearn {

/// One experiment: equation preset, data generation, regularization setup
/// and the run mode. Numeric CSV output uses 17 significant digits so values
/// round-trip exactly.
struct ExperimentConfig {
  std::string equation = "linear";  // linear | bilinear
  int grid_n = 0;                   // 0 picks the preset default (128 linear, 64 bilinear)
  Real gamma = 0.1;
  Real a = 0.05;
  Real b = 2.0;
  Real eps_phi = 0.01;
  std::vector<int> operators = {1, 2, 3};
  Real noise_percent = 10.0;
  int m = 1;
  std::uint64_t seed = 42;
  std::vector<Real> alpha0 = {1e-2};   // broadcast over the active set when single
  std::vector<Real> alpha_lo = {1e-8};
  std::vector<Real> alpha_hi = {1e2};
  std::string mode = "learn";  // learn | scan | compare
  std::string scan_spec;       // "lo:hi:count[,lo:hi:count...]", scan mode only
  std::string output_dir = "out";
  bool log_alpha = false;
  OuterConfig outer;
};

int effective_grid_n(const ExperimentConfig& config);

LearnProblem build_problem(const ExperimentConfig& config);

Vector broadcast_alpha(const std::vector<Real>& values, int count, const char* what);

/// learn mode as a library call (no files written).
LearnResult run_learn(const ExperimentConfig& config);

struct ScanRow {
  Vector alpha;
  Real cost = 0;
};

/// Log-spaced cost scan over the active-set box; one spec is broadcast over
/// all components, otherwise one triplet per component, tensor-product order.
std::vector<ScanRow> run_scan(const ExperimentConfig& config);

struct CompareRow {
  std::vector<int> operators;
  Vector alpha_star;
  Real final_cost = 0;
  std::string termination;
  bool failed = false;
  std::string error;
};

/// Runs learn once per operator subset on identical data (same seed). Rows
/// may execute in parallel, capped by the BILEVEL_THREADS environment
/// variable; failures are recorded per row and do not stop the others.
std::vector<CompareRow> compare_operator_sets(const ExperimentConfig& base,
                                              const std::vector<std::vector<int>>& sets);

/// The seven canonical subsets {1},{2},{3},{1,2},{1,3},{2,3},{1,2,3}.
std::vector<std::vector<int>> canonical_operator_sets();

/// Full harness entry: runs the configured mode and writes the output files
/// (learn: trace.csv, result.csv, u_star.csv, uex.csv; scan: scan.csv;
/// compare: summary.csv). Returns a process exit status; on failure a
/// partial trace is still flushed.
int run(const ExperimentConfig& config);

/// 17-significant-digit formatting used for all numeric output.
std::string format_real(Real value);

void write_field_csv(const std::string& path, const ScalarField& field);
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace, int r);

}  // namespace reglearn
