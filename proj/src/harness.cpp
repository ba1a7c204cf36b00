#include "reglearn/harness.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace reglearn {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) parts.push_back(item);
  return parts;
}

std::string join_operators(const std::vector<int>& ops, const char* sep = "+") {
  std::string out;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (k > 0) out += sep;
    out += std::to_string(ops[k]);
  }
  return out;
}

unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BILEVEL_THREADS")) {
    const long requested = std::strtol(env, nullptr, 10);
    if (requested >= 1) cap = std::min<unsigned>(cap, unsigned(requested));
  }
  return cap;
}

}  // namespace

std::string format_real(Real value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

int effective_grid_n(const ExperimentConfig& config) {
  if (config.grid_n > 0) return config.grid_n;
  return config.equation == "bilinear" ? 64 : 128;
}

Vector broadcast_alpha(const std::vector<Real>& values, int count, const char* what) {
  if (values.size() == 1) return Vector::Constant(count, values.front());
  if (int(values.size()) == count) {
    Vector out(count);
    for (int k = 0; k < count; ++k) out[k] = values[std::size_t(k)];
    return out;
  }
  throw std::invalid_argument(std::string(what) + ": expected 1 or " + std::to_string(count) +
                              " values, got " + std::to_string(values.size()));
}

LearnProblem build_problem(const ExperimentConfig& config) {
  const int n = effective_grid_n(config);
  const Grid grid = build_grid(n, -1.0, 1.0);
  const int r = int(config.operators.size());

  LearnProblem problem;
  problem.grid = grid;
  problem.reg = make_reg_config(config.operators, broadcast_alpha(config.alpha0, r, "alpha0"),
                                broadcast_alpha(config.alpha_lo, r, "alpha_lo"),
                                broadcast_alpha(config.alpha_hi, r, "alpha_hi"));

  const Real noise = config.noise_percent / 100.0;
  if (config.equation == "linear") {
    problem.equation = LinearEquation{config.gamma};
    problem.uex = exact_control_linear(grid);
    const ScalarField yex = exact_state_linear(grid, config.gamma, problem.uex);
    problem.measurements = generate_measurements(yex, noise, config.m, config.seed);
  } else if (config.equation == "bilinear") {
    const PhiParams phi_params(config.a, config.b, config.eps_phi);
    BilinearExactData exact = exact_pair_bilinear(grid, phi_params);
    problem.equation = BilinearEquation{std::move(exact.f), phi_params};
    problem.uex = std::move(exact.uex);
    problem.measurements = generate_measurements(exact.yex, noise, config.m, config.seed);
  } else {
    throw std::invalid_argument("unknown equation kind: " + config.equation);
  }
  return problem;
}

LearnResult run_learn(const ExperimentConfig& config) {
  const LearnProblem problem = build_problem(config);
  OuterConfig outer = config.outer;
  outer.log_alpha = config.log_alpha;
  return learn(problem, problem.reg.alpha, outer);
}

namespace {

std::vector<std::vector<Real>> parse_scan_grid(const std::string& spec, int r) {
  if (spec.empty()) throw std::invalid_argument("scan mode requires a scan spec lo:hi:count");
  std::vector<std::string> parts = split(spec, ',');
  if (parts.size() == 1 && r > 1) parts.assign(std::size_t(r), parts.front());
  if (int(parts.size()) != r) {
    throw std::invalid_argument("scan spec must provide one lo:hi:count triplet per active operator");
  }
  std::vector<std::vector<Real>> grid_values;
  for (const std::string& part : parts) {
    const std::vector<std::string> fields = split(part, ':');
    if (fields.size() != 3) throw std::invalid_argument("scan spec entry is not lo:hi:count: " + part);
    const Real lo = std::stod(fields[0]);
    const Real hi = std::stod(fields[1]);
    const int count = std::stoi(fields[2]);
    if (!(lo > 0) || !(hi >= lo) || count < 1) {
      throw std::invalid_argument("scan spec entry must satisfy 0 < lo <= hi, count >= 1: " + part);
    }
    std::vector<Real> values(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      values[std::size_t(k)] =
          count == 1 ? lo : lo * std::pow(hi / lo, Real(k) / Real(count - 1));
    }
    grid_values.push_back(std::move(values));
  }
  return grid_values;
}

}  // namespace

std::vector<ScanRow> run_scan(const ExperimentConfig& config) {
  const LearnProblem problem = build_problem(config);
  const int r = problem.reg.count();
  const std::vector<std::vector<Real>> axes = parse_scan_grid(config.scan_spec, r);

  std::vector<ScanRow> rows;
  std::vector<std::size_t> cursor(std::size_t(r), 0);
  std::optional<ScalarField> warm;
  while (true) {
    Vector alpha(r);
    for (int k = 0; k < r; ++k) alpha[k] = axes[std::size_t(k)][cursor[std::size_t(k)]];
    const BilevelIterate iterate =
        evaluate_lower(problem, alpha, config.outer.lower_tol, config.outer.lower_max_iter,
                       warm ? &*warm : nullptr);
    rows.push_back(ScanRow{alpha, iterate.cost});
    warm = iterate.u;

    int axis = r - 1;
    while (axis >= 0) {
      if (++cursor[std::size_t(axis)] < axes[std::size_t(axis)].size()) break;
      cursor[std::size_t(axis)] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return rows;
}

std::vector<std::vector<int>> canonical_operator_sets() {
  return {{1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}};
}

std::vector<CompareRow> compare_operator_sets(const ExperimentConfig& base,
                                              const std::vector<std::vector<int>>& sets) {
  std::vector<CompareRow> rows(sets.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::min<unsigned>(thread_cap(), unsigned(sets.size()));

  const auto work = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= sets.size()) return;
      CompareRow& row = rows[index];
      row.operators = sets[index];
      try {
        ExperimentConfig config = base;
        config.mode = "learn";
        config.operators = sets[index];
        const LearnResult result = run_learn(config);
        row.alpha_star = result.alpha_star;
        row.final_cost = result.trace.empty() ? result.initial_cost : result.trace.back().cost;
        row.termination = termination_name(result.termination);
      } catch (const std::exception& err) {
        row.failed = true;
        row.error = err.what();
        row.termination = "Error";
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

void write_field_csv(const std::string& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "i,j,value\n";
  const Grid& grid = field.grid;
  if (field.support == FieldSupport::AllNodes) {
    for (int i = 0; i < grid.n; ++i) {
      for (int j = 0; j < grid.n; ++j) {
        out << i << ',' << j << ',' << format_real(field.values[grid.all_index(i, j)]) << '\n';
      }
    }
  } else if (field.support == FieldSupport::InteriorNodes) {
    for (int i = 1; i <= grid.n - 2; ++i) {
      for (int j = 1; j <= grid.n - 2; ++j) {
        out << i << ',' << j << ',' << format_real(field.values[grid.interior_index(i, j)]) << '\n';
      }
    }
  } else {
    throw std::invalid_argument("write_field_csv: only node fields serialize to CSV");
  }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace, int r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iter";
  for (int k = 1; k <= r; ++k) out << ",alpha_" << k;
  out << ",cost,grad_norm_sq,step_kind,step_length\n";
  for (const TraceRecord& record : trace) {
    out << record.iter;
    for (Index k = 0; k < record.alpha.size(); ++k) out << ',' << format_real(record.alpha[k]);
    out << ',' << format_real(record.cost) << ',' << format_real(record.grad_norm_sq) << ','
        << step_kind_name(record.kind) << ',' << format_real(record.step_length) << '\n';
  }
}

namespace {

void write_result_csv(const std::string& path, const ExperimentConfig& config,
                      const LearnResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "operators";
  for (int op : config.operators) out << ",alpha_star_" << op;
  out << ",final_cost,termination\n";
  out << join_operators(config.operators);
  for (Index k = 0; k < result.alpha_star.size(); ++k) out << ',' << format_real(result.alpha_star[k]);
  const Real final_cost = result.trace.empty() ? result.initial_cost : result.trace.back().cost;
  out << ',' << format_real(final_cost) << ',' << termination_name(result.termination) << '\n';
}

void write_scan_csv(const std::string& path, const std::vector<ScanRow>& rows, int r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (int k = 1; k <= r; ++k) out << (k == 1 ? "" : ",") << "alpha_" << k;
  out << ",cost\n";
  for (const ScanRow& row : rows) {
    for (Index k = 0; k < row.alpha.size(); ++k) out << (k == 0 ? "" : ",") << format_real(row.alpha[k]);
    out << ',' << format_real(row.cost) << '\n';
  }
}

void write_summary_csv(const std::string& path, const std::vector<CompareRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "operators,alpha_star_1,alpha_star_2,alpha_star_3,final_cost,termination\n";
  for (const CompareRow& row : rows) {
    out << join_operators(row.operators);
    for (int op = 1; op <= 3; ++op) {
      out << ',';
      for (std::size_t k = 0; k < row.operators.size(); ++k) {
        if (row.operators[k] == op && !row.failed) {
          out << format_real(row.alpha_star[Index(k)]);
          break;
        }
      }
    }
    out << ',';
    if (!row.failed) out << format_real(row.final_cost);
    out << ',' << row.termination << '\n';
  }
}

}  // namespace

int run(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(config.output_dir);
    const auto path = [&](const char* name) { return (fs::path(config.output_dir) / name).string(); };

    if (config.mode == "learn") {
      if (!config.scan_spec.empty()) {
        throw std::invalid_argument("a scan spec is only valid in scan mode");
      }
      const LearnProblem problem = build_problem(config);
      OuterConfig outer = config.outer;
      outer.log_alpha = config.log_alpha;
      LearnResult result;
      try {
        result = learn(problem, problem.reg.alpha, outer);
      } catch (const LearnError& err) {
        write_trace_csv(path("trace.csv"), err.trace(), int(config.operators.size()));
        std::cerr << "reglearn: " << err.what() << " (partial trace flushed)\n";
        return 1;
      }
      write_trace_csv(path("trace.csv"), result.trace, int(config.operators.size()));
      write_result_csv(path("result.csv"), config, result);
      write_field_csv(path("u_star.csv"), result.u_star);
      write_field_csv(path("uex.csv"), problem.uex);
    } else if (config.mode == "scan") {
      const std::vector<ScanRow> rows = run_scan(config);
      write_scan_csv(path("scan.csv"), rows, int(config.operators.size()));
    } else if (config.mode == "compare") {
      const std::vector<CompareRow> rows = compare_operator_sets(config, canonical_operator_sets());
      write_summary_csv(path("summary.csv"), rows);
      for (const CompareRow& row : rows) {
        if (row.failed) {
          std::cerr << "reglearn: subset {" << join_operators(row.operators, ",")
                    << "} failed: " << row.error << '\n';
        }
      }
    } else {
      throw std::invalid_argument("unknown mode: " + config.mode);
    }
  } catch (const std::exception& err) {
    std::cerr << "reglearn: " << err.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace reglearn
