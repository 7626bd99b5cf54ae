#include "bookshelf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "bookshelf/consensus.hpp"
#include "bookshelf/miqp.hpp"
#include "bookshelf/mpcc.hpp"
#include "bookshelf/parallel.hpp"
#include "bookshelf/record_io.hpp"
#include "bookshelf/warmstart.hpp"

namespace bookshelf {

namespace {

constexpr double kVerifyTol = 1e-6;

const char* const kMethodNames[] = {"zero_mpcc", "manual_mpcc", "admm", "knn_mpcc", "knn_miqp"};

GridSpec grids_of(const BenchConfig& cfg) {
  return cfg.grids.axes.empty() ? GridSpec::table_one(cfg.shelf) : cfg.grids;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string to_string(Method m) { return kMethodNames[static_cast<int>(m)]; }

std::optional<Method> method_from_string(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kMethodNames[i]) return static_cast<Method>(i);
  }
  return std::nullopt;
}

bool needs_dataset(Method m) { return m == Method::kKnnMpcc || m == Method::kKnnMiqp; }

int BenchConfig::effective_k() const {
  if (k > 0) return k;
  return method == Method::kKnnMiqp ? 10 : 3;
}

void BenchConfig::validate() const {
  if (n_test < 1) throw std::invalid_argument("n_test must be at least 1");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  if (needs_dataset(method) && dataset_size < 1) {
    throw std::invalid_argument("dataset size must be at least 1");
  }
  if (generator.num_books < 2) throw std::invalid_argument("need at least two books");
  if (method == Method::kKnnMiqp) grids_of(*this).validate();
}

int BenchReport::successes() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                        [](const BenchRow& r) { return r.success; }));
}

std::vector<Instance> test_instances(const BenchConfig& cfg) {
  std::vector<Instance> out(cfg.n_test);
  parallel_for(cfg.n_test, cfg.threads, [&](int i) {
    out[i] = generate_instance(derive_seed(cfg.seed, kTestStream, i), cfg.shelf, cfg.generator);
  });
  return out;
}

BenchRow solve_instance(const BenchConfig& cfg, const Instance& inst, const Dataset* dataset) {
  BenchRow row;
  row.seed = inst.seed;
  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  std::optional<Eigen::VectorXd> allowance;
  try {
    const ProblemFormulation f = build_default_problem(inst.params);
    const Eigen::VectorXd theta = inst.params.theta();
    OnlineOptions online;
    online.time_limit = cfg.time_limit;
    switch (cfg.method) {
      case Method::kZeroMpcc:
        rep = solve_mpcc(f, DecisionVector::zeros(f.dim()));
        break;
      case Method::kManualMpcc:
        rep = solve_mpcc(f, manual_guess(f, inst));
        break;
      case Method::kAdmm: {
        AdmmOptions ao;
        ao.mixed_integer.time_limit = cfg.time_limit;
        rep = solve_admm(f, manual_guess(f, inst), ao);
        break;
      }
      case Method::kKnnMpcc:
        if (!dataset) throw std::invalid_argument("knn_mpcc needs a dataset");
        rep = solve_online_mpcc(*dataset, theta, cfg.effective_k(), online);
        break;
      case Method::kKnnMiqp: {
        if (!dataset) throw std::invalid_argument("knn_miqp needs a dataset");
        const GridSpec grids = grids_of(cfg);
        rep = solve_online_miqp(*dataset, theta, cfg.effective_k(), grids, online);
        allowance = reformulate_sos2(f, grids).gap_allowance();
        break;
      }
    }
    row.claimed = rep.success;
    row.status = rep.status;
    row.trials = rep.trials;
    row.iterations = rep.iterations;
    if (rep.success) {
      const ViolationReport v = evaluate_constraints(f, rep.x);
      const bool ok = v.feasible(kVerifyTol) ||
                      (allowance && v.feasible_with_allowance(*allowance, kVerifyTol));
      row.max_violation = v.max();
      row.objective = objective_value(f, rep.x);
      row.x = rep.x;
      row.success = ok;
      if (!ok) row.status = SolveStatus::kVerificationFailed;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
    if (row.error.empty()) row.error = "exception";
    row.success = false;
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

BenchReport run_benchmark(const BenchConfig& cfg, const std::vector<Instance>& instances,
                          std::shared_ptr<const Dataset> dataset) {
  cfg.validate();
  if (needs_dataset(cfg.method) && !dataset) {
    DatasetOptions dopts;
    dopts.shelf = cfg.shelf;
    dopts.generator = cfg.generator;
    dopts.threads = cfg.threads;
    dataset = std::make_shared<const Dataset>(build_dataset(cfg.dataset_size, {}, cfg.seed, dopts));
  }
  BenchReport r;
  r.method = cfg.method;
  r.rows.resize(instances.size());
  parallel_for(static_cast<int>(instances.size()), cfg.threads, [&](int i) {
    r.rows[i] = solve_instance(cfg, instances[i], dataset.get());
    r.rows[i].index = i;
  });

  int ok = 0;
  double time_sum = 0.0, obj_sum = 0.0, trial_sum = 0.0, iter_sum = 0.0;
  for (const BenchRow& row : r.rows) {
    time_sum += row.seconds;
    r.max_seconds = std::max(r.max_seconds, row.seconds);
    if (!row.error.empty()) ++r.exceptions;
    if (row.claimed && !row.success) ++r.rejected;
    if (!row.success) continue;
    ++ok;
    obj_sum += row.objective;
    trial_sum += row.trials;
    iter_sum += row.iterations;
  }
  const double n = static_cast<double>(r.rows.size());
  r.success_rate = n > 0 ? ok / n : 0.0;
  r.avg_seconds = n > 0 ? time_sum / n : 0.0;
  if (ok > 0) {
    r.avg_objective = obj_sum / ok;
    r.avg_trials = trial_sum / ok;
    r.avg_iterations = iter_sum / ok;
  }
  return r;
}

BenchReport run_benchmark(const BenchConfig& cfg, std::shared_ptr<const Dataset> dataset) {
  cfg.validate();
  return run_benchmark(cfg, test_instances(cfg), std::move(dataset));
}

std::string report_csv(const BenchReport& r, bool with_timing) {
  std::ostringstream os;
  os << "method,index,seed,status,success,claimed,objective,max_violation,trials,iterations";
  if (with_timing) os << ",seconds";
  os << ",error\n";
  for (const BenchRow& row : r.rows) {
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << to_string(r.method) << ',' << row.index << ',' << row.seed << ','
       << (row.error.empty() ? to_string(row.status) : "exception") << ',' << int(row.success)
       << ',' << int(row.claimed) << ',' << format_double(row.objective) << ','
       << format_double(row.max_violation) << ',' << row.trials << ',' << row.iterations;
    if (with_timing) os << ',' << format_double(row.seconds);
    os << ',' << err << '\n';
  }
  return os.str();
}

std::string report_table(const std::vector<BenchReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %8s %10s %10s %12s %8s %6s %6s\n", "method", "success",
                "avg ms", "max ms", "avg obj", "trials", "exc", "rej");
  os << line;
  for (const BenchReport& r : reports) {
    std::snprintf(line, sizeof line, "%-12s %7s%% %10s %10s %12s %8s %6d %6d\n",
                  to_string(r.method).c_str(), fixed(100.0 * r.success_rate, 2).c_str(),
                  fixed(1e3 * r.avg_seconds, 1).c_str(), fixed(1e3 * r.max_seconds, 1).c_str(),
                  fixed(r.avg_objective, 4).c_str(), fixed(r.avg_trials, 2).c_str(), r.exceptions,
                  r.rejected);
    os << line;
  }
  return os.str();
}

}  // namespace bookshelf
