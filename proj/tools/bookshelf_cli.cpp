// bookshelf: instance generation, dataset building, single solves, benchmarks
// and SVG rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bookshelf/bench.hpp"
#include "bookshelf/instgen.hpp"
#include "bookshelf/svg.hpp"

using namespace bookshelf;

namespace {

struct Common {
  std::uint64_t seed = 1;
  int books = 4;
  int threads = 1;
};

Method parse_method(const std::string& name) {
  auto m = method_from_string(name);
  if (!m) throw std::invalid_argument("unknown method '" + name + "'");
  return *m;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::shared_ptr<const Dataset> dataset_for(const BenchConfig& cfg, const std::string& path) {
  if (!needs_dataset(cfg.method)) return nullptr;
  if (!path.empty()) {
    Dataset d = load_dataset(path);
    if (cfg.dataset_size > 0 && cfg.dataset_size < d.size()) d = d.prefix(cfg.dataset_size);
    return std::make_shared<const Dataset>(std::move(d));
  }
  DatasetOptions o;
  o.shelf = cfg.shelf;
  o.generator = cfg.generator;
  o.threads = cfg.threads;
  std::cerr << "building dataset of " << cfg.dataset_size << " entries\n";
  return std::make_shared<const Dataset>(build_dataset(cfg.dataset_size, {}, cfg.seed, o));
}

Instance pick_instance(const std::string& file, int index, std::uint64_t seed, const Common& c) {
  if (!file.empty()) {
    auto all = load_instances(file);
    if (index < 0 || index >= static_cast<int>(all.size())) {
      throw std::invalid_argument("instance index out of range");
    }
    return all[index];
  }
  GeneratorOptions g;
  g.num_books = c.books;
  return generate_instance(derive_seed(seed, kTestStream, index < 0 ? 0 : index), ShelfDims{}, g);
}

void print_row(const BenchRow& row) {
  std::printf("status %s success %d trials %d iterations %d objective %.6f violation %.3g time %.3fs\n",
              row.error.empty() ? to_string(row.status).c_str() : "exception", int(row.success),
              row.trials, row.iterations, row.objective, row.max_violation, row.seconds);
  if (!row.error.empty()) std::printf("error: %s\n", row.error.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Book placement on a shelf: MPCC, ADMM and data-driven solvers"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file: top-level keys for global flags, [bench] etc. for subcommands");
  Common common;
  app.add_option("--seed", common.seed, "Base seed")->capture_default_str();
  app.add_option("--books", common.books, "Books per instance, inserted one included")
      ->capture_default_str()
      ->check(CLI::Range(2, 12));
  app.add_option("--threads", common.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate test instances");
  int gen_n = 10;
  std::string gen_out = "instances.txt";
  gen->add_option("-n,--n-test", gen_n, "Number of instances")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output file")->capture_default_str();

  // dataset build
  auto* dataset = app.add_subcommand("dataset", "Offline dataset tools");
  dataset->require_subcommand(1);
  auto* build = dataset->add_subcommand("build", "Solve sampled instances with consensus ADMM");
  int build_n = 500;
  std::string build_out = "dataset.txt";
  build->add_option("-n,--size", build_n, "Number of entries")->capture_default_str()->check(CLI::PositiveNumber);
  build->add_option("--out", build_out, "Output file")->capture_default_str();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one instance with one method");
  std::string solve_method = "knn_mpcc", solve_dataset, solve_instances, solve_svg, solve_grids = "table1";
  int solve_index = 0, solve_k = 0, solve_dataset_size = 500;
  double solve_limit = 0.0;
  solve->add_option("--method", solve_method, "zero_mpcc|manual_mpcc|admm|knn_mpcc|knn_miqp")->capture_default_str();
  solve->add_option("--dataset", solve_dataset, "Dataset file for knn methods");
  solve->add_option("--dataset-size", solve_dataset_size, "Entries to build or keep")->capture_default_str();
  solve->add_option("--instances", solve_instances, "Instance file; otherwise one is generated");
  solve->add_option("--index", solve_index, "Instance index")->capture_default_str();
  solve->add_option("--k", solve_k, "Neighbors tried (0: method default)")->capture_default_str();
  solve->add_option("--time-limit", solve_limit, "Seconds, 0 for none")->capture_default_str();
  solve->add_option("--grids", solve_grids, "Grid spec for knn_miqp")->capture_default_str();
  solve->add_option("--out", solve_svg, "SVG of the solution");

  // bench
  auto* bench = app.add_subcommand("bench", "Benchmark methods on fresh test instances");
  std::vector<std::string> bench_methods{"zero_mpcc", "manual_mpcc", "admm", "knn_mpcc", "knn_miqp"};
  std::string bench_dataset, bench_out = "bench_out", bench_grids = "table1";
  int bench_k = 0, bench_n = 200, bench_size = 500, bench_svgs = 3;
  double bench_limit = 0.0;
  bool bench_timing = false;
  bench->add_option("--method", bench_methods, "Methods to run")->capture_default_str();
  bench->add_option("--dataset", bench_dataset, "Dataset file; built from --seed when absent");
  bench->add_option("--dataset-size", bench_size, "Entries to build or keep")->capture_default_str();
  bench->add_option("--k", bench_k, "Neighbors tried (0: method default)")->capture_default_str();
  bench->add_option("--n-test", bench_n, "Test instances")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--time-limit", bench_limit, "Seconds per solve, 0 for none")->capture_default_str();
  bench->add_option("--grids", bench_grids, "Grid spec for knn_miqp")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->capture_default_str();
  bench->add_option("--svg-count", bench_svgs, "Instances rendered per method")->capture_default_str();
  bench->add_flag("--timing", bench_timing, "Add solve times to the CSV files");

  // render
  auto* render = app.add_subcommand("render", "Render an instance to SVG");
  std::string render_instances, render_out = "shelf.svg";
  int render_index = 0;
  bool render_witness = false;
  render->add_option("--instances", render_instances, "Instance file; otherwise one is generated");
  render->add_option("--index", render_index, "Instance index")->capture_default_str();
  render->add_flag("--witness", render_witness, "Draw the generator's full layout instead of the stored books");
  render->add_option("--out", render_out, "Output file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    GeneratorOptions gopts;
    gopts.num_books = common.books;
    const ShelfDims shelf;

    if (*gen) {
      BenchConfig cfg;
      cfg.seed = common.seed;
      cfg.n_test = gen_n;
      cfg.generator = gopts;
      cfg.threads = common.threads;
      save_instances(test_instances(cfg), gen_out);
      std::printf("wrote %d instances to %s\n", gen_n, gen_out.c_str());
    } else if (*build) {
      DatasetOptions o;
      o.generator = gopts;
      o.threads = common.threads;
      const Dataset d = build_dataset(build_n, {}, common.seed, o);
      save_dataset(d, build_out);
      std::printf("wrote %d entries to %s\n", d.size(), build_out.c_str());
    } else if (*solve) {
      BenchConfig cfg;
      cfg.method = parse_method(solve_method);
      cfg.k = solve_k;
      cfg.seed = common.seed;
      cfg.time_limit = solve_limit;
      cfg.dataset_size = solve_dataset_size;
      cfg.grids = GridSpec::parse(solve_grids, shelf);
      cfg.generator = gopts;
      cfg.threads = common.threads;
      cfg.n_test = 1;
      cfg.validate();
      const Instance inst = pick_instance(solve_instances, solve_index, common.seed, common);
      const auto d = dataset_for(cfg, solve_dataset);
      const BenchRow row = solve_instance(cfg, inst, d.get());
      print_row(row);
      if (!solve_svg.empty()) {
        render_svg(inst, row.success ? std::optional<DecisionVector>(row.x) : std::nullopt, solve_svg);
      }
    } else if (*bench) {
      std::filesystem::create_directories(bench_out);
      std::vector<BenchReport> reports;
      std::vector<Instance> instances;
      std::shared_ptr<const Dataset> d;
      for (const std::string& name : bench_methods) {
        BenchConfig cfg;
        cfg.method = parse_method(name);
        cfg.k = bench_k;
        cfg.n_test = bench_n;
        cfg.seed = common.seed;
        cfg.time_limit = bench_limit;
        cfg.dataset_size = bench_size;
        cfg.grids = GridSpec::parse(bench_grids, shelf);
        cfg.generator = gopts;
        cfg.threads = common.threads;
        cfg.validate();
        if (instances.empty()) instances = test_instances(cfg);
        if (needs_dataset(cfg.method) && !d) d = dataset_for(cfg, bench_dataset);
        std::cerr << "running " << name << " on " << bench_n << " instances\n";
        reports.push_back(run_benchmark(cfg, instances, d));
        const BenchReport& r = reports.back();
        write_text(bench_out + "/" + name + ".csv", report_csv(r, bench_timing));
        for (int i = 0; i < std::min<int>(bench_svgs, r.rows.size()); ++i) {
          const BenchRow& row = r.rows[i];
          render_svg(instances[i], row.success ? std::optional<DecisionVector>(row.x) : std::nullopt,
                     bench_out + "/" + name + "_" + std::to_string(i) + ".svg");
        }
      }
      const std::string table = report_table(reports);
      write_text(bench_out + "/summary.txt", table);
      std::cout << table;
    } else if (*render) {
      const Instance inst = pick_instance(render_instances, render_index, common.seed, common);
      render_svg(inst, render_witness ? std::optional<DecisionVector>(inst.witness) : std::nullopt,
                 render_out);
      std::printf("wrote %s\n", render_out.c_str());
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
