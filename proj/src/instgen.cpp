#include "bookshelf/instgen.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bookshelf/consensus.hpp"
#include "bookshelf/parallel.hpp"
#include "bookshelf/record_io.hpp"

namespace bookshelf {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

ProblemFormulation build_default_problem(const ProblemParams& params) {
  return build_problem(params, GridSpec::table_one(params.shelf));
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Placed {
  BookGeometry geom;
  Mode mode = Mode::kUpright;
  Pose pose;
  Quad quad;
};

Quad quad_at(const BookGeometry& g, double theta, double x, double* y_out) {
  const Quad origin = vertex_positions(Pose{0.0, 0.0, theta}, g);
  const double y = -min_y(origin);
  if (y_out) *y_out = y;
  return vertex_positions(Pose{x, y, theta}, g);
}

/// One layout attempt; returns false on rejection.
bool try_layout(std::mt19937_64& rng, const ShelfDims& shelf, const GeneratorOptions& opts,
                std::vector<Placed>& books) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_mode(0, kNumModes - 1);
  const int n = opts.num_books;
  books.assign(n, {});
  for (int i = 0; i < n; ++i) {
    Placed& b = books[i];
    b.geom.width = shelf.width * (opts.min_width + (opts.max_width - opts.min_width) * unit(rng));
    b.geom.height =
        shelf.height * (opts.min_height + (opts.max_height - opts.min_height) * unit(rng));
    b.mode = static_cast<Mode>(pick_mode(rng));
    if (auto a = pinned_angle(b.mode)) {
      b.pose.theta = *a;
    } else {
      const double tip = std::atan2(b.geom.width, b.geom.height) / kDeg + 2.0;
      const double lo = std::max(opts.min_lean_deg, tip);
      const double deg = lo + opts.lean_span_deg * unit(rng);
      if (deg > 75.0) return false;
      b.pose.theta = (b.mode == Mode::kLeanLeft ? 1.0 : -1.0) * deg * kDeg;
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (books[i].mode == Mode::kLeanRight && books[i + 1].mode == Mode::kLeanLeft) return false;
  }

  for (int i = 0; i < n; ++i) {
    Placed& b = books[i];
    const Quad q0 = quad_at(b.geom, b.pose.theta, 0.0, &b.pose.y);
    const bool touch_prev =
        b.mode == Mode::kLeanLeft || (i > 0 && books[i - 1].mode == Mode::kLeanRight);
    const double gap = touch_prev ? 0.0 : opts.max_gap * unit(rng);
    double x = 0.0;
    if (i == 0) {
      x = b.mode == Mode::kLeanLeft ? shelf.left() - q0[kVertexTopLeft].x()
                                    : shelf.left() - min_x(q0) + gap;
    } else {
      x = contact_shift_right_of(books[i - 1].quad, q0) + gap;
    }
    if (i == n - 1 && b.mode == Mode::kLeanRight) {
      if (i > 0 && books[i - 1].mode == Mode::kLeanRight) return false;
      const double wall = shelf.right() - q0[kVertexTopRight].x();
      if (wall < x - 1e-12) return false;
      x = wall;
    }
    b.pose.x = x;
    b.quad = quad_at(b.geom, b.pose.theta, x, nullptr);
    if (max_x(b.quad) > shelf.right() + 1e-12 || max_y(b.quad) > shelf.height) return false;
    if (min_x(b.quad) < shelf.left() - 1e-12) return false;
  }
  return true;
}

}  // namespace

Instance generate_instance(std::uint64_t seed, const ShelfDims& shelf,
                           const GeneratorOptions& opts) {
  if (!(shelf.width > 0.0 && shelf.height > 0.0)) {
    throw std::invalid_argument("shelf dimensions must be positive");
  }
  if (opts.num_books < 2) throw std::invalid_argument("need at least two books");
  std::mt19937_64 rng(seed);
  std::vector<Placed> books;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    if (!try_layout(rng, shelf, opts, books)) continue;
    const int n = opts.num_books;
    const int removed = std::uniform_int_distribution<int>(0, n - 1)(rng);

    Instance inst;
    inst.seed = seed;
    inst.params.shelf = shelf;
    Layout layout;
    for (int i = 0; i < n; ++i) {
      if (i == removed) continue;
      inst.params.stored.push_back({books[i].pose, books[i].geom});
      layout.poses.push_back(books[i].pose);
      layout.modes.push_back(books[i].mode);
    }
    inst.params.new_book = books[removed].geom;
    layout.poses.push_back(books[removed].pose);
    layout.modes.push_back(books[removed].mode);
    layout.slot = removed;

    const ProblemFormulation f = build_default_problem(inst.params);
    inst.witness = assemble(f, layout);
    if (!evaluate_constraints(f, inst.witness).feasible(1e-9)) continue;
    return inst;
  }
  std::ostringstream msg;
  msg << "instance generation exhausted " << opts.max_attempts << " attempts for seed " << seed;
  throw std::runtime_error(msg.str());
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::update_norm_stats() {
  if (entries.empty()) {
    norm_stats = {};
    return;
  }
  const int d = static_cast<int>(entries.front().theta.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& e : entries) {
    if (e.theta.size() != d) throw std::invalid_argument("dataset entries differ in dimension");
    mean += e.theta;
  }
  mean /= static_cast<double>(entries.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& e : entries) var += (e.theta - mean).array().square().matrix();
  var /= static_cast<double>(entries.size());
  Eigen::VectorXd sd = var.cwiseSqrt();
  for (int i = 0; i < d; ++i) {
    if (sd[i] < 1e-12) sd[i] = 1.0;
  }
  norm_stats = {mean, sd};
}

Dataset Dataset::prefix(int n) const {
  if (n < 0 || n > size()) throw std::out_of_range("dataset prefix larger than dataset");
  Dataset out;
  out.shelf = shelf;
  out.entries.assign(entries.begin(), entries.begin() + n);
  out.update_norm_stats();
  return out;
}

Dataset build_dataset(int n, const InstanceSolver& solver, std::uint64_t seed,
                      const DatasetOptions& opts) {
  if (n < 1) throw std::invalid_argument("dataset size must be at least 1");
  InstanceSolver solve = solver;
  if (!solve) solve = [](const Instance& inst) { return solve_admm(inst); };

  Dataset d;
  d.shelf = opts.shelf;
  int attempts = 0;
  int failures = 0;
  const int batch = std::max(1, opts.threads) * 4;
  while (d.size() < n) {
    std::vector<Instance> insts(batch);
    std::vector<SolveReport> reports(batch);
    parallel_for(batch, opts.threads, [&](int k) {
      insts[k] = generate_instance(derive_seed(seed, kDatasetStream, attempts + k), opts.shelf,
                                   opts.generator);
      reports[k] = solve(insts[k]);
    });
    for (int k = 0; k < batch && d.size() < n; ++k) {
      ++attempts;
      if (!reports[k].success) {
        ++failures;
        continue;
      }
      DatasetEntry e;
      e.index = attempts - 1;
      e.theta = insts[k].params.theta();
      e.x = reports[k].x;
      e.objective = reports[k].objective;
      d.entries.push_back(std::move(e));
    }
    if (attempts >= 20 && 2 * failures > attempts) {
      std::ostringstream msg;
      msg << "dataset solver failed on " << failures << " of " << attempts << " instances";
      throw std::runtime_error(msg.str());
    }
  }
  d.update_norm_stats();
  return d;
}

// ---------------------------------------------------------------------------
// Files

namespace {

constexpr const char* kDatasetHeader = "bookshelf-dataset v1";
constexpr const char* kInstanceHeader = "bookshelf-instance v1";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

void write_shelf(std::ostream& out, const ShelfDims& shelf) {
  out << "shelf width=" << format_double(shelf.width)
      << " height=" << format_double(shelf.height) << '\n';
}

ShelfDims read_header(std::istream& in, const std::string& header, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error(path + ": expected header '" + header + "'");
  }
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing shelf record");
  const Record r = parse_record(line);
  if (r.tag != "shelf") throw std::runtime_error(path + ": missing shelf record");
  return {r.number("width"), r.number("height")};
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kDatasetHeader << '\n';
  write_shelf(out, d.shelf);
  for (const auto& e : d.entries) {
    out << "entry index=" << e.index << " objective=" << format_double(e.objective)
        << " theta=" << format_vector(e.theta) << " x=" << format_vector(e.x.values) << '\n';
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  Dataset d;
  d.shelf = read_header(in, kDatasetHeader, path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Record r = parse_record(line);
    if (r.tag != "entry") throw std::runtime_error(path + ": unexpected record " + r.tag);
    DatasetEntry e;
    e.index = static_cast<int>(r.integer("index"));
    e.objective = r.number("objective");
    e.theta = r.vector("theta");
    e.x = DecisionVector(r.vector("x"));
    d.entries.push_back(std::move(e));
  }
  d.update_norm_stats();
  return d;
}

void save_instances(const std::vector<Instance>& instances, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kInstanceHeader << '\n';
  write_shelf(out, instances.empty() ? ShelfDims{} : instances.front().params.shelf);
  for (const auto& inst : instances) {
    out << "instance seed=" << inst.seed << " theta=" << format_vector(inst.params.theta())
        << " witness=" << format_vector(inst.witness.values) << '\n';
  }
}

std::vector<Instance> load_instances(const std::string& path) {
  std::ifstream in = open_in(path);
  const ShelfDims shelf = read_header(in, kInstanceHeader, path);
  std::vector<Instance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Record r = parse_record(line);
    if (r.tag != "instance") throw std::runtime_error(path + ": unexpected record " + r.tag);
    Instance inst;
    inst.seed = std::stoull(r.at("seed"));
    inst.params = ProblemParams::from_theta(r.vector("theta"), shelf);
    inst.witness = DecisionVector(r.vector("witness"));
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace bookshelf
