#include <omp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "treefmm/accuracy.hpp"
#include "treefmm/multi_index.hpp"
#include "treefmm/particle_io.hpp"
#include "treefmm/report.hpp"
#include "treefmm/tuner.hpp"

using namespace treefmm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAccuracy = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared by every subcommand; settable from the --config file by long name.
struct Options {
  std::size_t n = 10000;
  std::size_t ncrit = 30;
  int p = 4;
  double theta = 0.5;
  std::string mac = "fmm";
  std::string strategy = "dualtree";
  std::string shape = "cubic";
  std::string center = "geometric";
  std::string p2p = "scalar";
  int threads = 0;
  bool mutual = false;
  bool profile = false;
  std::uint64_t seed = 42;
  std::size_t grain = 1000;
  int reps = 3;
  std::string input;
  std::string output;
  std::string trace;
};

struct VerifyOptions {
  bool enabled = false;
  double tol = 1e-3;
  std::size_t full_limit = 10000;
  std::size_t sample = 1000;
};

struct ScalingOptions {
  std::vector<double> ns{1e4, 1e5, 1e6};
};

struct TuneOptions {
  std::vector<double> targets{1e-2, 1e-3, 1e-4, 1e-5};
  std::string p_range = "3..6";
  double theta_min = 0.1;
  double theta_max = 1.5;
  double resolution = 0.01;
  std::size_t sample = 1000;
};

bool is_direct(const Options& o) { return o.strategy == "direct"; }

EvalConfig eval_config(const Options& o) {
  EvalConfig cfg;
  if (!is_direct(o)) cfg.strategy = parse_strategy(o.strategy);
  cfg.mac = MacConfig(parse_mac(o.mac), o.theta);
  cfg.p = o.p;
  cfg.mutual = o.mutual;
  cfg.task_grain = o.grain;
  cfg.threads = o.threads;
  cfg.p2p_mode = o.p2p == "scalar" ? P2PMode::Scalar : o.p2p == "rsqrt" ? P2PMode::FastRsqrt : P2PMode::Batched;
  cfg.profile_kernels = o.profile;
  return cfg;
}

BuildOptions build_options(const Options& o) {
  BuildOptions b;
  b.ncrit = o.ncrit;
  b.shape = parse_shape(o.shape);
  b.center = o.center == "com" ? CenterMode::CenterOfMass : CenterMode::Geometric;
  return b;
}

void validate(const Options& o) {
  if (o.strategy == "listfmm" && o.shape != "cubic") throw UsageError("listfmm requires --shape cubic");
  if (o.input.empty() && o.n == 0) throw UsageError("--n must be at least 1");
  if (o.reps < 1) throw UsageError("--reps must be at least 1");
  if (o.grain < 1) throw UsageError("--grain must be at least 1");
  eval_config(o);  // theta range
}

ParticleSet particles(const Options& o, std::size_t n) {
  if (!o.input.empty()) return load_particles_csv(o.input);
  return generate_distribution(Distribution::Cube, n, o.seed);
}

RunInfo run_info(const Options& o, std::size_t n) {
  return {.n = n, .ncrit = o.ncrit, .shape = parse_shape(o.shape), .seed = o.seed, .input = o.input, .reps = o.reps};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Outcome {
  ParticleSet result;
  EvalReport report;
  std::optional<TreeStats> tree;
};

Outcome evaluate_once(const ParticleSet& input, const Options& o, InteractionTrace* trace) {
  Outcome out{input, {}, std::nullopt};
  if (is_direct(o)) {
    const auto t0 = std::chrono::steady_clock::now();
    direct_parallel(out.result, out.result, &out.report.stats);
    out.report.traversal_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.report.total_seconds = out.report.traversal_seconds;
    out.report.threads = omp_get_max_threads();
    return out;
  }
  EvalConfig cfg = eval_config(o);
  cfg.trace = trace;
  TreeStats shape;
  out.report = run_evaluation(out.result, build_options(o), cfg, &shape);
  out.tree = shape;
  return out;
}

// Repeats the evaluation and keeps the median of every timing.
Outcome evaluate_reps(const ParticleSet& input, const Options& o) {
  std::optional<InteractionTrace> trace;
  if (!o.trace.empty()) trace.emplace();
  std::vector<EvalReport> reports;
  Outcome last;
  for (int r = 0; r < o.reps; ++r) {
    if (trace) trace->clear();
    last = evaluate_once(input, o, trace ? &*trace : nullptr);
    reports.push_back(last.report);
  }
  auto med = [&](double EvalReport::*field) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.*field);
    return median(v);
  };
  for (double EvalReport::*f : {&EvalReport::build_seconds, &EvalReport::upward_seconds,
                                &EvalReport::traversal_seconds, &EvalReport::downward_seconds,
                                &EvalReport::total_seconds})
    last.report.*f = med(f);
  if (trace) {
    std::ofstream f(o.trace);
    if (!f) throw std::runtime_error("cannot write " + o.trace);
    trace->write_csv(f);
  }
  return last;
}

void attach_errors(Outcome& out, const ParticleSet& input, const VerifyOptions& v, std::uint64_t seed) {
  ErrorNorms e;
  if (input.size() <= v.full_limit) {
    ParticleSet ref = input;
    direct_parallel(ref, ref);
    e = relative_error(out.result, ref);
  } else {
    e = relative_error(out.result, reference_sample(input, v.sample, seed));
  }
  out.report.force_error = e.force;
  out.report.potential_error = e.potential;
}

void emit_json(const nlohmann::json& j, const std::string& path) {
  std::cout << j.dump(2) << '\n';
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

int cmd_run(const Options& o, const VerifyOptions& v) {
  validate(o);
  const ParticleSet input = particles(o, o.n);
  Outcome out = evaluate_reps(input, o);
  if (v.enabled) attach_errors(out, input, v, o.seed);
  nlohmann::json j = report_json(run_info(o, input.size()), eval_config(o), out.report, out.tree);
  if (is_direct(o)) j["config"]["strategy"] = "direct";
  emit_json(j, o.output);
  if (v.enabled && !(*out.report.force_error <= v.tol)) {
    std::cerr << "force error " << *out.report.force_error << " exceeds tolerance " << v.tol << '\n';
    return kExitAccuracy;
  }
  return kExitOk;
}

int cmd_scaling(const Options& o, const ScalingOptions& s) {
  validate(o);
  if (!o.input.empty()) throw UsageError("scaling generates its own particles; drop --input");
  if (s.ns.empty()) throw UsageError("--ns needs at least one size");
  std::ofstream file;
  if (!o.output.empty()) {
    file.open(o.output);
    if (!file) throw std::runtime_error("cannot write " + o.output);
  }
  std::ostream& out = o.output.empty() ? std::cout : file;
  out << "n,total_ms,build_ms,upward_ms,traversal_ms,downward_ms,p2p_calls,p2p_pairs,m2l_calls,m2p_calls\n";
  for (double nd : s.ns) {
    if (!(nd >= 1.0)) throw UsageError("--ns sizes must be at least 1");
    const auto n = static_cast<std::size_t>(std::llround(nd));
    const Outcome r = evaluate_reps(particles(o, n), o);
    const EvalReport& e = r.report;
    out << n << ',' << 1e3 * e.total_seconds << ',' << 1e3 * e.build_seconds << ',' << 1e3 * e.upward_seconds << ','
        << 1e3 * e.traversal_seconds << ',' << 1e3 * e.downward_seconds << ',' << e.stats.p2p_calls << ','
        << e.stats.p2p_pairs << ',' << e.stats.m2l_calls << ',' << e.stats.m2p_calls << '\n';
    out.flush();
  }
  return kExitOk;
}

std::vector<int> parse_p_range(const std::string& s) {
  static const std::regex range(R"(\s*(\d+)\s*\.\.\s*(\d+)\s*)");
  std::smatch m;
  std::vector<int> ps;
  if (std::regex_match(s, m, range)) {
    const int a = std::stoi(m[1]);
    const int b = std::stoi(m[2]);
    for (int p = a; p <= b; ++p) ps.push_back(p);
  } else {
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
      if (!item.empty()) ps.push_back(std::stoi(item));
  }
  if (ps.empty()) throw UsageError("empty --p-range");
  for (int p : ps)
    if (p < 1 || p > kMaxOrder) throw UsageError("--p-range orders must lie in 1.." + std::to_string(kMaxOrder));
  return ps;
}

int cmd_tune(const Options& o, const TuneOptions& t) {
  validate(o);
  if (t.targets.empty()) throw UsageError("--targets needs at least one value");
  const std::vector<int> ps = parse_p_range(t.p_range);
  for (double target : t.targets)
    if (!(target > 0.0)) throw UsageError("--targets must be positive");

  Tree tree = build_tree(particles(o, o.n), build_options(o));
  TunerOptions opts;
  opts.sample_size = t.sample;
  opts.sample_seed = o.seed;
  opts.resolution = t.resolution;
  opts.reps = o.reps;
  opts.base = eval_config(o);
  Tuner tuner(tree, opts);

  std::vector<Tuner::Row> rows;
  for (double target : t.targets) {
    rows.push_back(tuner.tune_row(target, ps, {t.theta_min, t.theta_max}));
    const auto& best = rows.back().best;
    std::cerr << "target " << target << ": ";
    if (best)
      std::cerr << "p=" << best->p << " theta=" << best->theta << " " << 1e3 * best->seconds << " ms\n";
    else
      std::cerr << "unreachable\n";
  }

  std::ofstream file;
  if (!o.output.empty()) {
    file.open(o.output);
    if (!file) throw std::runtime_error("cannot write " + o.output);
  }
  write_tune_csv(o.output.empty() ? std::cout : file, ps, rows);
  const bool any = std::any_of(rows.begin(), rows.end(), [](const Tuner::Row& r) { return r.best.has_value(); });
  return any ? kExitOk : kExitAccuracy;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical N-body evaluation: treecode, list FMM and dual tree traversal"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file using the long option names; flags override it");

  Options o;
  app.add_option("--n", o.n, "Number of generated bodies (uniform cube)");
  app.add_option("--ncrit", o.ncrit, "Maximum bodies per leaf")->check(CLI::PositiveNumber);
  app.add_option("--p", o.p, "Expansion order")->check(CLI::Range(1, kMaxOrder));
  app.add_option("--theta", o.theta, "Opening angle");
  app.add_option("--mac", o.mac)->check(CLI::IsMember({"bh", "bmax", "fmm"}));
  app.add_option("--strategy", o.strategy, "direct evaluates the O(N^2) sum")
      ->check(CLI::IsMember({"treecode", "listfmm", "dualtree", "direct"}));
  app.add_option("--shape", o.shape)->check(CLI::IsMember({"cubic", "rect"}));
  app.add_option("--center", o.center)->check(CLI::IsMember({"geometric", "com"}));
  app.add_option("--p2p", o.p2p, "P2P kernel")->check(CLI::IsMember({"scalar", "batched", "rsqrt"}));
  app.add_option("--threads", o.threads, "0 keeps the OpenMP default")->check(CLI::NonNegativeNumber);
  app.add_flag("--mutual", o.mutual, "Apply pair interactions to both sides (dual tree)");
  app.add_flag("--profile", o.profile, "Time every kernel call");
  app.add_option("--seed", o.seed);
  app.add_option("--grain", o.grain, "Task grain in bodies");
  app.add_option("--reps", o.reps, "Runs per measurement; timings are medians");
  app.add_option("--input", o.input, "CSV with header x,y,z,q instead of generated bodies");
  app.add_option("--output", o.output, "Also write the report / table here");
  app.add_option("--trace", o.trace, "Write the kernel-call trace as CSV (small N)");

  VerifyOptions verify;
  auto* run = app.add_subcommand("run", "Evaluate once and print the JSON report");
  run->add_flag("--verify", verify.enabled, "Compare with direct summation");
  run->add_option("--tol", verify.tol, "Force error tolerance for --verify");

  VerifyOptions check;
  check.enabled = true;
  auto* ver = app.add_subcommand("verify", "Evaluate, compare with direct summation, exit 1 above --tol");
  ver->add_option("--tol", check.tol, "Force error tolerance");
  ver->add_option("--full-limit", check.full_limit, "Largest N checked against every body");
  ver->add_option("--sample", check.sample, "Sampled targets above --full-limit");

  ScalingOptions scaling;
  auto* scl = app.add_subcommand("scaling", "Sweep N and print a CSV of timings and kernel counts");
  scl->add_option("--ns", scaling.ns, "Sizes, e.g. 1e4 1e5 1e6")->delimiter(',');

  TuneOptions tune;
  auto* tun = app.add_subcommand("tune", "Fastest (p, theta) per target error, as a CSV table");
  tun->add_option("--targets", tune.targets, "Target force errors")->delimiter(',');
  tun->add_option("--p-range", tune.p_range, "Orders as a..b or a comma list");
  tun->add_option("--theta-min", tune.theta_min);
  tun->add_option("--theta-max", tune.theta_max);
  tun->add_option("--resolution", tune.resolution);
  tun->add_option("--sample", tune.sample, "Reference sample size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (o.threads > 0) omp_set_num_threads(o.threads);
    if (*run) return cmd_run(o, verify);
    if (*ver) return cmd_run(o, check);
    if (*scl) return cmd_scaling(o, scaling);
    return cmd_tune(o, tune);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
