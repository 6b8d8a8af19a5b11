#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "treefmm/tuner.hpp"

using namespace treefmm;

namespace {

struct Fixture {
  Tree tree = build_tree(generate_distribution(Distribution::Cube, 10000, 42));
  TunerOptions opts = [] {
    TunerOptions o;
    o.sample_size = 500;
    o.reps = 1;
    return o;
  }();
};

}  // namespace

TEST_CASE("error reference and norms") {
  ParticleSet ps = testing_support::cluster(400, {0, 0, 0}, 1, 5, true);
  ParticleSet ref = ps;
  testing_support::brute_force(ref);
  CHECK(relative_error(ref, ref).force == 0.0);
  CHECK(relative_error(ref, ref).potential == 0.0);

  const ReferenceSample all = reference_sample(ps, 1000, 3);
  REQUIRE(all.index.size() == ps.size());
  for (std::size_t k = 0; k < all.index.size(); ++k) {
    CHECK(all.index[k] == k);
    CHECK(testing_support::rel_diff(all.phi[k], ref.phi[k]) < 1e-12);
  }
  CHECK(relative_error(ref, all).force < 1e-12);

  const ReferenceSample some = reference_sample(ps, 50, 3);
  CHECK(some.index.size() == 50);
  CHECK(std::is_sorted(some.index.begin(), some.index.end()));
  CHECK(std::adjacent_find(some.index.begin(), some.index.end()) == some.index.end());
  CHECK(reference_sample(ps, 50, 3).index == some.index);

  // Scaling every force by 1.1 gives a relative error of 0.1.
  ParticleSet off = ref;
  for (std::size_t i = 0; i < off.size(); ++i) {
    off.fx[i] *= 1.1;
    off.fy[i] *= 1.1;
    off.fz[i] *= 1.1;
  }
  CHECK(relative_error(off, ref).force == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(relative_error(off, some).force == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("largest theta for a target error") {
  Fixture f;
  Tuner tuner(f.tree, f.opts);
  SUBCASE("a loose target takes the whole range") {
    CHECK(tuner.max_theta_for_error(4, 1.0) == doctest::Approx(1.5));
    CHECK(tuner.max_theta_for_error(4, 1.0, {0.2, 0.9}) == doctest::Approx(0.9));
  }
  SUBCASE("bisection lands on the boundary of the grid") {
    const double target = 1e-3;
    const double theta = tuner.max_theta_for_error(4, target);
    CHECK(tuner.error_at(4, theta) <= target);
    CHECK(tuner.error_at(4, theta + 0.01) > target);
    CHECK(theta >= 0.6);
    CHECK(theta <= 0.95);
    // Tighter targets need smaller theta.
    CHECK(tuner.max_theta_for_error(4, 1e-4) < theta);
  }
  SUBCASE("unreachable targets") {
    CHECK_THROWS_WITH_AS(tuner.max_theta_for_error(3, 1e-9, {0.5, 1.0}), "target accuracy unreachable at this p",
                         std::runtime_error);
    const std::vector<int> ps{3, 4};
    CHECK_THROWS_AS(tuner.select_p_theta(1e-12, ps, {0.5, 1.0}), std::runtime_error);
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(tuner.max_theta_for_error(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(tuner.max_theta_for_error(4, 1e-3, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(tuner.max_theta_for_error(4, 1e-3, {0.5, 2.5}), std::invalid_argument);
    CHECK_THROWS_AS(tuner.select_p_theta(1e-3, std::vector<int>{}), std::invalid_argument);
  }
}

TEST_CASE("selection keeps the fastest reachable order") {
  Fixture f;
  Tuner tuner(f.tree, f.opts);
  SUBCASE("single candidate") {
    const std::vector<int> one{5};
    const TuneResult r = tuner.select_p_theta(1e-3, one);
    CHECK(r.p == 5);
    CHECK(r.error <= 1e-3);
    CHECK(r.theta == doctest::Approx(tuner.max_theta_for_error(5, 1e-3)));
  }
  SUBCASE("row of candidates") {
    const std::vector<int> ps{3, 4, 5};
    const Tuner::Row row = tuner.tune_row(1e-3, ps);
    REQUIRE(row.cells.size() == 3);
    REQUIRE(row.best);
    for (const auto& cell : row.cells) {
      REQUIRE(cell);
      CHECK(cell->error <= 1e-3);
      CHECK(row.best->seconds <= cell->seconds);
    }
    std::ostringstream csv;
    write_tune_csv(csv, ps, std::vector<Tuner::Row>{row});
    std::string header, line;
    std::istringstream in(csv.str());
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header == "target,p3,p4,p5");
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    CHECK(std::count(line.begin(), line.end(), ':') == 3);
  }
}

TEST_CASE("tuned parameters hold on a fresh distribution") {
  Fixture f;
  Tuner tuner(f.tree, f.opts);
  const std::vector<int> ps{4};
  const TuneResult r = tuner.select_p_theta(1e-3, ps);
  Tree fresh = build_tree(generate_distribution(Distribution::Cube, 10000, 4242));
  Tuner check(fresh, f.opts);
  CHECK(check.error_at(r.p, r.theta) <= 2e-3);
}

TEST_CASE("unreachable cells print as a dash") {
  Tuner::Row row;
  row.target = 1e-5;
  row.cells = {std::nullopt, TuneResult{4, 0.5, 0.25, 1e-6}};
  std::ostringstream csv;
  const std::vector<int> ps{3, 4};
  write_tune_csv(csv, ps, std::vector<Tuner::Row>{row});
  CHECK(csv.str() == "target,p3,p4\n1e-05,-,0.5:0.25\n");
}
