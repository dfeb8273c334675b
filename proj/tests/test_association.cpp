#include <doctest.h>

#include <random>

#include "dynoscan/association.hpp"
#include "dynoscan/errors.hpp"
#include "oracles/oracles.hpp"

using namespace dynoscan;

namespace {

ClusterSet clusters_at(std::initializer_list<Eigen::Vector3d> centroids)
{
  ClusterSet cs;
  int id = 0;
  for (const auto& c : centroids)
    cs.clusters.push_back({id++, {}, c});
  return cs;
}

}  // namespace

TEST_CASE("cost matrix layout follows the dummy augmentation")
{
  const auto prev = clusters_at({{0, 0, 0}, {10, 0, 0}});
  const auto curr = clusters_at({{0.2, 0, 0}, {50, 0, 0}, {10, 0.3, 0}});
  const CostMatrix c = build_cost_matrix(prev, curr, Pose::identity(), 1.0);
  REQUIRE(c.dimension() == 5);
  CHECK(c(0, 0) == doctest::Approx(0.2));
  CHECK(c(2, 1) == doctest::Approx(0.3));
  CHECK(c(1, 0) == c.infeasible());
  CHECK(c(0, 3) == doctest::Approx(2.0));  // real row, dummy column
  CHECK(c(4, 1) == doctest::Approx(2.0));  // dummy row, real column
  CHECK(c(3, 2) == 0.0);                  // dummy - dummy
  CHECK(c.infeasible() > 4.0 * c.d_max() * 5);
  CHECK_THROWS_AS(CostMatrix(1, 1, 0.0), ConfigError);
}

TEST_CASE("ego compensation turns static clusters into zero-cost matches")
{
  const Pose motion = Pose::from_rotvec({0, 0, 0.2}, {0.5, -0.1, 0});
  const auto prev = clusters_at({{3, 1, 0}, {-2, 4, 1}});
  ClusterSet curr;
  for (const auto& c : prev.clusters)
    curr.clusters.push_back({c.id, {}, motion.apply(c.centroid)});
  const auto a = solve_assignment(build_cost_matrix(prev, curr, motion, 1.0));
  REQUIRE(a.matches.size() == 2);
  for (const auto& m : a.matches)
  {
    CHECK(m.current == m.previous);
    CHECK(m.cost == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("pairs beyond the gate go to dummies")
{
  const auto prev = clusters_at({{0, 0, 0}});
  const auto curr = clusters_at({{5, 0, 0}});
  const auto a = solve_assignment(build_cost_matrix(prev, curr, Pose::identity(), 2.0));
  CHECK(a.matches.empty());
  CHECK(a.total_cost == doctest::Approx(8.0));
}

TEST_CASE("hungarian equals exhaustive permutation on square matrices")
{
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> cost(0.0, 10.0);
  std::uniform_int_distribution<int> small(0, 3);
  for (int trial = 0; trial < 300; ++trial)
  {
    const std::size_t n = static_cast<std::size_t>(size(rng));
    std::vector<double> m(n * n);
    // Half the trials use small integers to force ties.
    for (double& x : m)
      x = trial % 2 ? cost(rng) : small(rng);
    const auto perm = hungarian(m, n);
    double total = 0.0;
    std::vector<char> seen(n, 0);
    for (std::size_t r = 0; r < n; ++r)
    {
      total += m[r * n + static_cast<std::size_t>(perm[r])];
      seen[static_cast<std::size_t>(perm[r])] = 1;
    }
    CHECK(std::count(seen.begin(), seen.end(), 1) == static_cast<long>(n));
    CHECK(total == doctest::Approx(oracle::min_permutation_cost(m, n)).epsilon(1e-12));
  }
  CHECK(hungarian({}, 0).empty());
  std::vector<double> bad(3);
  CHECK_THROWS_AS(hungarian(bad, 2), DomainError);
}

TEST_CASE("partial matching oracle agrees with permutations of the augmented matrix")
{
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> size(0, 4);
  std::uniform_real_distribution<double> pos(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial)
  {
    ClusterSet prev, curr;
    const int n = size(rng), m = size(rng);
    for (int i = 0; i < n; ++i)
      prev.clusters.push_back({i, {}, {pos(rng), pos(rng), 0}});
    for (int i = 0; i < m; ++i)
      curr.clusters.push_back({i, {}, {pos(rng), pos(rng), 0}});
    const CostMatrix c = build_cost_matrix(prev, curr, Pose::identity(), 1.0);
    std::vector<std::vector<double>> d(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(n)));
    for (int r = 0; r < m; ++r)
      for (int k = 0; k < n; ++k)
        d[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] =
          (curr.clusters[static_cast<std::size_t>(r)].centroid - prev.clusters[static_cast<std::size_t>(k)].centroid)
            .norm();
    CHECK(oracle::min_permutation_cost(c.data(), c.dimension()) ==
          doctest::Approx(oracle::min_partial_matching_cost(d, static_cast<std::size_t>(n), 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("track table births, extends and loses tracks")
{
  TrackTable table(3);
  auto f0 = clusters_at({{0, 0, 0}, {5, 0, 0}});
  table.update(solve_assignment(build_cost_matrix({}, f0, Pose::identity(), 1.0)), f0, 0);
  CHECK(table.tracks().size() == 2);
  CHECK(table.track_of_cluster(0) == 0);
  CHECK(table.track_of_cluster(1) == 1);

  auto f1 = clusters_at({{5.1, 0, 0}, {20, 0, 0}});
  const std::vector<char> occluded{0, 1};
  table.update(solve_assignment(build_cost_matrix(f0, f1, Pose::identity(), 1.0)), f1, 1, occluded);
  CHECK(table.track_of_cluster(0) == 1);
  CHECK(table.track_of_cluster(1) == 2);
  CHECK(table.find(0)->status == TrackStatus::Lost);
  CHECK(table.find(1)->entries.size() == 2);
  CHECK(table.find(2)->entries.back().occluded);
  CHECK(table.live_count() == 2);

  // Lost tracks are pruned after the retention span.
  ClusterSet empty;
  for (std::size_t f = 2; f < 6; ++f)
    table.update(solve_assignment(build_cost_matrix(f == 2 ? f1 : empty, empty, Pose::identity(), 1.0)), empty, f);
  CHECK(table.tracks().empty());
  CHECK(table.track_of_cluster(0) == -1);
}

TEST_CASE("track entries keep strictly increasing frames and one cluster per frame")
{
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  TrackTable table(10);
  ClusterSet prev;
  for (std::size_t f = 0; f < 30; ++f)
  {
    ClusterSet curr;
    for (int k = 0; k < 4; ++k)
      curr.clusters.push_back({k, {}, {3.0 * k + 0.1 * f + jitter(rng), jitter(rng), 0}});
    table.update(solve_assignment(build_cost_matrix(prev, curr, Pose::identity(), 1.0)), curr, f);
    prev = curr;
  }
  CHECK(table.tracks().size() == 4);
  for (const auto& t : table.tracks())
  {
    CHECK(t.entries.size() == 10);
    for (std::size_t i = 1; i < t.entries.size(); ++i)
      CHECK(t.entries[i].frame == t.entries[i - 1].frame + 1);
  }
}
