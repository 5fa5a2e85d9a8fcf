#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "maxcode/core.hpp"

using namespace maxcode;

namespace {

// Independent brute-force enumeration of max_k gamma^(k-1) r_k, written
// without pow so it cannot share a bug with the implementation.
double brute_force_return(const std::vector<double>& rewards, double gamma) {
  double best = -1.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    double w = 1.0;
    for (std::size_t i = 0; i < k; ++i) w *= gamma;
    best = std::max(best, w * rewards[k]);
  }
  return best;
}

ExecFeedback correct_feedback(double speedup) {
  return ExecFeedback::make(true, true, "", 100.0 / speedup, speedup, "");
}

ExecFeedback incorrect_feedback() {
  return ExecFeedback::make(true, false, "wrong output", 50.0, 0.0, "");
}

const RewardBins kDefaultBins{140, 320, 475};

}  // namespace

TEST_CASE("max_reward_return matches the stated examples") {
  CHECK(max_reward_return(std::vector<double>{3.0}, 1.0) == doctest::Approx(3.0));
  CHECK(max_reward_return(std::vector<double>{2.0, 5.0, 3.0}, 1.0) == doctest::Approx(5.0));
  CHECK(max_reward_return(std::vector<double>{4.0, 10.0}, 0.5) == doctest::Approx(5.0));
  CHECK_THROWS_WITH_AS(max_reward_return(std::vector<double>{}, 1.0), "empty trajectory",
                       std::invalid_argument);
}

TEST_CASE("max_reward_return equals brute force on random sequences") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> reward(0.0, 10.0);
  std::uniform_int_distribution<int> length(1, 6);
  for (double gamma : {0.5, 0.9, 1.0}) {
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> rewards(length(rng));
      for (double& r : rewards) r = reward(rng);
      CHECK(max_reward_return(rewards, gamma) ==
            doctest::Approx(brute_force_return(rewards, gamma)).epsilon(1e-12));
    }
  }
}

TEST_CASE("update_best_so_far follows the discounted max rule") {
  CHECK(update_best_so_far(1.0, 2.4, 3, 1.0) == doctest::Approx(2.4));
  CHECK(update_best_so_far(1.0, 0.0, 1, 1.0) == doctest::Approx(1.0));
  CHECK(update_best_so_far(1.0, 8.0, 2, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("update_best_so_far is monotone and folds to the path max at gamma=1") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> reward(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    double u = 1.0;
    double expected = 1.0;
    for (int depth = 1; depth <= 6; ++depth) {
      double r = reward(rng);
      double next = update_best_so_far(u, r, depth, 1.0);
      CHECK(next >= u);
      u = next;
      expected = std::max(expected, r);
    }
    CHECK(u == doctest::Approx(expected));
  }
  // monotone in u_prev and reward
  CHECK(update_best_so_far(2.0, 1.0, 1, 0.9) >= update_best_so_far(1.5, 1.0, 1, 0.9));
  CHECK(update_best_so_far(1.0, 3.0, 1, 0.9) >= update_best_so_far(1.0, 2.0, 1, 0.9));
}

TEST_CASE("bin_speedup implements the upper-inclusive percent boundaries") {
  CHECK(bin_speedup(1.00, true, kDefaultBins) == 0);
  CHECK(bin_speedup(3.20, true, kDefaultBins) == 2);
  CHECK(bin_speedup(9.99, false, kDefaultBins) == 0);
  CHECK(bin_speedup(2.00, true, RewardBins{120, 170, 215}) == 3);
  CHECK_THROWS_AS(bin_speedup(-0.1, true, kDefaultBins), std::invalid_argument);
}

TEST_CASE("bin_speedup is monotone when correct and zero when incorrect") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> speedup(0.0, 8.0);
  for (int trial = 0; trial < 500; ++trial) {
    double a = speedup(rng), b = speedup(rng);
    if (a > b) std::swap(a, b);
    CHECK(bin_speedup(a, true, kDefaultBins) <= bin_speedup(b, true, kDefaultBins));
    CHECK(bin_speedup(b, false, kDefaultBins) == 0);
  }
}

TEST_CASE("compute_value_target matches the stated examples") {
  CHECK(compute_value_target(2, std::vector<int>{1, 0, 2}, 1.0) == 2);
  CHECK(compute_value_target(0, std::vector<int>{0, 4}, 1.0) == 4);
  CHECK(compute_value_target(3, std::vector<int>{1}, 0.9) == 3);
  CHECK_THROWS_AS(compute_value_target(2, std::vector<int>{}, 1.0), std::invalid_argument);
}

TEST_CASE("compute_value_target dominates u and future at gamma=1") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> cat(0, 4);
  std::uniform_int_distribution<int> length(1, 6);
  for (int trial = 0; trial < 500; ++trial) {
    int u = cat(rng);
    std::vector<int> future(length(rng));
    for (int& f : future) f = cat(rng);
    int label = compute_value_target(u, future, 1.0);
    CHECK(label >= u);
    for (int f : future) CHECK(label >= f);
  }
}

TEST_CASE("select_best_node picks the discounted argmax with root fallback") {
  RewardBins bins = kDefaultBins;

  SearchTree tree("run", "beam:Base", 1, 1.0);
  auto& root = tree.add_root("p", "orig", 0);
  tree.add_child(root.node_id, "a", correct_feedback(1.2), bins, 1);
  auto& best = tree.add_child(root.node_id, "b", correct_feedback(2.4), bins, 2);
  tree.add_child(root.node_id, "c", correct_feedback(0.9), bins, 3);
  CHECK(select_best_node(tree).node_id == best.node_id);

  SearchTree none("run", "beam:Base", 1, 1.0);
  auto& root2 = none.add_root("p", "orig", 0);
  none.add_child(root2.node_id, "a", incorrect_feedback(), bins, 1);
  CHECK(select_best_node(none).node_id == root2.node_id);

  // gamma discounts by depth-1: a deep 4x loses to a shallow 2.2x at 0.7.
  SearchTree discounted("run", "beam:Base", 1, 0.7);
  auto& r3 = discounted.add_root("p", "orig", 0);
  auto& d1 = discounted.add_child(r3.node_id, "d1", correct_feedback(2.2), bins, 1);
  auto& d2 = discounted.add_child(d1.node_id, "d2", incorrect_feedback(), bins, 2);
  auto& d3 = discounted.add_child(d2.node_id, "d3", correct_feedback(4.0), bins, 3);
  CHECK(std::pow(0.7, 2) * 4.0 < 2.2);
  CHECK(select_best_node(discounted).node_id == d1.node_id);
  CHECK(d3.depth == 3);

  SearchTree empty;
  CHECK_THROWS_WITH_AS(select_best_node(empty), "empty tree", std::runtime_error);
}

TEST_CASE("select_best_node argmax is invariant under uniform positive rescaling") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> speedup(0.1, 6.0);
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    double s = scale(rng);
    SearchTree a("run", "beam:Base", 1, 1.0);
    SearchTree b("run", "beam:Base", 1, 1.0);
    auto& ra = a.add_root("p", "orig", 0);
    auto& rb = b.add_root("p", "orig", 0);
    std::string pa = ra.node_id, pb = rb.node_id;
    for (int i = 1; i <= 5; ++i) {
      double v = speedup(rng);
      pa = a.add_child(pa, "x", correct_feedback(v), kDefaultBins, i).node_id;
      pb = b.add_child(pb, "x", correct_feedback(v * s), kDefaultBins, i).node_id;
    }
    CHECK(select_best_node(a).node_id == select_best_node(b).node_id);
  }
}

TEST_CASE("ExecFeedback::make enforces the construction invariants") {
  // correct without compiled is normalized away
  ExecFeedback fb = ExecFeedback::make(false, true, "detail", 5.0, 2.0, "");
  CHECK_FALSE(fb.correct);
  CHECK_FALSE(fb.compiled);
  CHECK(fb.speedup == 0.0);
  CHECK_FALSE(fb.time_ms.has_value());

  // incorrect forces speedup 0
  ExecFeedback fb2 = ExecFeedback::make(true, false, "detail", 5.0, 3.0, "");
  CHECK(fb2.speedup == 0.0);
  CHECK(fb2.time_ms.has_value());

  ExecFeedback fb3 = ExecFeedback::make(true, true, "", 5.0, 3.0, "runs");
  CHECK(fb3.correct);
  CHECK(fb3.speedup == 3.0);
}

TEST_CASE("SearchTree maintains depth and the two best-so-far tracks") {
  SearchTree tree("run", "single:Base", 1, 1.0);
  auto& root = tree.add_root("p", "orig", 0);
  CHECK(root.depth == 0);
  CHECK(root.u_raw == 1.0);
  CHECK(root.u_cat == 0);

  auto& a = tree.add_child(root.node_id, "a", correct_feedback(2.0), kDefaultBins, 1);
  CHECK(a.depth == 1);
  CHECK(a.u_raw == doctest::Approx(2.0));
  CHECK(a.u_cat == 2);  // 200% is in (140, 320]

  auto& b = tree.add_child(a.node_id, "b", incorrect_feedback(), kDefaultBins, 2);
  CHECK(b.depth == 2);
  CHECK(b.u_raw == doctest::Approx(2.0));
  CHECK(b.u_cat == 2);

  CHECK_THROWS(tree.add_root("p", "again", 9));
  CHECK_THROWS(tree.add_child("missing", "x", correct_feedback(1.0), kDefaultBins, 10));

  auto path = tree.path_to(b.node_id);
  REQUIRE(path.size() == 3);
  CHECK(path.front()->node_id == root.node_id);
  CHECK(path.back()->node_id == b.node_id);
}

TEST_CASE("u_cat uses the gamma^(k-1) convention and floors to the grid") {
  SearchTree tree("run", "single:Base", 1, 0.9);
  auto& root = tree.add_root("p", "orig", 0);
  // depth-1 reward category 4 at weight gamma^0, depth-2 category 0
  auto& a = tree.add_child(root.node_id, "a", correct_feedback(6.0), kDefaultBins, 1);
  CHECK(a.u_cat == 4);
  auto& b = tree.add_child(a.node_id, "b", incorrect_feedback(), kDefaultBins, 2);
  // max(4 * 0.9^0 from k=1, 0) = 4 -> still 4 at the second node? No: weight
  // gamma^(k-1) applies per ancestor position, so k=1 keeps weight 1.
  CHECK(b.u_cat == 4);
  auto& c = tree.add_child(b.node_id, "c", correct_feedback(6.0), kDefaultBins, 3);
  // own reward at k=3 has weight 0.9^2 = 0.81 -> 3.24 -> floor 3; k=1 gives 4.
  CHECK(c.u_cat == 4);
}
