#include <doctest.h>

#include <random>
#include <set>

#include "mtft/association.hpp"
#include "oracles.hpp"

using namespace mtft;

namespace {

Vec4 box(double cx, double cy, double w = 30.0, double h = 40.0) {
  return Vec4(cx, cy, w, h);
}

TargetTuple tgt(double cx, double cy, std::int64_t label, int age,
                double weight = 1.0) {
  TargetTuple t;
  t.mean = box(cx, cy);
  t.cov = Mat4::Identity() * 20.0;
  t.weight = weight;
  t.label = label;
  t.age = age;
  return t;
}

}  // namespace

TEST_SUITE("association") {

TEST_CASE("iou basics") {
  CHECK(iou(box(0, 0, 2, 2), box(0, 0, 2, 2)) == doctest::Approx(1.0));
  CHECK(iou(box(0, 0, 2, 2), box(10, 0, 2, 2)) == 0.0);
  // unit boxes offset by half a side: inter 0.5, union 1.5
  CHECK(iou(box(0, 0, 1, 1), box(0.5, 0, 1, 1)) == doctest::Approx(1.0 / 3.0));
  // 2x2 boxes offset by (1,1): inter 1, union 7
  CHECK(iou(box(0, 0, 2, 2), box(1, 1, 2, 2)) == doctest::Approx(1.0 / 7.0));
  // degenerate box
  CHECK(iou(box(0, 0, 0, 2), box(0, 0, 2, 2)) == 0.0);
  // touching edges only
  CHECK(iou(box(0, 0, 2, 2), box(2, 0, 2, 2)) == 0.0);
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> s(0.5, 6.0);
  for (int i = 0; i < 100; ++i) {
    const Vec4 a = box(u(rng), u(rng), s(rng), s(rng));
    const Vec4 b = box(u(rng), u(rng), s(rng), s(rng));
    const double ab = iou(a, b);
    CHECK(ab == doctest::Approx(iou(b, a)).epsilon(1e-14));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("distance matrix is age-weighted negative IoU") {
  TargetSet prev, curr;
  prev.targets.push_back(tgt(0, 0, 1, 4));
  prev.targets.push_back(tgt(100, 0, 2, 10));
  curr.targets.push_back(tgt(0, 0, -1, 0));
  curr.targets.push_back(tgt(200, 0, -1, 0));
  const Eigen::MatrixXd d = distance_matrix(prev, curr);
  REQUIRE(d.rows() == 2);
  REQUIRE(d.cols() == 2);
  CHECK(d(0, 0) == doctest::Approx(-4.0));  // age 4, IoU 1
  CHECK(d(0, 1) == 0.0);
  CHECK(d(1, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);
}

TEST_CASE("hungarian identity on a diagonal cost") {
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(3, 3);
  cost.diagonal().setConstant(-1.0);
  const Assignment a = hungarian(cost, true);
  for (int i = 0; i < 3; ++i) CHECK(a.row_to_col[i] == i);
  CHECK(a.total_cost == doctest::Approx(-3.0));
}

TEST_CASE("forbid_nonnegative leaves zero-cost pairs unmatched") {
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(2, 2);
  const Assignment a = hungarian(cost, true);
  CHECK(a.row_to_col[0] == -1);
  CHECK(a.row_to_col[1] == -1);
  CHECK(a.col_to_row[0] == -1);
  CHECK(a.total_cost == 0.0);
}

TEST_CASE("hungarian matches brute force on random rectangles") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> dim(1, 7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng), m = dim(rng);
    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) cost(i, j) = u(rng);
    const Assignment a = hungarian(cost, false);
    const double ref = oracle::brute_force_assignment(cost);
    CHECK(a.total_cost == doctest::Approx(ref).epsilon(1e-9));
    // the stored matching must reproduce the reported cost and be 1-1
    double readd = 0.0;
    std::set<int> cols;
    int matched = 0;
    for (int i = 0; i < n; ++i) {
      if (a.row_to_col[i] < 0) continue;
      readd += cost(i, a.row_to_col[i]);
      cols.insert(a.row_to_col[i]);
      ++matched;
      CHECK(a.col_to_row[a.row_to_col[i]] == i);
    }
    CHECK(static_cast<int>(cols.size()) == matched);
    CHECK(matched == std::min(n, m));
    CHECK(readd == doctest::Approx(a.total_cost).epsilon(1e-9));
  }
}

TEST_CASE("empty cost matrices are handled") {
  const Assignment a = hungarian(Eigen::MatrixXd(0, 3), false);
  CHECK(a.row_to_col.empty());
  REQUIRE(a.col_to_row.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(a.col_to_row[j] == -1);
}

TEST_CASE("age update fixtures") {
  AssocConfig cfg;  // a_at = 2, a_am = 1
  CHECK(age_update(5, true, cfg) == 6);
  CHECK(age_update(5, false, cfg) == 3);  // 5 - floor(5/2)
  CHECK(age_update(4, false, cfg) == 2);
  CHECK(age_update(1, false, cfg) == 1);  // 1 - floor(1/2), fixed point
  CHECK(age_update(0, false, cfg) == 0);
  cfg.a_am = 3;
  CHECK(age_update(5, true, cfg) == 8);
  cfg.a_at = 3;
  CHECK(age_update(9, false, cfg) == 6);
}

TEST_CASE("age decay never goes negative") {
  AssocConfig cfg;
  for (int age = 0; age < 50; ++age) {
    CHECK(age_update(age, false, cfg) >= 0);
    CHECK(age_update(age, false, cfg) <= age);
  }
}

TEST_CASE("survivors keep labels and re-estimate motion") {
  TargetSet prev, sel;
  prev.targets.push_back(tgt(100, 100, 7, 6));
  sel.targets.push_back(tgt(104, 103, -1, 5));
  AssocConfig cfg;
  std::int64_t counter = 50;
  const TargetSet out = t2t_associate(prev, sel, cfg, counter);
  REQUIRE(out.size() == 1);
  CHECK(out.targets[0].label == 7);
  CHECK(out.targets[0].age == 7);  // 6 + a_am
  CHECK(out.targets[0].motion.isApprox(Vec2(4.0, 3.0)));
  CHECK(counter == 50);  // no birth consumed a label
}

TEST_CASE("unmatched selected become births with fresh labels") {
  TargetSet sel;
  sel.targets.push_back(tgt(10, 10, -1, 5));
  sel.targets.push_back(tgt(300, 300, -1, 5));
  AssocConfig cfg;
  std::int64_t counter = 0;
  const TargetSet out = t2t_associate(TargetSet{}, sel, cfg, counter);
  REQUIRE(out.size() == 2);
  CHECK(out.targets[0].label == 0);
  CHECK(out.targets[1].label == 1);
  CHECK(out.targets[0].age == cfg.a_birth);
  CHECK(out.targets[0].motion.norm() == 0.0);
  CHECK(counter == 2);
}

TEST_CASE("unmatched previous decay and coast") {
  TargetSet prev;
  TargetTuple t = tgt(100, 100, 3, 8);
  t.motion = Vec2(5.0, -2.0);
  prev.targets.push_back(t);
  AssocConfig cfg;
  std::int64_t counter = 10;
  const TargetSet out = t2t_associate(prev, TargetSet{}, cfg, counter);
  REQUIRE(out.size() == 1);
  CHECK(out.targets[0].label == 3);
  CHECK(out.targets[0].age == 4);  // 8 - floor(8/2)
  CHECK(out.targets[0].mean(0) == doctest::Approx(105.0));
  CHECK(out.targets[0].mean(1) == doctest::Approx(98.0));
  SUBCASE("coasting can be disabled") {
    cfg.coast_decaying = false;
    const TargetSet out2 = t2t_associate(prev, TargetSet{}, cfg, counter);
    CHECK(out2.targets[0].mean(0) == doctest::Approx(100.0));
  }
}

TEST_CASE("mixed association keeps output order survivors, births, decaying") {
  TargetSet prev, sel;
  prev.targets.push_back(tgt(100, 100, 1, 6));
  prev.targets.push_back(tgt(300, 300, 2, 9));
  sel.targets.push_back(tgt(102, 101, -1, 5));  // overlaps track 1
  sel.targets.push_back(tgt(500, 500, -1, 5));  // new
  AssocConfig cfg;
  std::int64_t counter = 100;
  const TargetSet out = t2t_associate(prev, sel, cfg, counter);
  REQUIRE(out.size() == 3);
  CHECK(out.targets[0].label == 1);    // survivor
  CHECK(out.targets[1].label == 100);  // birth
  CHECK(out.targets[2].label == 2);    // decaying
  CHECK(out.targets[0].age == 7);
  CHECK(out.targets[1].age == 5);
  CHECK(out.targets[2].age == 5);  // 9 - floor(9/2)
}

TEST_CASE("zero-overlap pairs stay unmatched under forbid_nonnegative") {
  TargetSet prev, sel;
  prev.targets.push_back(tgt(100, 100, 1, 6));
  sel.targets.push_back(tgt(400, 400, -1, 5));
  AssocConfig cfg;
  std::int64_t counter = 0;
  const TargetSet out = t2t_associate(prev, sel, cfg, counter);
  REQUIRE(out.size() == 2);
  CHECK(out.targets[0].label == 0);  // birth, no forced match
  CHECK(out.targets[1].label == 1);  // decayed original
  CHECK(out.targets[1].age == 3);
}

TEST_CASE("duplicate previous labels throw") {
  TargetSet prev;
  prev.targets.push_back(tgt(0, 0, 5, 6));
  prev.targets.push_back(tgt(100, 100, 5, 6));
  AssocConfig cfg;
  std::int64_t counter = 0;
  CHECK_THROWS(t2t_associate(prev, TargetSet{}, cfg, counter));
}

TEST_CASE("association cardinality and label uniqueness") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 800.0);
  AssocConfig cfg;
  std::int64_t counter = 0;
  for (int trial = 0; trial < 20; ++trial) {
    TargetSet prev, sel;
    const int np = 1 + static_cast<int>(rng() % 6);
    const int ns = static_cast<int>(rng() % 6);
    for (int i = 0; i < np; ++i) {
      prev.targets.push_back(tgt(u(rng), u(rng), counter++, 5 + i));
    }
    for (int i = 0; i < ns; ++i) sel.targets.push_back(tgt(u(rng), u(rng), -1, 5));
    const TargetSet out = t2t_associate(prev, sel, cfg, counter);
    CHECK(out.size() >= std::max<std::size_t>(np, ns));
    CHECK(out.size() <= static_cast<std::size_t>(np + ns));
    std::set<std::int64_t> labels;
    for (const auto& t : out.targets) {
      CHECK(t.label >= 0);
      CHECK(labels.insert(t.label).second);
    }
  }
}

TEST_CASE("repeated survival accumulates age") {
  AssocConfig cfg;
  std::int64_t counter = 0;
  TargetSet prev;
  {
    TargetSet sel;
    sel.targets.push_back(tgt(100, 100, -1, cfg.a_birth));
    prev = t2t_associate(TargetSet{}, sel, cfg, counter);
  }
  for (int k = 0; k < 4; ++k) {
    TargetSet sel;
    sel.targets.push_back(tgt(100.0 + k, 100.0, -1, cfg.a_birth));
    prev = t2t_associate(prev, sel, cfg, counter);
  }
  REQUIRE(prev.size() == 1);
  CHECK(prev.targets[0].age == cfg.a_birth + 4 * cfg.a_am);
  CHECK(prev.targets[0].label == 0);
}

TEST_CASE("extract_mature filters by age") {
  TargetSet s;
  s.targets.push_back(tgt(0, 0, 1, 5));
  s.targets.push_back(tgt(0, 0, 2, 4));
  s.targets.push_back(tgt(0, 0, 3, 11));
  const TargetSet m = extract_mature(s, 5);
  REQUIRE(m.size() == 2);
  CHECK(m.targets[0].label == 1);
  CHECK(m.targets[1].label == 3);
}

}  // TEST_SUITE
