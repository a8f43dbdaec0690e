#include <doctest.h>

#include <cmath>
#include <random>

#include "mtft/gm.hpp"
#include "mtft/grid.hpp"
#include "oracles.hpp"

using namespace mtft;

namespace {

GridSpec grid_400() {
  GridSpec g;
  g.extent_x = 400.0;
  g.extent_y = 400.0;
  g.ts = 10.0;
  return g;
}

TargetTuple comp(double cx, double cy, double var, double w) {
  TargetTuple t;
  t.mean << cx, cy, 30.0, 40.0;
  t.cov = Mat4::Identity() * var;
  t.weight = w;
  return t;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("spec geometry") {
  const GridSpec g = grid_400();
  CHECK(g.rows() == 40);
  CHECK(g.cols() == 40);
  CHECK(g.cell_x(0) == doctest::Approx(5.0));
  CHECK(g.cell_y(39) == doctest::Approx(395.0));
  GridSpec ragged = g;
  ragged.extent_x = 405.0;  // ceil
  CHECK(ragged.cols() == 41);
  GridSpec tiny = g;
  tiny.extent_x = 30.0;  // 3 cells < minimum
  CHECK_THROWS(tiny.validate());
}

TEST_CASE("empty set renders to the zero map") {
  const PhdMap m = render_phd(TargetSet{}, grid_400());
  CHECK(m.values.rows() == 40);
  CHECK(m.values.cols() == 40);
  CHECK(m.values.abs().maxCoeff() == 0.0);
  CHECK(m.integral() == 0.0);
}

TEST_CASE("single component mass is preserved on the grid") {
  TargetSet s;
  s.targets.push_back(comp(200.0, 200.0, 2500.0, 1.0));  // sigma = 5*ts
  const PhdMap m = render_phd(s, grid_400());
  CHECK(m.integral() == doctest::Approx(1.0).epsilon(0.02));
  // cross-check against midpoint quadrature of the same Gaussian
  const double ref = oracle::gaussian_mass_quadrature(
      1.0, 200.0, 200.0, Mat2::Identity() * 2500.0, 400.0, 400.0, 10.0, 8);
  CHECK(m.integral() == doctest::Approx(ref).epsilon(1e-3));
}

TEST_CASE("three separated components integrate to three") {
  TargetSet s;
  s.targets.push_back(comp(80.0, 80.0, 400.0, 1.0));
  s.targets.push_back(comp(320.0, 90.0, 400.0, 1.0));
  s.targets.push_back(comp(200.0, 320.0, 400.0, 1.0));
  const PhdMap m = render_phd(s, grid_400());
  CHECK(m.integral() == doctest::Approx(3.0).epsilon(0.02));
  CHECK((m.values >= 0.0).all());
}

TEST_CASE("rendered values match gm_eval at cell centers") {
  TargetSet s;
  s.targets.push_back(comp(120.0, 240.0, 900.0, 0.7));
  const GridSpec g = grid_400();
  const PhdMap m = render_phd(s, g);
  for (int i = 10; i < 40; i += 7) {
    for (int j = 3; j < 40; j += 9) {
      const double ref = gm_eval(s, Vec2(g.cell_x(j), g.cell_y(i)));
      CHECK(m.values(i, j) == doctest::Approx(ref).epsilon(1e-6));
    }
  }
}

TEST_CASE("pdd is the elementwise difference") {
  TargetSet a, b;
  a.targets.push_back(comp(100.0, 100.0, 400.0, 1.0));
  b.targets.push_back(comp(120.0, 100.0, 400.0, 1.0));
  const GridSpec g = grid_400();
  const PhdMap va = render_phd(a, g);
  const PhdMap vb = render_phd(b, g);
  const PddMap d = pdd(vb, va);
  CHECK(d.values.isApprox(vb.values - va.values));
  // motion along +x: mass appears ahead of the old center, disappears behind
  CHECK(d.values(10, 13) > 0.0);
  CHECK(d.values(10, 7) < 0.0);
  CHECK(std::abs(d.values.sum()) * g.ts * g.ts < 1e-6);
  const PddMap z = pdd(va, va);
  CHECK(z.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("pdd rejects mismatched grids") {
  GridSpec g2 = grid_400();
  g2.extent_x = 500.0;
  const PhdMap a = render_phd(TargetSet{}, grid_400());
  const PhdMap b = render_phd(TargetSet{}, g2);
  CHECK_THROWS(pdd(a, b));
}

TEST_CASE("postprocess restores the previous mass") {
  TargetSet s;
  s.targets.push_back(comp(200.0, 200.0, 400.0, 2.0));
  const GridSpec g = grid_400();
  const PhdMap prev = render_phd(s, g);
  SUBCASE("zero raw output keeps the map") {
    const Grid raw = Grid::Zero(40, 40);
    const PhdMap out = postprocess_prediction(raw, g, prev, 5);
    CHECK(out.integral() == doctest::Approx(prev.integral()).epsilon(1e-9));
  }
  SUBCASE("random raw offsets still normalise") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1e-4);
    Grid raw(40, 40);
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 40; ++j) raw(i, j) = n(rng);
    const PhdMap out = postprocess_prediction(raw, g, prev, 5);
    CHECK(out.integral() == doctest::Approx(prev.integral()).epsilon(1e-9));
    CHECK((out.values >= 0.0).all());
  }
}

TEST_CASE("postprocess replaces the border with the interior median") {
  const GridSpec g = grid_400();
  TargetSet s;
  s.targets.push_back(comp(200.0, 200.0, 400.0, 1.0));
  const PhdMap prev = render_phd(s, g);
  Grid raw = Grid::Zero(40, 40);
  raw.row(0).setConstant(100.0);   // corrupted borders
  raw.col(39).setConstant(-50.0);
  const PhdMap out = postprocess_prediction(raw, g, prev, 2);

  // all border cells (width 2) carry one shared value
  const double b = out.values(0, 0);
  for (int j = 0; j < 40; ++j) {
    CHECK(out.values(0, j) == doctest::Approx(b));
    CHECK(out.values(1, j) == doctest::Approx(b));
    CHECK(out.values(39, j) == doctest::Approx(b));
  }
  CHECK(out.integral() == doctest::Approx(prev.integral()).epsilon(1e-9));
}

TEST_CASE("degenerate prediction throws") {
  const GridSpec g = grid_400();
  TargetSet s;
  s.targets.push_back(comp(200.0, 200.0, 400.0, 1.0));
  const PhdMap prev = render_phd(s, g);
  const Grid raw = -prev.values - 1.0;  // v_init fully negative -> clamps to 0
  CHECK_THROWS_WITH_AS(postprocess_prediction(raw, g, prev, 5),
                       doctest::Contains("degenerate prediction"),
                       std::runtime_error);
}

TEST_CASE("postprocess rejects a border that swallows the interior") {
  const GridSpec g = grid_400();
  const PhdMap prev = render_phd(TargetSet{}, g);
  CHECK_THROWS(postprocess_prediction(Grid::Zero(40, 40), g, prev, 20));
}

TEST_CASE("peak extraction finds isolated maxima") {
  const GridSpec g = grid_400();
  TargetSet s;
  s.targets.push_back(comp(105.0, 95.0, 400.0, 1.0));
  s.targets.push_back(comp(305.0, 295.0, 400.0, 1.0));
  const PhdMap m = render_phd(s, g);
  const PeakList pl = extract_peaks(m, 2, 30.0);
  REQUIRE(pl.peaks.size() == 2);
  CHECK_FALSE(pl.underfull);
  // sorted by value; both components identical so check as a set
  double d0 = std::min((pl.peaks[0].pos - Vec2(105.0, 95.0)).norm(),
                       (pl.peaks[0].pos - Vec2(305.0, 295.0)).norm());
  double d1 = std::min((pl.peaks[1].pos - Vec2(105.0, 95.0)).norm(),
                       (pl.peaks[1].pos - Vec2(305.0, 295.0)).norm());
  CHECK(d0 <= 10.0);
  CHECK(d1 <= 10.0);
}

TEST_CASE("zero requested peaks yields an empty list") {
  const GridSpec g = grid_400();
  const PhdMap m = render_phd(TargetSet{}, g);
  const PeakList pl = extract_peaks(m, 0, 30.0);
  CHECK(pl.peaks.empty());
  CHECK_FALSE(pl.underfull);
}

TEST_CASE("underfull is flagged when the map cannot supply enough maxima") {
  const GridSpec g = grid_400();
  TargetSet s;
  s.targets.push_back(comp(200.0, 200.0, 400.0, 1.0));
  const PhdMap m = render_phd(s, g);
  const PeakList pl = extract_peaks(m, 3, 30.0);
  CHECK(pl.underfull);
  CHECK(pl.peaks.size() == 1);
}

TEST_CASE("min separation suppresses close maxima") {
  const GridSpec g = grid_400();
  Grid v = Grid::Zero(40, 40);
  v(10, 10) = 5.0;
  v(10, 12) = 4.0;  // 2 cells away, inside the 3-cell radius
  v(30, 30) = 3.0;
  PhdMap m{g, v};
  const PeakList pl = extract_peaks(m, 3, 30.0);
  REQUIRE(pl.peaks.size() == 2);
  CHECK(pl.peaks[0].value == doctest::Approx(5.0));
  CHECK(pl.peaks[1].value == doctest::Approx(3.0));
}

TEST_CASE("plateaus yield a single peak") {
  const GridSpec g = grid_400();
  Grid v = Grid::Zero(40, 40);
  v.block(20, 20, 2, 2).setConstant(7.0);  // 2x2 plateau
  PhdMap m{g, v};
  const PeakList pl = extract_peaks(m, 4, 30.0);
  REQUIRE(pl.peaks.size() == 1);
  CHECK(pl.peaks[0].value == doctest::Approx(7.0));
}

TEST_CASE("render/extract round trip recovers positions") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(60.0, 340.0);
  const GridSpec g = grid_400();
  for (int trial = 0; trial < 10; ++trial) {
    TargetSet s;
    std::vector<Vec2> truth;
    while (truth.size() < 3) {
      const Vec2 p(u(rng), u(rng));
      bool ok = true;
      for (const Vec2& q : truth) ok = ok && (p - q).norm() > 80.0;
      if (!ok) continue;
      truth.push_back(p);
      s.targets.push_back(comp(p.x(), p.y(), 400.0, 1.0));
    }
    const PhdMap m = render_phd(s, g);
    const PeakList pl = extract_peaks(m, 3, 30.0);
    REQUIRE(pl.peaks.size() == 3);
    for (const Vec2& p : truth) {
      double best = 1e9;
      for (const Peak& pk : pl.peaks) best = std::min(best, (pk.pos - p).norm());
      CHECK(best <= g.ts);
    }
  }
}

TEST_CASE("assign_covariances inherits matched metadata and recovers weight") {
  const GridSpec g = grid_400();
  TargetSet prev;
  TargetTuple t = comp(150.0, 150.0, 400.0, 0.95);
  t.label = 42;
  t.age = 8;
  t.motion = Vec2(3.0, -1.0);
  prev.targets.push_back(t);

  const PhdMap m = render_phd(prev, g);
  const PeakList pl = extract_peaks(m, 1, 30.0);
  REQUIRE(pl.peaks.size() == 1);

  BirthModel birth;
  const TargetSet out = assign_covariances(pl, prev, birth, 30.0, 30.0);
  REQUIRE(out.size() == 1);
  CHECK(out.targets[0].label == 42);
  CHECK(out.targets[0].age == 8);
  CHECK(out.targets[0].motion.isApprox(Vec2(3.0, -1.0)));
  CHECK(out.targets[0].cov.isApprox(t.cov));
  CHECK(out.targets[0].mean(2) == doctest::Approx(30.0));  // box w from prev
  CHECK(out.targets[0].mean(3) == doctest::Approx(40.0));
  // amplitude-based weight recovery; the peak cell center sits up to
  // (ts/2, ts/2) off the true mean, which costs exp(-50/800) here
  CHECK(out.targets[0].weight == doctest::Approx(0.95).epsilon(0.12));
  CHECK(out.targets[0].weight <= 0.96);
}

TEST_CASE("orphan peaks become births") {
  const GridSpec g = grid_400();
  TargetSet s;
  s.targets.push_back(comp(220.0, 180.0, 400.0, 1.0));
  const PhdMap m = render_phd(s, g);
  const PeakList pl = extract_peaks(m, 1, 30.0);
  BirthModel birth;
  const TargetSet out = assign_covariances(pl, TargetSet{}, birth, 32.0, 48.0);
  REQUIRE(out.size() == 1);
  CHECK(out.targets[0].label == -1);
  CHECK(out.targets[0].age == birth.age);
  CHECK(out.targets[0].cov.isApprox(birth.cov));
  CHECK(out.targets[0].mean(2) == doctest::Approx(32.0));
  CHECK(out.targets[0].mean(3) == doctest::Approx(48.0));
}

TEST_CASE("assignment pairs nearest peaks and targets") {
  // three peaks, three prev targets in shuffled order
  PeakList pl;
  for (double x : {100.0, 200.0, 300.0}) {
    Peak p;
    p.pos = Vec2(x, 100.0);
    p.value = 1.0 / (2.0 * M_PI * 20.0 * 20.0);  // amplitude of a unit Gaussian
    p.mass = 1.0;
    pl.peaks.push_back(p);
  }
  TargetSet prev;
  int lbl = 0;
  for (double x : {300.0, 100.0, 200.0}) {
    TargetTuple t = comp(x + 4.0, 102.0, 400.0, 1.0);
    t.label = lbl++;
    prev.targets.push_back(t);
  }
  BirthModel birth;
  const TargetSet out = assign_covariances(pl, prev, birth, 30.0, 30.0);
  REQUIRE(out.size() == 3);
  for (const auto& t : out.targets) {
    const double x = t.mean(0);
    if (std::abs(x - 100.0) < 1.0) CHECK(t.label == 1);
    if (std::abs(x - 200.0) < 1.0) CHECK(t.label == 2);
    if (std::abs(x - 300.0) < 1.0) CHECK(t.label == 0);
  }
}

}  // TEST_SUITE
