#include <doctest.h>

#include <cmath>

#include "common/loop_field.hpp"
#include "forktms/coil/coil.hpp"

using namespace forktms;
using namespace forktms::coil;

namespace {

Vec3 centroid(const std::vector<Segment>& wire, std::size_t lo, std::size_t hi) {
  Vec3 sum;
  double len = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double l = norm(wire[i].b - wire[i].a);
    sum += (0.5 * l) * (wire[i].a + wire[i].b);
    len += l;
  }
  return sum * (1.0 / len);
}

// Rotation about z by 90 degrees, then a shift.
Vec3 rigid(const Vec3& v, bool point) {
  Vec3 r{-v.y, v.x, v.z};
  return point ? r + Vec3{0.01, -0.02, 0.3} : r;
}

}  // namespace

TEST_CASE("figure-eight wing centroids sit one outer diameter apart") {
  auto c = build_figure_eight({});
  REQUIRE(c.wing_split * 2 == c.wire.size());
  CHECK(c.wire.size() == 2u * 5u * 128u);
  const Vec3 d = centroid(c.wire, 0, c.wing_split) - centroid(c.wire, c.wing_split, c.wire.size());
  CHECK(dot(d, c.wing_axis) == doctest::Approx(0.097).epsilon(1e-9));
  CHECK(norm(d - dot(d, c.wing_axis) * c.wing_axis) < 1e-12);
  CHECK(std::abs(dot(c.wing_axis, c.pose.normal)) < 1e-12);
}

TEST_CASE("wings are closed and wound in opposite senses") {
  auto c = build_figure_eight({});
  auto circulation = [&](std::size_t lo, std::size_t hi, const Vec3& centre) {
    Vec3 m;
    for (std::size_t i = lo; i < hi; ++i) m += cross(c.wire[i].a - centre, c.wire[i].b - c.wire[i].a);
    return dot(m, c.pose.normal);
  };
  CHECK(circulation(0, c.wing_split, c.wing_center[0]) > 0.0);
  CHECK(circulation(c.wing_split, c.wire.size(), c.wing_center[1]) < 0.0);
  for (std::size_t i = 0; i + 1 < c.wing_split; ++i) {
    if (i % 128 != 127) CHECK(norm(c.wire[i].b - c.wire[i + 1].a) < 1e-15);
  }
}

TEST_CASE("builder preconditions") {
  CoilParams p;
  p.segments = 3;
  CHECK_THROWS_WITH_AS(build_figure_eight({}, p), doctest::Contains("segments too few"), Error);
  CoilPose bad;
  bad.normal = {0, 0, 0};
  CHECK_THROWS_WITH_AS(build_figure_eight(bad), doctest::Contains("degenerate pose"), Error);
  CoilPose parallel;
  parallel.handle = {0, 0, 2};
  CHECK_THROWS_WITH_AS(build_figure_eight(parallel), doctest::Contains("degenerate pose"), Error);
  CHECK_THROWS_AS(wing_only(build_figure_eight({}), 2), Error);
}

TEST_CASE("rigidly moved pose moves the polyline") {
  CoilPose pose;
  pose.center = {0.02, 0.0, 0.1};
  pose.normal = {0.0, 0.6, 0.8};
  pose.handle = {1.0, 0.0, 0.0};
  CoilPose moved{rigid(pose.center, true), rigid(pose.normal, false), rigid(pose.handle, false)};
  auto a = build_figure_eight(pose), b = build_figure_eight(moved);
  REQUIRE(a.wire.size() == b.wire.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.wire.size(); ++i) {
    worst = std::max(worst, norm(rigid(a.wire[i].a, true) - b.wire[i].a));
    worst = std::max(worst, norm(rigid(a.wire[i].b, true) - b.wire[i].b));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("single-loop wing model") {
  CoilParams p;
  p.model = WingModel::SingleLoop;
  auto c = build_figure_eight({}, p);
  CHECK(c.wire.size() == 2u * 128u);
  const double r = norm(c.wire[0].a - c.wing_center[0]);
  CHECK(r == doctest::Approx(0.5 * (0.0485 + 0.0235)));
}

TEST_CASE("vector potential vanishes at a loop centre") {
  auto loop = build_loop({0.1, -0.2, 0.3}, {1, 2, 2}, 0.04, 256);
  const double scale = norm(vector_potential_at(loop, {0.1 + 0.02, -0.2, 0.3}));
  CHECK(norm(vector_potential_at(loop, {0.1, -0.2, 0.3})) < 1e-12 * scale);
}

TEST_CASE("on-axis field of a loop") {
  CHECK(testing::loop_axis_error(0.05, 256) < 0.01);
}

TEST_CASE("figure-eight superposition at the junction") {
  auto c = build_figure_eight({});
  const Vec3 p = c.pose.center - Vec3{0, 0, 0.01};
  const Vec3 total = vector_potential_at(c, p);
  const Vec3 w0 = vector_potential_at(wing_only(c, 0), p);
  const Vec3 w1 = vector_potential_at(wing_only(c, 1), p);
  CHECK(norm(total - (w0 + w1)) < 1e-12 * norm(total));
  CHECK(dot(total, c.handle_axis) == doctest::Approx(2.0 * dot(w0, c.handle_axis)).epsilon(1e-9));
}

TEST_CASE("vector potential is linear in current") {
  CoilParams p;
  auto a = build_figure_eight({}, p);
  p.current = 2.0;
  auto b = build_figure_eight({}, p);
  const Vec3 r{0.013, -0.021, -0.04};
  const Vec3 va = vector_potential_at(a, r), vb = vector_potential_at(b, r);
  CHECK(vb.x == 2.0 * va.x);
  CHECK(vb.y == 2.0 * va.y);
  CHECK(vb.z == 2.0 * va.z);
}

TEST_CASE("segment refinement converges") {
  CoilParams p;
  p.segments = 256;
  auto a = build_figure_eight({}, p);
  p.segments = 512;
  auto b = build_figure_eight({}, p);
  const Vec3 r{0.03, 0.01, -0.02};
  const Vec3 va = vector_potential_at(a, r), vb = vector_potential_at(b, r);
  CHECK(norm(vb - va) < 1e-3 * norm(vb));
}

TEST_CASE("far-field decay") {
  // An open straight wire falls off as 1/d; a closed loop is a dipole and
  // falls off as 1/d^2.
  Coil wire;
  wire.wire = {{{-0.005, 0, 0}, {0.005, 0, 0}}};
  wire.wing_split = 1;
  const double a1 = norm(vector_potential_at(wire, {0, 1.0, 0}));
  const double a10 = norm(vector_potential_at(wire, {0, 10.0, 0}));
  CHECK(a1 / a10 == doctest::Approx(10.0).epsilon(0.05));

  auto loop = build_loop({0, 0, 0}, {0, 0, 1}, 0.01, 256);
  const double l1 = norm(vector_potential_at(loop, {1.0, 0, 0}));
  const double l10 = norm(vector_potential_at(loop, {10.0, 0, 0}));
  CHECK(l1 / l10 == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("guard radius") {
  auto loop = build_loop({0, 0, 0}, {0, 0, 1}, 0.05, 64);
  const Vec3 on_wire = loop.wire[3].a;
  CHECK_THROWS_WITH_AS(vector_potential_at(loop, on_wire + Vec3{0, 0, 1e-4}, 1e-3),
                       doctest::Contains("singular segment distance"), Error);
  CHECK_NOTHROW(vector_potential_at(loop, on_wire + Vec3{0, 0, 1e-2}, 1e-3));
}

TEST_CASE("grid sampling uses voxel centres") {
  GridSpec g{{3, 2, 2}, {2.0, 1.0, 1.0}, {0.1, 0.0, -0.05}};
  const Vec3 c = voxel_center(g, 1, 0, 1);
  CHECK(c.x == doctest::Approx(0.1 + 3e-3));
  CHECK(c.y == doctest::Approx(0.5e-3));
  CHECK(c.z == doctest::Approx(-0.05 + 1.5e-3));
  auto coil = build_figure_eight({{0, 0, 0.2}, {0, 0, 1}, {0, 1, 0}});
  auto field = vector_potential(coil, g);
  CHECK(field.size() == 12);
  const Vec3 direct = vector_potential_at(coil, voxel_center(g, 2, 1, 1));
  CHECK(field.at(field.size() - 1) == direct);
  auto mag = field.magnitude();
  CHECK(mag.data().back() == doctest::Approx(norm(direct)));
}

TEST_CASE("coil file round trip") {
  CoilSetup s;
  s.pose.center = {0.01, 0.02, 0.15};
  s.pose.normal = {0, 0, -1};
  s.params.turns = 3;
  s.params.frequency = 5e3;
  s.params.model = WingModel::SingleLoop;
  auto back = parse_coil_file(format_coil_file(s));
  CHECK(back.pose.center == s.pose.center);
  CHECK(back.pose.normal == s.pose.normal);
  CHECK(back.params.turns == 3);
  CHECK(back.params.frequency == 5e3);
  CHECK(back.params.model == WingModel::SingleLoop);
  CHECK_THROWS_WITH_AS(parse_coil_file("colour = red\n"), doctest::Contains("unknown key"), Error);
  CHECK_THROWS_AS(parse_coil_file("center = 1,2\n"), Error);
}
