#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "voroperc/geometry.hpp"

using namespace voroperc;

namespace {

// Exact brute-force Delaunay-adjacency oracle: i and j share a positive-
// length window-clipped Voronoi edge iff there is a nondegenerate interval
// of disk centers on their bisector, inside the window, whose disks through
// p_i and p_j contain no other point. Every constraint is linear in the
// bisector parameter.
bool adjacent_oracle(const PointSet& ps, int i, int j) {
    const Vec2 pi = ps.points[i], pj = ps.points[j];
    const Vec2 mid = 0.5 * (pi + pj);
    const Vec2 u{-(pj.y - pi.y), pj.x - pi.x};  // bisector direction
    double lo = -1e18, hi = 1e18;
    auto cut = [&](double A, double B) {
        // constraint A + B s > 0
        if (B > 0)
            lo = std::max(lo, -A / B);
        else if (B < 0)
            hi = std::min(hi, -A / B);
        else if (A <= 0)
            lo = 1e19;  // infeasible
    };
    for (size_t k = 0; k < ps.size(); ++k) {
        if (static_cast<int>(k) == i || static_cast<int>(k) == j) continue;
        const Vec2 pk = ps.points[k];
        Vec2 d = pk - pi;
        cut(norm2(pk) - norm2(pi) - 2.0 * dot(mid, d), -2.0 * dot(u, d));
    }
    // window constraints on the center
    cut(ps.window.x1 - mid.x, -u.x);
    cut(mid.x - ps.window.x0, u.x);
    cut(ps.window.y1 - mid.y, -u.y);
    cut(mid.y - ps.window.y0, u.y);
    return hi - lo > 1e-12;
}

int linear_scan_nearest(const PointSet& ps, Vec2 q) {
    int best = 0;
    double bd = dist2(q, ps.points[0]);
    for (size_t k = 1; k < ps.size(); ++k) {
        double d = dist2(q, ps.points[k]);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("poisson sampling: count distribution") {
    const Window w{0, 10, 0, 10};
    double mean = 0;
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) mean += static_cast<double>(sample_poisson(w, 1.0, s).size());
    mean /= trials;
    CHECK(mean > 97.0);
    CHECK(mean < 103.0);
}

TEST_CASE("poisson sampling: tiny window mostly empty") {
    const Window w{0, 0.01, 0, 0.01};
    int empty = 0;
    for (int s = 0; s < 2000; ++s) empty += sample_poisson(w, 1.0, s).size() == 0;
    CHECK(empty > 1990);  // P[empty] = e^-0.0001
}

TEST_CASE("poisson sampling: deterministic in the seed") {
    const Window w{0, 10, 0, 10};
    PointSet a = sample_poisson(w, 1.0, 12345), b = sample_poisson(w, 1.0, 12345);
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(a.points[k].x == b.points[k].x);
        CHECK(a.points[k].y == b.points[k].y);
    }
}

TEST_CASE("points are pairwise distinct and inside the window") {
    PointSet ps = sample_poisson({0, 20, 0, 20}, 1.0, 99);
    std::set<std::pair<int64_t, int64_t>> seen;
    for (const Vec2& p : ps.points) {
        CHECK(ps.window.contains(p));
        CHECK(seen.insert({quantized(p.x), quantized(p.y)}).second);
    }
}

TEST_CASE("three points: one triangle, all pairs adjacent") {
    PointSet ps;
    ps.window = {0, 10, 0, 10};
    ps.points = {{2, 2}, {8, 3}, {4, 7}};
    Tessellation t = build_tessellation(ps);
    CHECK(t.adjacent(0, 1));
    CHECK(t.adjacent(1, 2));
    CHECK(t.adjacent(0, 2));
    REQUIRE(t.disks.size() == 1);
    CHECK(t.disks[0].sites.size() == 3);
}

TEST_CASE("single point: cell is the whole window, no edges") {
    PointSet ps;
    ps.window = {0, 5, 0, 5};
    ps.points = {{2, 2}};
    Tessellation t = build_tessellation(ps);
    CHECK(t.adj[0].empty());
    CHECK(t.cells[0].area() == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(t.disks.empty());
}

TEST_CASE("collinear points chain without crashing") {
    PointSet ps;
    ps.window = {0, 10, 0, 10};
    ps.points = {{1, 5}, {3, 5}, {5, 5}, {7, 5}, {9, 5}};
    Tessellation t = build_tessellation(ps);
    CHECK(t.adjacent(0, 1));
    CHECK(t.adjacent(1, 2));
    CHECK(!t.adjacent(0, 2));
    double area = 0;
    for (const auto& c : t.cells) area += c.area();
    CHECK(area == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("adjacency equals the empty-disk oracle") {
    for (uint64_t seed : {11u, 22u, 33u}) {
        PointSet ps = sample_poisson({0, 10, 0, 10}, 0.5, seed);
        if (ps.size() < 4) continue;
        Tessellation t = build_tessellation(ps);
        for (size_t i = 0; i < ps.size(); ++i)
            for (size_t j = i + 1; j < ps.size(); ++j) {
                bool got = t.adjacent(static_cast<int>(i), static_cast<int>(j));
                bool want = adjacent_oracle(ps, static_cast<int>(i), static_cast<int>(j));
                CHECK_MESSAGE(got == want, "pair ", i, ",", j, " seed ", seed);
            }
    }
}

TEST_CASE("empty-circumcircle property (exact predicate)") {
    PointSet ps = sample_poisson({0, 25, 0, 25}, 1.0, 7);
    REQUIRE(ps.size() > 100);
    Tessellation t = build_tessellation(ps);
    for (const Circumdisk& d : t.disks) {
        REQUIRE(d.sites.size() >= 3);
        Vec2 a = ps.points[d.sites[0]], b = ps.points[d.sites[1]], c = ps.points[d.sites[2]];
        if (orient_exact(a, b, c) < 0) std::swap(b, c);
        for (size_t k = 0; k < ps.size(); ++k) {
            if (std::find(d.sites.begin(), d.sites.end(), static_cast<int>(k)) != d.sites.end())
                continue;
            CHECK(in_circle_exact(a, b, c, ps.points[k]) <= 0);
        }
    }
}

TEST_CASE("cells tile the window") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        PointSet ps = sample_poisson({0, 15, 0, 15}, 1.0, seed);
        if (ps.size() == 0) continue;
        Tessellation t = build_tessellation(ps);
        double area = 0;
        for (const auto& c : t.cells) area += c.area();
        CHECK(area == doctest::Approx(t.window().area()).epsilon(1e-9));
    }
}

TEST_CASE("adjacency is symmetric and irreflexive") {
    PointSet ps = sample_poisson({0, 12, 0, 12}, 1.0, 17);
    Tessellation t = build_tessellation(ps);
    for (size_t i = 0; i < t.size(); ++i)
        for (int j : t.adj[i]) {
            CHECK(j != static_cast<int>(i));
            CHECK(t.adjacent(j, static_cast<int>(i)));
        }
}

TEST_CASE("locate: exact hits, two-point case, oracle agreement") {
    PointSet two;
    two.window = {-1, 5, -1, 1};
    two.points = {{0, 0}, {4, 0}};
    Tessellation t2 = build_tessellation(two);
    CHECK(locate({1, 0}, t2) == 0);
    CHECK(locate({3, 0}, t2) == 1);

    PointSet ps = sample_poisson({0, 12, 0, 12}, 1.0, 23);
    Tessellation t = build_tessellation(ps);
    CHECK(locate(ps.points[5], t) == 5);
    Rng rng(9, 0, 0);
    for (int q = 0; q < 100; ++q) {
        Vec2 u{rng.uniform(0, 12), rng.uniform(0, 12)};
        CHECK(locate(u, t) == linear_scan_nearest(ps, u));
    }
}

TEST_CASE("locate on empty set throws") {
    Tessellation t;
    CHECK_THROWS_WITH_AS(locate({0, 0}, t), "locate: no cells", geometry_error);
}

TEST_CASE("padded margin: monotone in failure_prob and intensity") {
    double m1 = padded_margin(32, 32, 1.0, 1e-9);
    double m2 = padded_margin(32, 32, 1.0, 0.5e-9);
    double m3 = padded_margin(32, 32, 2.0, 1e-9);
    CHECK(m2 > m1);
    CHECK(m3 < m1);
    CHECK(m1 >= 6.0);  // documented union bound at 1e-9
    CHECK(m1 < 12.0);
}

TEST_CASE("check_padding_valid: whole window fails, padded roi passes") {
    Window roi{0, 8, 0, 8};
    Window win = padded_window(roi, 1.0, 1e-9);
    PointSet ps = sample_poisson(win, 1.0, 31);
    Tessellation t = build_tessellation(ps);
    CHECK(check_padding_valid(t, roi));
    CHECK(!check_padding_valid(t, win));
}

TEST_CASE("resampling until valid succeeds quickly") {
    Window roi{0, 6, 0, 6};
    Window win = padded_window(roi, 1.0, 1e-9);
    int ok = 0;
    for (uint64_t s = 0; s < 50; ++s)
        ok += check_padding_valid(build_tessellation(sample_poisson(win, 1.0, s)), roi);
    CHECK(ok == 50);
}

TEST_CASE("tessellation build is deterministic") {
    PointSet ps = sample_poisson({0, 10, 0, 10}, 1.0, 77);
    Tessellation a = build_tessellation(ps), b = build_tessellation(ps);
    REQUIRE(a.adj == b.adj);
    REQUIRE(a.cells.size() == b.cells.size());
    for (size_t i = 0; i < a.cells.size(); ++i) {
        REQUIRE(a.cells[i].v.size() == b.cells[i].v.size());
        for (size_t k = 0; k < a.cells[i].v.size(); ++k) {
            CHECK(a.cells[i].v[k].x == b.cells[i].v[k].x);
            CHECK(a.cells[i].v[k].y == b.cells[i].v[k].y);
        }
    }
}
