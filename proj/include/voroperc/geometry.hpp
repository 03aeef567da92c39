#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "voroperc/rng.hpp"

namespace voroperc {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double dist2(Vec2 a, Vec2 b) { return norm2(a - b); }
inline double sup_norm(Vec2 a) { return std::max(std::abs(a.x), std::abs(a.y)); }

// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Window {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool contains(const Window& w) const {
        return w.x0 >= x0 && w.x1 <= x1 && w.y0 >= y0 && w.y1 <= y1;
    }
    Window inflated(double m) const { return {x0 - m, x1 + m, y0 - m, y1 + m}; }

    // Square box B(c,r) = c + [-r,r]^2 (sup-norm ball).
    static Window box(Vec2 c, double r) { return {c.x - r, c.x + r, c.y - r, c.y + r}; }
};

// Euclidean distance from p to the rectangle (0 inside).
double dist_to_window(Vec2 p, const Window& w);

// Point coordinates are quantized to multiples of kQuantum so that the
// tessellation can be built on exact integer coordinates. kScale * |coord|
// must stay below 2^31 for the Voronoi builder, so |coord| <= ~2000.
constexpr double kQuantum = 0x1.0p-20;
constexpr double kScale = 0x1.0p20;

struct PointSet {
    std::vector<Vec2> points;  // every coordinate an exact multiple of kQuantum
    uint64_t seed = 0;
    Window window;

    size_t size() const { return points.size(); }
};

// Poisson(intensity * area) many i.i.d. uniform points, quantized; duplicate
// grid sites are redrawn so points are pairwise distinct. Deterministic in
// (window, intensity, seed).
PointSet sample_poisson(const Window& window, double intensity, uint64_t seed);
PointSet sample_poisson(const Window& window, double intensity, Rng& rng, uint64_t seed_label);

// Convex cell polygon, CCW. edge k runs from v[k] to v[(k+1) % n];
// neighbor[k] is the point index across that edge, or -1 on the window frame.
struct CellPoly {
    std::vector<Vec2> v;
    std::vector<int> neighbor;

    double area() const;
    Window bbox() const;
};

struct Circumdisk {
    Vec2 center;
    double radius = 0.0;
    std::vector<int> sites;  // >= 3; more on cocircular degeneracies
};

// Delaunay adjacency + window-clipped Voronoi cells of a PointSet.
struct Tessellation {
    PointSet pts;
    std::vector<std::vector<int>> adj;  // sorted; symmetric; positive-length shared edges only
    std::vector<CellPoly> cells;
    std::vector<Circumdisk> disks;      // one per Delaunay triangle (merged when cocircular)
    std::vector<Window> cell_bbox;

    size_t size() const { return pts.size(); }
    const Window& window() const { return pts.window; }
    bool adjacent(int i, int j) const;
};

// Builds adjacency from the Voronoi diagram of the points (exact integer
// predicates inside the builder) and cells by half-plane clipping of the
// window against each Delaunay neighbor's bisector.
Tessellation build_tessellation(const PointSet& pts);

// Index of the nearest point to u (ties by lowest index). Greedy descent on
// the Delaunay graph.
int locate(Vec2 u, const Tessellation& tess);

// Margin solving the documented union bound: if the tessellation restricted
// to roi differs from the infinite-volume one, there is a point-free disk of
// radius m/2 centered in roi inflated by m/2. Covering that region with a
// grid of spacing s = 1/2 and shrinking to the grid point,
//   P[corrupted] <= N(m) * exp(-intensity * pi * (m/2 - s/sqrt(2))^2),
// which refines the ideal empty-ball rate exp(-pi m^2/4) by the covering
// slack. Returns the smallest m with the bound <= failure_prob.
double padded_margin(double roi_w, double roi_h, double intensity, double failure_prob);

Window padded_window(const Window& roi, double intensity, double failure_prob);

// Default margin used by the estimators: failure_prob = 1e-9, floor 6.
double default_margin(const Window& roi);

// True iff every Delaunay circumdisk that intersects roi lies entirely
// inside the sampling window and roi is covered by the convex hull of the
// points; certifies that events measured inside roi agree with the
// infinite-volume tessellation.
bool check_padding_valid(const Tessellation& tess, const Window& roi);

// Exact predicates on the quantized integer grid (used by invariant tests).
// in_circle > 0 iff d strictly inside the circumcircle of CCW triangle abc.
int64_t quantized(double x);
int orient_exact(Vec2 a, Vec2 b, Vec2 c);
int in_circle_exact(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

// JSON round-trip (documented schema, see README).
std::string pointset_to_json(const PointSet& ps);
PointSet pointset_from_json(const std::string& text);
std::string tessellation_to_json(const Tessellation& t);

struct geometry_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace voroperc
