#include "voroperc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <boost/polygon/voronoi.hpp>

namespace voroperc {

double dist_to_window(Vec2 p, const Window& w) {
    double dx = std::max({w.x0 - p.x, 0.0, p.x - w.x1});
    double dy = std::max({w.y0 - p.y, 0.0, p.y - w.y1});
    return std::hypot(dx, dy);
}

double CellPoly::area() const {
    double a = 0.0;
    for (size_t k = 0; k < v.size(); ++k) {
        const Vec2& p = v[k];
        const Vec2& q = v[(k + 1) % v.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

Window CellPoly::bbox() const {
    Window b{v[0].x, v[0].x, v[0].y, v[0].y};
    for (const Vec2& p : v) {
        b.x0 = std::min(b.x0, p.x);
        b.x1 = std::max(b.x1, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

int64_t quantized(double x) { return static_cast<int64_t>(std::llround(x * kScale)); }

namespace {

double snap(double x) { return static_cast<double>(std::llround(x * kScale)) * kQuantum; }

// exact key: coordinates fit in 32 bits by construction
uint64_t grid_key(int64_t ix, int64_t iy) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(ix)) << 32) |
           static_cast<uint64_t>(static_cast<uint32_t>(iy));
}

}  // namespace

PointSet sample_poisson(const Window& window, double intensity, Rng& rng, uint64_t seed_label) {
    if (intensity <= 0.0) throw geometry_error("sample_poisson: intensity must be > 0");
    if (std::max(std::abs(window.x0), std::abs(window.x1)) > 2000.0 ||
        std::max(std::abs(window.y0), std::abs(window.y1)) > 2000.0)
        throw geometry_error("sample_poisson: window exceeds quantized coordinate range");

    PointSet ps;
    ps.seed = seed_label;
    ps.window = window;

    // Quantized coordinates must stay inside the window.
    const double lox = std::ceil(window.x0 * kScale) * kQuantum;
    const double hix = std::floor(window.x1 * kScale) * kQuantum;
    const double loy = std::ceil(window.y0 * kScale) * kQuantum;
    const double hiy = std::floor(window.y1 * kScale) * kQuantum;

    uint64_t n = rng.poisson(intensity * window.area());
    ps.points.reserve(n);
    std::unordered_set<uint64_t> seen;
    seen.reserve(2 * n);
    for (uint64_t k = 0; k < n; ++k) {
        for (;;) {
            Vec2 p{std::clamp(snap(rng.uniform(window.x0, window.x1)), lox, hix),
                   std::clamp(snap(rng.uniform(window.y0, window.y1)), loy, hiy)};
            if (seen.insert(grid_key(quantized(p.x), quantized(p.y))).second) {
                ps.points.push_back(p);
                break;
            }
        }
    }
    return ps;
}

PointSet sample_poisson(const Window& window, double intensity, uint64_t seed) {
    Rng rng(seed, stream::kPoissonPoints, 0);
    return sample_poisson(window, intensity, rng, seed);
}

namespace {

// Sutherland-Hodgman clip of a convex CCW polygon against {u : dot(u,n) <= c},
// propagating the neighbor tag of each edge; the newly created edge gets
// `tag`. Degenerate (near zero-length) edges are merged away.
void clip_halfplane(CellPoly& poly, Vec2 n, double c, int tag) {
    const size_t m = poly.v.size();
    if (m == 0) return;
    CellPoly out;
    out.v.reserve(m + 1);
    out.neighbor.reserve(m + 1);
    for (size_t k = 0; k < m; ++k) {
        const Vec2 a = poly.v[k];
        const Vec2 b = poly.v[(k + 1) % m];
        const double fa = dot(a, n) - c;
        const double fb = dot(b, n) - c;
        if (fa <= 0.0) {
            out.v.push_back(a);
            out.neighbor.push_back(poly.neighbor[k]);
            if (fb > 0.0) {
                double t = fa / (fa - fb);
                out.v.push_back(a + t * (b - a));
                out.neighbor.push_back(tag);
            }
        } else if (fb <= 0.0) {
            double t = fa / (fa - fb);
            out.v.push_back(a + t * (b - a));
            out.neighbor.push_back(poly.neighbor[k]);
        }
    }
    // Merge duplicate consecutive vertices (the outgoing edge tag wins).
    CellPoly merged;
    const size_t mm = out.v.size();
    for (size_t k = 0; k < mm; ++k) {
        const Vec2 cur = out.v[k];
        const Vec2 nxt = out.v[(k + 1) % mm];
        if (dist2(cur, nxt) < 1e-24) continue;
        merged.v.push_back(cur);
        merged.neighbor.push_back(out.neighbor[k]);
    }
    poly = std::move(merged);
}

CellPoly window_poly(const Window& w) {
    CellPoly p;
    p.v = {{w.x0, w.y0}, {w.x1, w.y0}, {w.x1, w.y1}, {w.x0, w.y1}};
    p.neighbor = {-1, -1, -1, -1};
    return p;
}

}  // namespace

bool Tessellation::adjacent(int i, int j) const {
    return std::binary_search(adj[i].begin(), adj[i].end(), j);
}

Tessellation build_tessellation(const PointSet& pts) {
    const size_t n = pts.size();
    if (n == 0) throw geometry_error("build_tessellation: empty point set");

    Tessellation t;
    t.pts = pts;
    t.adj.resize(n);
    t.cells.resize(n);

    std::vector<boost::polygon::point_data<int32_t>> ipts;
    ipts.reserve(n);
    std::unordered_set<uint64_t> seen;
    seen.reserve(2 * n);
    for (const Vec2& p : pts.points) {
        int64_t ix = quantized(p.x), iy = quantized(p.y);
        if (std::abs(ix) >= (1LL << 31) || std::abs(iy) >= (1LL << 31))
            throw geometry_error("build_tessellation: coordinate out of range");
        if (!seen.insert(grid_key(ix, iy)).second)
            throw geometry_error("build_tessellation: duplicate points");
        ipts.emplace_back(static_cast<int32_t>(ix), static_cast<int32_t>(iy));
    }

    boost::polygon::voronoi_diagram<double> vd;
    boost::polygon::construct_voronoi(ipts.begin(), ipts.end(), &vd);

    // Candidate Delaunay neighbors per cell (exact topology from the builder).
    std::vector<std::vector<int>> cand(n);
    for (const auto& cell : vd.cells()) {
        int i = static_cast<int>(cell.source_index());
        const auto* start = cell.incident_edge();
        if (!start) continue;
        const auto* e = start;
        do {
            if (e->is_primary()) cand[i].push_back(static_cast<int>(e->twin()->cell()->source_index()));
            e = e->next();
        } while (e != start);
        std::sort(cand[i].begin(), cand[i].end());
        cand[i].erase(std::unique(cand[i].begin(), cand[i].end()), cand[i].end());
    }

    // Cells: interior cells are read off the diagram directly (their
    // Voronoi vertices are the polygon); cells reaching the window frame
    // fall back to clipping the window by every neighbor bisector. The
    // full-plane cell is the intersection of the Delaunay-neighbor
    // half-planes, so no other points can contribute an edge.
    std::vector<uint8_t> need_clip(n, 1);
    for (const auto& cell : vd.cells()) {
        int i = static_cast<int>(cell.source_index());
        const auto* start = cell.incident_edge();
        if (!start) continue;
        CellPoly poly;
        bool ok = true;
        const auto* e = start;
        do {
            if (!e->is_finite()) {
                ok = false;
                break;
            }
            Vec2 v{e->vertex0()->x() / kScale, e->vertex0()->y() / kScale};
            if (v.x <= pts.window.x0 || v.x >= pts.window.x1 || v.y <= pts.window.y0 ||
                v.y >= pts.window.y1) {
                ok = false;
                break;
            }
            if (poly.v.empty() || dist2(poly.v.back(), v) > 1e-24) {
                poly.v.push_back(v);
                poly.neighbor.push_back(static_cast<int>(e->twin()->cell()->source_index()));
            } else if (!poly.neighbor.empty()) {
                poly.neighbor.back() = static_cast<int>(e->twin()->cell()->source_index());
            }
            e = e->next();
        } while (e != start);
        if (!ok || poly.v.size() < 3) continue;
        if (dist2(poly.v.front(), poly.v.back()) < 1e-24) {
            poly.v.pop_back();
            poly.neighbor.pop_back();
        }
        if (poly.v.size() < 3) continue;
        t.cells[i] = std::move(poly);
        need_clip[i] = 0;
    }
    for (size_t i = 0; i < n; ++i) {
        if (!need_clip[i]) continue;
        CellPoly poly = window_poly(pts.window);
        const Vec2 pi = pts.points[i];
        for (int j : cand[i]) {
            const Vec2 pj = pts.points[j];
            Vec2 nrm = pj - pi;
            double c = 0.5 * (norm2(pj) - norm2(pi));
            clip_halfplane(poly, nrm, c, j);
        }
        t.cells[i] = std::move(poly);
    }

    // Adjacency = positive-length shared edge of the clipped cells, required
    // mutually so the relation is exactly symmetric.
    std::vector<std::vector<int>> listed(n);
    for (size_t i = 0; i < n; ++i) {
        const CellPoly& p = t.cells[i];
        for (size_t k = 0; k < p.v.size(); ++k) {
            int j = p.neighbor[k];
            if (j < 0) continue;
            if (dist2(p.v[k], p.v[(k + 1) % p.v.size()]) > 1e-24) listed[i].push_back(j);
        }
        std::sort(listed[i].begin(), listed[i].end());
        listed[i].erase(std::unique(listed[i].begin(), listed[i].end()), listed[i].end());
    }
    for (size_t i = 0; i < n; ++i)
        for (int j : listed[i])
            if (static_cast<size_t>(j) > i &&
                std::binary_search(listed[j].begin(), listed[j].end(), static_cast<int>(i))) {
                t.adj[i].push_back(j);
                t.adj[j].push_back(static_cast<int>(i));
            }
    for (auto& a : t.adj) std::sort(a.begin(), a.end());

    // Circumdisks: one finite Voronoi vertex per Delaunay triangle (a single
    // vertex with >3 incident cells on cocircular degeneracies).
    for (const auto& v : vd.vertices()) {
        Circumdisk d;
        d.center = {v.x() / kScale, v.y() / kScale};
        const auto* start = v.incident_edge();
        const auto* e = start;
        do {
            d.sites.push_back(static_cast<int>(e->cell()->source_index()));
            e = e->rot_next();
        } while (e != start);
        std::sort(d.sites.begin(), d.sites.end());
        d.sites.erase(std::unique(d.sites.begin(), d.sites.end()), d.sites.end());
        d.radius = std::sqrt(dist2(d.center, pts.points[d.sites[0]]));
        t.disks.push_back(std::move(d));
    }

    t.cell_bbox.reserve(n);
    for (const auto& c : t.cells) t.cell_bbox.push_back(c.bbox());
    return t;
}

int locate(Vec2 u, const Tessellation& tess) {
    if (tess.size() == 0) throw geometry_error("locate: no cells");
    int cur = 0;
    double dcur = dist2(u, tess.pts.points[0]);
    for (;;) {
        int best = cur;
        double dbest = dcur;
        for (int j : tess.adj[cur]) {
            double dj = dist2(u, tess.pts.points[j]);
            if (dj < dbest || (dj == dbest && j < best)) {
                best = j;
                dbest = dj;
            }
        }
        if (best == cur) return cur;
        cur = best;
        dcur = dbest;
    }
}

double padded_margin(double roi_w, double roi_h, double intensity, double failure_prob) {
    if (!(failure_prob > 0.0 && failure_prob < 1.0))
        throw geometry_error("padded_margin: failure_prob must be in (0,1)");
    const double s = 0.5;                  // covering grid spacing
    const double slack = s / std::sqrt(2.0);
    auto log_bound = [&](double m) {
        double nx = std::ceil((roi_w + m) / s) + 1.0;
        double ny = std::ceil((roi_h + m) / s) + 1.0;
        double r = m / 2.0 - slack;
        if (r <= 0.0) return 1.0;  // bound vacuous
        return std::log(nx * ny) - intensity * std::numbers::pi * r * r;
    };
    double lo = 2.0 * slack, hi = 8.0;
    while (log_bound(hi) > std::log(failure_prob)) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (log_bound(mid) > std::log(failure_prob))
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

Window padded_window(const Window& roi, double intensity, double failure_prob) {
    return roi.inflated(padded_margin(roi.width(), roi.height(), intensity, failure_prob));
}

double default_margin(const Window& roi) {
    return std::max(6.0, padded_margin(roi.width(), roi.height(), 1.0, 1e-9));
}

namespace {

using i128 = __int128;

int sign_of(i128 x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

}  // namespace

int orient_exact(Vec2 a, Vec2 b, Vec2 c) {
    i128 bax = quantized(b.x) - quantized(a.x), bay = quantized(b.y) - quantized(a.y);
    i128 cax = quantized(c.x) - quantized(a.x), cay = quantized(c.y) - quantized(a.y);
    return sign_of(bax * cay - bay * cax);
}

int in_circle_exact(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    // Lifted determinant; coordinates must stay below ~2^29 in grid units
    // for the products to fit in 128 bits (window |coord| <= 500).
    i128 adx = quantized(a.x) - quantized(d.x), ady = quantized(a.y) - quantized(d.y);
    i128 bdx = quantized(b.x) - quantized(d.x), bdy = quantized(b.y) - quantized(d.y);
    i128 cdx = quantized(c.x) - quantized(d.x), cdy = quantized(c.y) - quantized(d.y);
    i128 aq = adx * adx + ady * ady;
    i128 bq = bdx * bdx + bdy * bdy;
    i128 cq = cdx * cdx + cdy * cdy;
    i128 det = adx * (bdy * cq - cdy * bq) - ady * (bdx * cq - cdx * bq) + aq * (bdx * cdy - cdx * bdy);
    return sign_of(det);
}

namespace {

// Andrew monotone chain on quantized coords; exact orientation.
std::vector<int> convex_hull(const PointSet& pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int i, int j) {
        const Vec2 &p = pts.points[i], &q = pts.points[j];
        return p.x < q.x || (p.x == q.x && p.y < q.y);
    });
    auto build = [&](auto begin, auto end) {
        std::vector<int> h;
        for (auto it = begin; it != end; ++it) {
            while (h.size() >= 2 &&
                   orient_exact(pts.points[h[h.size() - 2]], pts.points[h.back()], pts.points[*it]) <= 0)
                h.pop_back();
            h.push_back(*it);
        }
        return h;
    };
    std::vector<int> lower = build(idx.begin(), idx.end());
    std::vector<int> upper = build(idx.rbegin(), idx.rend());
    lower.pop_back();
    upper.pop_back();
    lower.insert(lower.end(), upper.begin(), upper.end());
    return lower;
}

}  // namespace

bool check_padding_valid(const Tessellation& tess, const Window& roi) {
    if (!tess.window().contains(roi)) throw geometry_error("check_padding_valid: roi not in window");
    if (tess.size() < 3) return false;

    const Window& win = tess.window();
    for (const Circumdisk& d : tess.disks) {
        if (dist_to_window(d.center, roi) > d.radius) continue;  // disk misses roi
        if (d.center.x - d.radius < win.x0 || d.center.x + d.radius > win.x1 ||
            d.center.y - d.radius < win.y0 || d.center.y + d.radius > win.y1)
            return false;
    }

    std::vector<int> hull = convex_hull(tess.pts);
    if (hull.size() < 3) return false;
    const Vec2 corners[4] = {{roi.x0, roi.y0}, {roi.x1, roi.y0}, {roi.x1, roi.y1}, {roi.x0, roi.y1}};
    for (const Vec2& c : corners)
        for (size_t k = 0; k < hull.size(); ++k)
            if (orient_exact(tess.pts.points[hull[k]], tess.pts.points[hull[(k + 1) % hull.size()]], c) < 0)
                return false;
    return true;
}

}  // namespace voroperc
