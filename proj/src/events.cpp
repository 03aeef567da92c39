#include "voroperc/events.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace voroperc {

namespace {

constexpr double kAreaTol = 1e-12;
constexpr double kLenTol = 1e-9;
constexpr double kTouchTol = 1e-9;

using Poly = std::vector<Vec2>;

// Keep {u : dot(u,n) <= c}; convex CCW in, convex CCW out.
Poly clip_hp(const Poly& in, Vec2 n, double c) {
    Poly out;
    const size_t m = in.size();
    if (m == 0) return out;
    out.reserve(m + 1);
    for (size_t k = 0; k < m; ++k) {
        Vec2 a = in[k], b = in[(k + 1) % m];
        double fa = dot(a, n) - c, fb = dot(b, n) - c;
        if (fa <= 0.0) {
            out.push_back(a);
            if (fb > 0.0) out.push_back(a + (fa / (fa - fb)) * (b - a));
        } else if (fb <= 0.0) {
            out.push_back(a + (fa / (fa - fb)) * (b - a));
        }
    }
    return out;
}

Poly clip_box(Poly p, const Window& w) {
    p = clip_hp(std::move(p), {1, 0}, w.x1);
    p = clip_hp(std::move(p), {-1, 0}, -w.x0);
    p = clip_hp(std::move(p), {0, 1}, w.y1);
    p = clip_hp(std::move(p), {0, -1}, -w.y0);
    return p;
}

double poly_area(const Poly& p) {
    double a = 0.0;
    for (size_t k = 0; k < p.size(); ++k) {
        const Vec2 &u = p[k], &v = p[(k + 1) % p.size()];
        a += u.x * v.y - v.x * u.y;
    }
    return 0.5 * a;
}

// At least two distinct vertices: contact of positive length.
bool poly_has_length(const Poly& p) {
    for (size_t k = 1; k < p.size(); ++k)
        if (dist2(p[k], p[0]) > kLenTol * kLenTol) return true;
    return false;
}

struct Interval {
    double a = 1.0, b = 0.0;
    bool empty() const { return b <= a; }
    double len() const { return empty() ? 0.0 : b - a; }
};

// Parameter interval of segment p + t(q-p), t in [0,1], inside the box.
Interval seg_in_box(Vec2 p, Vec2 q, const Window& w) {
    Interval iv{0.0, 1.0};
    auto cut = [&](double f0, double f1) {  // keep f <= 0, f linear in t
        if (f0 <= 0.0 && f1 <= 0.0) return;
        if (f0 > 0.0 && f1 > 0.0) {
            iv = {1.0, 0.0};
            return;
        }
        double t = f0 / (f0 - f1);
        if (f0 > 0.0)
            iv.a = std::max(iv.a, t);
        else
            iv.b = std::min(iv.b, t);
    };
    cut(p.x - w.x1, q.x - w.x1);
    cut(w.x0 - p.x, w.x0 - q.x);
    cut(p.y - w.y1, q.y - w.y1);
    cut(w.y0 - p.y, w.y0 - q.y);
    return iv;
}

Interval seg_in_hp(Vec2 p, Vec2 q, Vec2 n, double c, Interval iv) {
    double f0 = dot(p, n) - c, f1 = dot(q, n) - c;
    if (f0 <= 0.0 && f1 <= 0.0) return iv;
    if (f0 > 0.0 && f1 > 0.0) return {1.0, 0.0};
    double t = f0 / (f0 - f1);
    if (f0 > 0.0)
        iv.a = std::max(iv.a, t);
    else
        iv.b = std::min(iv.b, t);
    return iv;
}

double seg_seg_dist2(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto pt_seg = [](Vec2 p, Vec2 u, Vec2 v) {
        Vec2 w = v - u;
        double l2 = norm2(w);
        double t = l2 > 0 ? std::clamp(dot(p - u, w) / l2, 0.0, 1.0) : 0.0;
        return dist2(p, u + t * w);
    };
    auto cross = [](Vec2 u, Vec2 v) { return u.x * v.y - u.y * v.x; };
    double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return 0.0;  // proper crossing
    return std::min({pt_seg(a, c, d), pt_seg(b, c, d), pt_seg(c, a, b), pt_seg(d, a, b)});
}

double poly_box_dist(const Poly& p, const Window& w) {
    for (const Vec2& v : p)
        if (w.contains(v)) return 0.0;
    Poly bx = {{w.x0, w.y0}, {w.x1, w.y0}, {w.x1, w.y1}, {w.x0, w.y1}};
    // box corner inside polygon?
    if (!p.empty()) {
        bool inside = true;
        for (size_t k = 0; k < p.size() && inside; ++k) {
            Vec2 e = p[(k + 1) % p.size()] - p[k];
            Vec2 d = bx[0] - p[k];
            if (e.x * d.y - e.y * d.x < 0) inside = false;
        }
        if (inside && p.size() >= 3) return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < p.size(); ++k)
        for (size_t l = 0; l < 4; ++l)
            best = std::min(best, seg_seg_dist2(p[k], p[(k + 1) % p.size()], bx[l], bx[(l + 1) % 4]));
    return std::sqrt(best);
}

double pt_box_dist(Vec2 p, const Window& w) { return dist_to_window(p, w); }

bool point_in_poly(Vec2 u, const Poly& p) {
    const size_t m = p.size();
    if (m < 3) return false;
    for (size_t k = 0; k < m; ++k) {
        Vec2 a = p[k], b = p[(k + 1) % m];
        if ((b.x - a.x) * (u.y - a.y) - (b.y - a.y) * (u.x - a.x) < -1e-12) return false;
    }
    return true;
}

double max_sup_norm(const Poly& p, Vec2 c) {
    double m = 0.0;
    for (const Vec2& v : p) m = std::max(m, sup_norm(v - c));
    return m;
}

// ---------------------------------------------------------------------------
// Union-find scratch.
// ---------------------------------------------------------------------------

struct UF {
    std::vector<int> parent;
    explicit UF(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// ---------------------------------------------------------------------------
// Region description shared by the graph builders: outer clip (box and
// optional half-plane constraints), optional subtracted hole box.
// ---------------------------------------------------------------------------

struct HalfPlane {
    Vec2 n;
    double c;
};

struct RegionSpec {
    Window outer;
    std::vector<HalfPlane> hps;  // e.g. upper half-plane, quarter-plane
    std::optional<Window> hole;  // open inner box removed from the region

    Poly clip_outer(Poly p) const {
        p = clip_box(std::move(p), outer);
        for (const auto& h : hps) p = clip_hp(std::move(p), h.n, h.c);
        return p;
    }
    double area_in(const Poly& cell) const {
        Poly p = clip_outer(cell);
        if (p.size() < 3) return 0.0;
        double a = poly_area(p);
        if (hole) {
            Poly q = clip_box(std::move(p), *hole);
            if (q.size() >= 3) a -= poly_area(q);
        }
        return a;
    }
    double seg_len_in(Vec2 p, Vec2 q) const {
        Interval iv = seg_in_box(p, q, outer);
        for (const auto& h : hps) iv = seg_in_hp(p, q, h.n, h.c, iv);
        if (iv.empty()) return 0.0;
        double L = iv.len();
        if (hole) {
            Interval hv = seg_in_box(p, q, *hole);
            hv.a = std::max(hv.a, iv.a);
            hv.b = std::min(hv.b, iv.b);
            L -= hv.len();
        }
        return L * std::sqrt(dist2(p, q));
    }
};

// ---------------------------------------------------------------------------
// Inner-boundary walk. The walk path is the part of the square boundary
// B(center, rho) inside the region's half-planes, parameterized by arc
// length; full-plane walks are cyclic.
// ---------------------------------------------------------------------------

struct WalkPath {
    std::vector<std::pair<Vec2, Vec2>> segs;
    std::vector<double> t0;  // cumulative parameter at segment start
    double total = 0.0;
    bool cyclic = true;

    Vec2 point_at(double t) const {
        if (cyclic) {
            t = std::fmod(t, total);
            if (t < 0) t += total;
        } else {
            t = std::clamp(t, 0.0, total);
        }
        for (size_t k = 0; k < segs.size(); ++k) {
            double len = (k + 1 < segs.size() ? t0[k + 1] : total) - t0[k];
            if (t <= t0[k] + len || k + 1 == segs.size()) {
                double loc = len > 0 ? (t - t0[k]) / len : 0.0;
                return segs[k].first + loc * (segs[k].second - segs[k].first);
            }
        }
        return segs.back().second;
    }

    double param_of(Vec2 u) const {
        // parameter of the path point nearest to u
        double best = std::numeric_limits<double>::infinity();
        double arg = 0.0;
        for (size_t k = 0; k < segs.size(); ++k) {
            Vec2 a = segs[k].first, b = segs[k].second;
            Vec2 w = b - a;
            double l2 = norm2(w);
            double t = l2 > 0 ? std::clamp(dot(u - a, w) / l2, 0.0, 1.0) : 0.0;
            double d = dist2(u, a + t * w);
            if (d < best) {
                best = d;
                arg = t0[k] + t * std::sqrt(l2);
            }
        }
        return arg;
    }
};

WalkPath make_walk(Vec2 c, double rho, ArmRegion region) {
    WalkPath w;
    Vec2 bl{c.x - rho, c.y - rho}, br{c.x + rho, c.y - rho};
    Vec2 tr{c.x + rho, c.y + rho}, tl{c.x - rho, c.y + rho};
    switch (region) {
        case ArmRegion::FullPlane:
            w.segs = {{bl, br}, {br, tr}, {tr, tl}, {tl, bl}};
            w.cyclic = true;
            break;
        case ArmRegion::HalfPlane:  // y >= c.y, walked CCW
            w.segs = {{{c.x + rho, c.y}, tr}, {tr, tl}, {tl, {c.x - rho, c.y}}};
            w.cyclic = false;
            break;
        case ArmRegion::QuarterPlane:  // x >= c.x, y >= c.y
            w.segs = {{{c.x + rho, c.y}, tr}, {tr, {c.x, c.y + rho}}};
            w.cyclic = false;
            break;
    }
    double t = 0.0;
    for (auto& s : w.segs) {
        w.t0.push_back(t);
        t += std::sqrt(dist2(s.first, s.second));
    }
    w.total = t;
    return w;
}

// Parameter interval of walk segment k inside a convex cell polygon.
Interval seg_in_poly(Vec2 p, Vec2 q, const Poly& cell) {
    Interval iv{0.0, 1.0};
    const size_t m = cell.size();
    if (m < 3) return {1.0, 0.0};
    for (size_t k = 0; k < m && !iv.empty(); ++k) {
        Vec2 a = cell[k], b = cell[(k + 1) % m];
        // CCW polygon: outward normal of edge a->b; keep dot(u,n) <= dot(a,n)
        Vec2 n{b.y - a.y, a.x - b.x};
        iv = seg_in_hp(p, q, n, dot(a, n), iv);
    }
    return iv;
}

std::vector<HalfPlane> region_halfplanes(Vec2 c, ArmRegion region) {
    std::vector<HalfPlane> hps;
    if (region == ArmRegion::HalfPlane || region == ArmRegion::QuarterPlane)
        hps.push_back({{0, -1}, -c.y});  // y >= c.y
    if (region == ArmRegion::QuarterPlane) hps.push_back({{-1, 0}, -c.x});  // x >= c.x
    return hps;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configurations and cluster labels.
// ---------------------------------------------------------------------------

ColoredConfiguration make_configuration(std::shared_ptr<const Tessellation> tess, Rng& rng,
                                        double p) {
    ColoredConfiguration cfg;
    cfg.tess = std::move(tess);
    cfg.p = p;
    cfg.colors.resize(cfg.tess->size());
    for (auto& c : cfg.colors) c = rng.bernoulli(p) ? kBlack : kWhite;
    return cfg;
}

ClusterLabeling cluster_labels(const ColoredConfiguration& cfg) {
    const Tessellation& t = cfg.t();
    UF uf(static_cast<int>(t.size()));
    for (size_t i = 0; i < t.size(); ++i)
        for (int j : t.adj[i])
            if (j > static_cast<int>(i) && cfg.colors[i] == cfg.colors[j])
                uf.unite(static_cast<int>(i), j);
    ClusterLabeling lab;
    lab.label.resize(t.size());
    for (size_t i = 0; i < t.size(); ++i) lab.label[i] = uf.find(static_cast<int>(i));
    return lab;
}

// ---------------------------------------------------------------------------
// Crossing.
// ---------------------------------------------------------------------------

CrossingContext::CrossingContext(const Tessellation& tess, const Window& rect, CrossDir dir) {
    RegionSpec reg{rect, {}, std::nullopt};
    std::vector<int> slot_of(tess.size(), -1);
    for (size_t i = 0; i < tess.size(); ++i) {
        const Window& bb = tess.cell_bbox[i];
        if (bb.x1 < rect.x0 || bb.x0 > rect.x1 || bb.y1 < rect.y0 || bb.y0 > rect.y1) continue;
        if (reg.area_in(tess.cells[i].v) <= kAreaTol) continue;
        slot_of[i] = static_cast<int>(g_.cells.size());
        g_.cells.push_back(static_cast<int>(i));
    }
    g_.touch_a.assign(g_.cells.size(), 0);
    g_.touch_b.assign(g_.cells.size(), 0);
    for (size_t s = 0; s < g_.cells.size(); ++s) {
        int i = g_.cells[s];
        Poly p = clip_box(tess.cells[i].v, rect);
        double loA = std::numeric_limits<double>::infinity(), hiB = -loA;
        for (const Vec2& v : p) {
            double c = (dir == CrossDir::LeftRight) ? v.x : v.y;
            loA = std::min(loA, c);
            hiB = std::max(hiB, c);
        }
        double a0 = (dir == CrossDir::LeftRight) ? rect.x0 : rect.y0;
        double b0 = (dir == CrossDir::LeftRight) ? rect.x1 : rect.y1;
        g_.touch_a[s] = loA <= a0 + kTouchTol;
        g_.touch_b[s] = hiB >= b0 - kTouchTol;
        const CellPoly& cp = tess.cells[i];
        for (size_t k = 0; k < cp.v.size(); ++k) {
            int j = cp.neighbor[k];
            if (j < 0 || j < i || slot_of[j] < 0) continue;
            if (reg.seg_len_in(cp.v[k], cp.v[(k + 1) % cp.v.size()]) > kLenTol)
                g_.edges.emplace_back(static_cast<int>(s), slot_of[j]);
        }
    }
}

bool CrossingContext::eval(const std::vector<int8_t>& colors, int8_t color) const {
    const int n = g_.slot_count();
    const int L = n, R = n + 1;
    UF uf(n + 2);
    for (int s = 0; s < n; ++s) {
        if (colors[g_.cells[s]] != color) continue;
        if (g_.touch_a[s]) uf.unite(s, L);
        if (g_.touch_b[s]) uf.unite(s, R);
    }
    for (auto [a, b] : g_.edges)
        if (colors[g_.cells[a]] == color && colors[g_.cells[b]] == color) uf.unite(a, b);
    return uf.find(L) == uf.find(R);
}

namespace {

void require_certified(const ColoredConfiguration& cfg, const Window& region, const char* what) {
    if (!cfg.certified || !cfg.certified_roi.contains(region))
        throw event_error(std::string("uncertified region: ") + what);
}

}  // namespace

bool crossing(const ColoredConfiguration& cfg, const Window& rect, CrossDir dir, int8_t color) {
    require_certified(cfg, rect, "crossing");
    CrossingContext ctx(cfg.t(), rect, dir);
    return ctx.eval(cfg.colors, color);
}

// ---------------------------------------------------------------------------
// Arm events.
// ---------------------------------------------------------------------------

ArmSpec ArmSpec::alternating(int j, ArmRegion region, int8_t first) {
    ArmSpec a;
    a.j = j;
    a.region = region;
    for (int k = 0; k < j; ++k) a.pattern.push_back(k % 2 == 0 ? first : static_cast<int8_t>(-first));
    return a;
}

namespace {

// Validates the supported pattern shapes; returns the wrap color for cyclic
// patterns closing on an equal pair, 0 otherwise.
int8_t validate_pattern(const ArmSpec& arms, bool cyclic) {
    const auto& p = arms.pattern;
    if (static_cast<int>(p.size()) != arms.j || arms.j < 1)
        throw event_error("arm pattern length must equal j");
    for (int8_t c : p)
        if (c != kBlack && c != kWhite) throw event_error("arm pattern colors must be +-1");
    if (arms.j == 1) return cyclic ? p[0] : 0;
    for (int k = 0; k + 1 < arms.j; ++k)
        if (p[k] == p[k + 1]) throw event_error("unsupported arm pattern: equal adjacent colors");
    if (cyclic && p.front() == p.back()) return p.front();
    if (!cyclic) return 0;
    if (arms.j % 2 != 0) throw event_error("unsupported arm pattern: odd cyclic without wrap pair");
    return 0;
}

struct ArmBuild {
    EventGraph g;
    // a free corridor crosses the annulus: outside cells can carry any
    // pattern regardless of the conditioned colors
    bool corridor = false;
};

// Samples a shared edge for free territory beyond the wildcard bands and
// joins the corridor graph when found. On a shared Voronoi edge the nearest
// site distance equals the distance to either incident site.
template <typename DFree, typename Beyond>
void corridor_scan(UF& corridor_uf, const RegionSpec& reg, const AnnulusSpec& ann, Vec2 c,
                   const Window& inner, Vec2 site, DFree&& d_free, Beyond&& beyond_bands,
                   size_t s, int sj, Vec2 a, Vec2 b) {
    Interval iv = seg_in_box(a, b, Window::box(c, ann.R));
    for (const auto& h : reg.hps) iv = seg_in_hp(a, b, h.n, h.c, iv);
    if (iv.empty()) return;
    const int steps = 8;
    double seg_len = std::sqrt(dist2(a, b));
    double h = iv.len() * seg_len / steps;
    for (int st = 0; st <= steps; ++st) {
        double tt = iv.a + (iv.b - iv.a) * st / steps;
        Vec2 u = a + tt * (b - a);
        if (inner.contains(u) || !beyond_bands(u)) continue;
        if (std::sqrt(dist2(u, site)) - d_free(u) >= -2.0 * h) {
            corridor_uf.unite(static_cast<int>(s), sj);
            return;
        }
    }
}

// Shared builder for plain and hat arm graphs. `tess` is the tessellation to
// build on; `wild_in`/`wild_out` enable wildcard boundaries with strip width
// delta; `walk_rho` is the radius of the inner walk.
//
// For hat graphs, "free" points of the annulus are those closer to the
// unconditioned territory than to every conditioning site; outside cells can
// cover them with either color. The wildcard flags record which cells such
// territory touches, and `corridor` records whether it crosses the whole
// annulus (then any pattern is realizable inside the corridor).
ArmBuild build_arm_graph(const Tessellation& tess, const AnnulusSpec& ann, ArmRegion region,
                         bool wild_in, bool wild_out, double delta, double walk_rho) {
    ArmBuild out;
    EventGraph& g = out.g;
    const Vec2 c = ann.center;
    const Window outer = Window::box(c, ann.R);
    const Window inner = Window::box(c, ann.r);
    RegionSpec reg{outer, region_halfplanes(c, region), inner};

    // bounding box of the region for cheap rejection
    Window rb = outer;
    for (const auto& h : reg.hps) {
        if (h.n.x == 0 && h.n.y == -1) rb.y0 = std::max(rb.y0, -h.c);
        if (h.n.x == -1 && h.n.y == 0) rb.x0 = std::max(rb.x0, -h.c);
    }
    auto bb_hits = [&](const Window& bb) {
        return !(bb.x1 < rb.x0 || bb.x0 > rb.x1 || bb.y1 < rb.y0 || bb.y0 > rb.y1);
    };
    // bb strictly inside the region and away from the hole: participation,
    // touch flags and edge clipping are all trivial for such cells
    auto bb_interior = [&](const Window& bb) {
        if (!(bb.x0 > outer.x0 && bb.x1 < outer.x1 && bb.y0 > outer.y0 && bb.y1 < outer.y1))
            return false;
        if (!(bb.x1 < inner.x0 || bb.x0 > inner.x1 || bb.y1 < inner.y0 || bb.y0 > inner.y1))
            return false;
        for (const auto& h : reg.hps) {
            double worst = std::max(bb.x0 * h.n.x, bb.x1 * h.n.x) +
                           std::max(bb.y0 * h.n.y, bb.y1 * h.n.y);
            if (worst >= h.c) return false;
        }
        return true;
    };

    // A cell whose region restriction wraps around the inner hole is split
    // into one node per boundary arc (maximal stretch of its polygon
    // boundary outside the hole), so graph connectivity matches the
    // topology of paths confined to the annulus.
    struct CellSplit {
        std::vector<double> lo, hi;  // cyclic boundary-parameter stretches
        std::vector<Vec2> plo, phi;  // crossing positions at stretch ends
        std::vector<int> slot;
    };
    std::unordered_map<int, CellSplit> split;

    std::vector<int> slot_of(tess.size(), -1);
    std::vector<int> participants;
    std::vector<uint8_t> interior_cell(tess.size(), 0);
    for (size_t i = 0; i < tess.size(); ++i) {
        const Window& bb = tess.cell_bbox[i];
        if (!bb_hits(bb)) continue;
        bool inside = bb_interior(bb);
        if (!inside && reg.area_in(tess.cells[i].v) <= kAreaTol) continue;
        interior_cell[i] = inside;
        participants.push_back(static_cast<int>(i));
        slot_of[i] = 0;  // assigned below
    }

    // arc decomposition for hole-straddling cells
    int next_slot = 0;
    for (int i : participants) {
        const CellPoly& cp = tess.cells[i];
        const size_t m = cp.v.size();
        const Window& bb = tess.cell_bbox[i];
        bool near_hole = !(bb.x1 < inner.x0 || bb.x0 > inner.x1 || bb.y1 < inner.y0 ||
                           bb.y0 > inner.y1);
        std::vector<std::pair<double, double>> blocked;
        if (near_hole && !interior_cell[i]) {
            for (size_t k = 0; k < m; ++k) {
                Interval hv = seg_in_box(cp.v[k], cp.v[(k + 1) % m], inner);
                if (hv.len() > 1e-12) blocked.emplace_back(k + hv.a, k + hv.b);
            }
        }
        // merge cyclically adjacent blocked stretches
        std::sort(blocked.begin(), blocked.end());
        std::vector<std::pair<double, double>> merged;
        for (auto& bl : blocked) {
            if (!merged.empty() && bl.first <= merged.back().second + 1e-9)
                merged.back().second = std::max(merged.back().second, bl.second);
            else
                merged.push_back(bl);
        }
        if (merged.size() >= 2 && merged.front().first <= 1e-9 &&
            merged.back().second >= static_cast<double>(m) - 1e-9) {
            merged.front().first = merged.back().first - static_cast<double>(m);
            merged.pop_back();
        }
        if (merged.size() < 2) {
            slot_of[i] = next_slot++;
            g.cells.push_back(i);
            continue;
        }
        CellSplit cs;
        auto point_at_param = [&](double p) {
            p = std::fmod(p + static_cast<double>(m), static_cast<double>(m));
            size_t k = std::min(m - 1, static_cast<size_t>(p));
            double t = p - static_cast<double>(k);
            return cp.v[k] + t * (cp.v[(k + 1) % m] - cp.v[k]);
        };
        for (size_t b = 0; b < merged.size(); ++b) {
            double lo = merged[b].second;  // arc starts where a blocked stretch ends
            double hi = merged[(b + 1) % merged.size()].first;
            if (b + 1 == merged.size()) hi += static_cast<double>(m);
            cs.lo.push_back(lo);
            cs.hi.push_back(hi);
            cs.plo.push_back(point_at_param(lo));
            cs.phi.push_back(point_at_param(hi));
            cs.slot.push_back(next_slot++);
            g.cells.push_back(i);
        }
        slot_of[i] = cs.slot[0];
        split[i] = std::move(cs);
    }
    const size_t ns = g.cells.size();
    g.touch_a.assign(ns, 0);
    g.touch_b.assign(ns, 0);
    g.wild_a.assign(ns, 0);
    g.wild_b.assign(ns, 0);

    auto slot_at = [&](int cell, double param) -> int {
        auto it = split.find(cell);
        if (it == split.end()) return slot_of[cell];
        const CellSplit& cs = it->second;
        const double m = static_cast<double>(tess.cells[cell].v.size());
        for (size_t a = 0; a < cs.lo.size(); ++a)
            if ((param >= cs.lo[a] - 1e-9 && param <= cs.hi[a] + 1e-9) ||
                (param + m >= cs.lo[a] - 1e-9 && param + m <= cs.hi[a] + 1e-9))
                return cs.slot[a];
        return cs.slot[0];
    };
    // boundary param of u on cell's polygon edge k
    auto edge_param = [&](int cell, size_t k, Vec2 u) {
        const CellPoly& cp = tess.cells[cell];
        Vec2 a = cp.v[k], b = cp.v[(k + 1) % cp.v.size()];
        double l2 = dist2(a, b);
        double t = l2 > 0 ? std::clamp(dot(u - a, b - a) / l2, 0.0, 1.0) : 0.0;
        return static_cast<double>(k) + t;
    };
    // the edge of `cell` facing neighbor `nb`
    auto edge_facing = [&](int cell, int nb) -> int {
        const CellPoly& cp = tess.cells[cell];
        for (size_t k = 0; k < cp.neighbor.size(); ++k)
            if (cp.neighbor[k] == nb) return static_cast<int>(k);
        return -1;
    };

    WalkPath walk = make_walk(c, walk_rho, region);
    g.cyclic = walk.cyclic;

    const bool hat = wild_in || wild_out;
    auto d_free = [&](Vec2 u) {
        double d = std::numeric_limits<double>::infinity();
        if (wild_in) d = std::min(d, pt_box_dist(u, inner));
        if (wild_out) d = std::min(d, std::max(0.0, ann.R - sup_norm(u - c)));
        return d;
    };
    auto beyond_bands = [&](Vec2 u) {
        if (wild_in && pt_box_dist(u, inner) <= delta) return false;
        if (wild_out && ann.R - sup_norm(u - c) <= delta) return false;
        return true;
    };
    // cells whose bounding box sits further from both free zones than their
    // own diameter cannot contain free territory; skip the boundary scan
    auto pocket_possible = [&](const Window& bb) {
        if (!hat) return false;
        double diag = std::hypot(bb.width(), bb.height());
        Vec2 mid{0.5 * (bb.x0 + bb.x1), 0.5 * (bb.y0 + bb.y1)};
        return d_free(mid) <= diag + delta + 0.5;
    };
    auto in_region_hps = [&](Vec2 u) {
        for (const auto& h : reg.hps)
            if (dot(u, h.n) > h.c + 1e-9) return false;
        return true;
    };

    UF corridor_uf(static_cast<int>(ns));
    std::vector<uint8_t> mid_free(ns, 0);

    for (int i : participants) {
        const CellPoly& cp = tess.cells[i];
        const Window& bb = tess.cell_bbox[i];
        const int s0 = slot_of[i];
        const bool is_split = split.count(i) > 0;
        const bool deep = interior_cell[i] && !pocket_possible(bb);

        // outer touch
        if (!interior_cell[i]) {
            if (!is_split) {
                Poly q = cp.v;
                for (const auto& h : reg.hps) q = clip_hp(std::move(q), h.n, h.c);
                g.touch_b[s0] = max_sup_norm(q, c) >= ann.R - kTouchTol;
            } else {
                // per-arc outer reach from the stretch endpoints and the
                // polygon vertices they bracket
                const CellSplit& cs = split[i];
                const double m = static_cast<double>(cp.v.size());
                for (size_t a = 0; a < cs.lo.size(); ++a) {
                    bool touch = false;
                    auto consider = [&](Vec2 u) {
                        if (in_region_hps(u) && sup_norm(u - c) >= ann.R - kTouchTol) touch = true;
                    };
                    consider(cs.plo[a]);
                    consider(cs.phi[a]);
                    for (double p = std::ceil(cs.lo[a]); p < cs.hi[a]; p += 1.0)
                        consider(cp.v[static_cast<size_t>(std::fmod(p, m))]);
                    g.touch_b[cs.slot[a]] = touch;
                }
            }
        }

        // wildcard contact (hat graphs): cell-level flags applied to every
        // arc of the cell (an over-approximation in the relaxed direction)
        if (hat && !deep) {
            Poly q = cp.v;
            const Vec2 site = tess.pts.points[i];
            bool wa = wild_in && poly_box_dist(q, inner) <= delta;
            bool wb = wild_out && !q.empty() && ann.R - max_sup_norm(q, c) <= delta;
            bool pocket_in = false, pocket_out = false;
            const size_t m = q.size();
            for (size_t k = 0; k < m; ++k) {
                Vec2 a = q[k], b = q[(k + 1) % m];
                double L = std::sqrt(dist2(a, b));
                int steps = std::max(2, static_cast<int>(std::ceil(L / 0.25)));
                double h = L / steps;
                for (int st = 0; st <= steps; ++st) {
                    Vec2 u = a + (static_cast<double>(st) / steps) * (b - a);
                    if (std::sqrt(dist2(u, site)) - d_free(u) < -2.0 * h) continue;
                    if (beyond_bands(u)) {
                        for (int ss = s0; ss < s0 + (is_split ? (int)split[i].slot.size() : 1); ++ss)
                            mid_free[ss] = 1;
                    }
                    double din = wild_in ? pt_box_dist(u, inner)
                                         : std::numeric_limits<double>::infinity();
                    double dout = wild_out ? std::max(0.0, ann.R - sup_norm(u - c))
                                           : std::numeric_limits<double>::infinity();
                    if (din <= dout + 2.0 * h) pocket_in = true;
                    if (dout <= din + 2.0 * h) pocket_out = true;
                }
            }
            wa = wa || (wild_in && pocket_in);
            wb = wb || (wild_out && pocket_out);
            int slots_here = is_split ? (int)split[i].slot.size() : 1;
            for (int off = 0; off < slots_here; ++off) {
                int ss = is_split ? split[i].slot[off] : s0;
                g.wild_a[ss] = wa;
                g.wild_b[ss] = wb;
            }
        }

        // edges and their region-clipped pieces (the interface substrate)
        for (size_t k = 0; k < cp.v.size(); ++k) {
            int j = cp.neighbor[k];
            if (j < 0 || j < i || slot_of[j] < 0) continue;
            Vec2 a = cp.v[k], b = cp.v[(k + 1) % cp.v.size()];
            const bool plain_edge = interior_cell[i] && interior_cell[j];
            const int kj = edge_facing(j, i);
            if (kj < 0) continue;
            auto slot_pair = [&](Vec2 mid) {
                int sa = slot_at(i, edge_param(i, k, mid));
                int sb = slot_at(j, static_cast<size_t>(kj) >= 0
                                        ? edge_param(j, static_cast<size_t>(kj), mid)
                                        : 0.0);
                return std::make_pair(sa, sb);
            };
            if (plain_edge) {
                auto [sa, sb] = slot_pair(0.5 * (a + b));
                EdgePiece pc;
                pc.a = sa;
                pc.b = sb;
                pc.p = a;
                pc.q = b;
                if (hat) {
                    pc.wild_cut_in = (wild_in && (g.wild_a[sa] || g.wild_a[sb])) ? 1 : 0;
                    pc.wild_cut_out = (wild_out && (g.wild_b[sa] || g.wild_b[sb])) ? 1 : 0;
                }
                g.pieces.push_back(pc);
                g.edges.emplace_back(sa, sb);
                if (hat && !deep)
                    corridor_scan(corridor_uf, reg, ann, c, inner, tess.pts.points[i], d_free,
                                  beyond_bands, static_cast<size_t>(sa), sb, a, b);
                continue;
            }
            const double seg_len = std::sqrt(dist2(a, b));
            Interval iv = seg_in_box(a, b, outer);
            for (const auto& h : reg.hps) iv = seg_in_hp(a, b, h.n, h.c, iv);
            if (iv.empty()) continue;
            Interval hv = seg_in_box(a, b, inner);
            hv.a = std::max(hv.a, iv.a);
            hv.b = std::min(hv.b, iv.b);
            std::vector<Interval> subs;
            if (hv.empty()) {
                subs.push_back(iv);
            } else {
                subs.push_back({iv.a, hv.a});
                subs.push_back({hv.b, iv.b});
            }
            bool any = false;
            for (const Interval& sub : subs) {
                if (sub.len() * seg_len <= kLenTol) continue;
                any = true;
                EdgePiece pc;
                Vec2 mid = a + 0.5 * (sub.a + sub.b) * (b - a);
                auto [sa, sb] = slot_pair(mid);
                pc.a = sa;
                pc.b = sb;
                pc.p = a + sub.a * (b - a);
                pc.q = a + sub.b * (b - a);
                auto classify = [&](Vec2 u, double tpar, uint8_t& type, double& tw, int& left) {
                    type = kEndInternal;
                    if (tpar > 1e-12 && tpar < 1.0 - 1e-12) {
                        if (dist_to_window(u, inner) <= 1e-7)
                            type = kEndInner;
                        else if (ann.R - sup_norm(u - c) <= 1e-7)
                            type = kEndOuter;
                        else
                            for (const auto& h : reg.hps)
                                if (std::abs(dot(u, h.n) - h.c) <= 1e-7) type = kEndSide;
                    }
                    if (type == kEndInner) {
                        tw = walk.param_of(u);
                        Vec2 before = walk.point_at(tw - 1e-5);
                        if (point_in_poly(before, cp.v))
                            left = sa;
                        else if (point_in_poly(before, tess.cells[j].v))
                            left = sb;
                    }
                };
                classify(pc.p, sub.a, pc.type_p, pc.t_p, pc.left_p);
                classify(pc.q, sub.b, pc.type_q, pc.t_q, pc.left_q);
                if (hat) {
                    pc.wild_cut_in = (wild_in && (g.wild_a[sa] || g.wild_a[sb])) ? 1 : 0;
                    pc.wild_cut_out = (wild_out && (g.wild_b[sa] || g.wild_b[sb])) ? 1 : 0;
                }
                g.pieces.push_back(pc);
                g.edges.emplace_back(sa, sb);
            }
            if (any && hat && !deep) {
                auto [sa, sb] = slot_pair(0.5 * (a + b));
                corridor_scan(corridor_uf, reg, ann, c, inner, tess.pts.points[i], d_free,
                              beyond_bands, static_cast<size_t>(sa), sb, a, b);
            }
        }

        // walk intervals (cells meeting the walk circle only); split cells
        // assign each interval to the arc whose crossing points flank it
        double wd = walk_rho;
        if (bb.x0 <= c.x + wd && bb.x1 >= c.x - wd && bb.y0 <= c.y + wd && bb.y1 >= c.y - wd &&
            !(bb.x0 > c.x - wd && bb.x1 < c.x + wd && bb.y0 > c.y - wd && bb.y1 < c.y + wd)) {
            for (size_t k = 0; k < walk.segs.size(); ++k) {
                Interval iv = seg_in_poly(walk.segs[k].first, walk.segs[k].second, cp.v);
                if (iv.empty()) continue;
                double seg_len = std::sqrt(dist2(walk.segs[k].first, walk.segs[k].second));
                if (iv.len() * seg_len <= kLenTol) continue;
                int ss = s0;
                if (is_split) {
                    Vec2 w0 = walk.segs[k].first + iv.a * (walk.segs[k].second - walk.segs[k].first);
                    Vec2 w1 = walk.segs[k].first + iv.b * (walk.segs[k].second - walk.segs[k].first);
                    const CellSplit& cs = split[i];
                    double best = std::numeric_limits<double>::infinity();
                    for (size_t arc = 0; arc < cs.slot.size(); ++arc) {
                        double score =
                            std::min(dist2(w0, cs.plo[arc]), dist2(w0, cs.phi[arc])) +
                            std::min(dist2(w1, cs.plo[arc]), dist2(w1, cs.phi[arc]));
                        if (score < best) {
                            best = score;
                            ss = cs.slot[arc];
                        }
                    }
                }
                g.walk.push_back({walk.t0[k] + iv.a * seg_len, ss});
                g.touch_a[ss] = 1;
            }
        }
    }
    // with an inner wildcard band the walk circle sits at r + delta, so
    // crossing it is not inner contact; reaching the band (wild_a) is
    if (wild_in) g.touch_a.assign(ns, 0);

    std::sort(g.walk.begin(), g.walk.end(), [](const WalkEntry& a, const WalkEntry& b) {
        return a.t < b.t || (a.t == b.t && a.slot < b.slot);
    });

    // group piece endpoints sharing a Voronoi vertex (chains continue there)
    {
        struct End {
            Vec2 u;
            int piece, end;
        };
        std::vector<End> ends;
        for (size_t k = 0; k < g.pieces.size(); ++k) {
            if (g.pieces[k].type_p == kEndInternal) ends.push_back({g.pieces[k].p, (int)k, 0});
            if (g.pieces[k].type_q == kEndInternal) ends.push_back({g.pieces[k].q, (int)k, 1});
        }
        std::sort(ends.begin(), ends.end(), [](const End& x, const End& y) {
            return x.u.x < y.u.x || (x.u.x == y.u.x && x.u.y < y.u.y);
        });
        size_t kk = 0;
        while (kk < ends.size()) {
            size_t e = kk + 1;
            while (e < ends.size() && std::abs(ends[e].u.x - ends[e - 1].u.x) <= 1e-9 &&
                   std::abs(ends[e].u.y - ends[e - 1].u.y) <= 1e-9)
                ++e;
            if (e - kk >= 2) {
                std::vector<std::pair<int, int>> bucket;
                for (size_t x = kk; x < e; ++x) bucket.emplace_back(ends[x].piece, ends[x].end);
                g.vertex_buckets.push_back(std::move(bucket));
            }
            kk = e;
        }
    }

    if (hat) {
        if (ann.R - ann.r <= (wild_in ? delta : 0.0) + (wild_out ? delta : 0.0)) {
            out.corridor = true;  // wildcard strips cover the whole annulus
        } else if (ns == 0) {
            out.corridor = true;
        } else {
            // single-cell corridors (free territory spans one cell)
            if (wild_in && wild_out)
                for (size_t s = 0; s < ns && !out.corridor; ++s)
                    if (g.wild_a[s] && g.wild_b[s] && mid_free[s]) out.corridor = true;
            // multi-cell corridors through free shared edges
            if (!out.corridor) {
                std::vector<uint8_t> compA(ns, 0), compB(ns, 0);
                std::vector<int> comp_size(ns, 0);
                for (size_t s = 0; s < ns; ++s) {
                    int r = corridor_uf.find(static_cast<int>(s));
                    ++comp_size[r];
                    if (wild_in ? g.wild_a[s] : g.touch_a[s]) compA[r] = 1;
                    if (wild_out ? g.wild_b[s] : g.touch_b[s]) compB[r] = 1;
                }
                for (size_t r = 0; r < ns && !out.corridor; ++r)
                    if (comp_size[r] >= 2 && compA[r] && compB[r]) out.corridor = true;
            }
        }
    }
    return out;
}

// Maximum number of vertex-disjoint paths from inner-contact to
// outer-contact slots within one color class, computed by unit-capacity
// augmentation on the node-split graph; stops at `need`.
int max_disjoint_flow(const EventGraph& g, const std::vector<int8_t>& col, int8_t color,
                      int need) {
    const int n = g.slot_count();
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : g.edges)
        if (col[a] == color && col[b] == color) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    const int S = 2 * n, T = 2 * n + 1, N = 2 * n + 2;
    std::vector<std::unordered_set<int>> res(N);
    for (int x = 0; x < n; ++x) {
        if (col[x] != color) continue;
        res[2 * x].insert(2 * x + 1);
        if (g.touch_a[x] || g.wild_a[x]) res[S].insert(2 * x);
        if (g.touch_b[x] || g.wild_b[x]) res[2 * x + 1].insert(T);
        for (int y : adj[x]) res[2 * x + 1].insert(2 * y);
    }
    int flow = 0;
    while (flow < need) {
        std::vector<int> prev(N, -1);
        std::vector<int> q{S};
        prev[S] = S;
        for (size_t h = 0; h < q.size() && prev[T] < 0; ++h)
            for (int v : res[q[h]])
                if (prev[v] < 0) {
                    prev[v] = q[h];
                    q.push_back(v);
                }
        if (prev[T] < 0) break;
        for (int v = T; v != S; v = prev[v]) {
            res[prev[v]].erase(v);
            res[v].insert(prev[v]);
        }
        ++flow;
    }
    return flow;
}

// Evaluate the arm criterion on a prepared graph.
//
// The number of disjoint alternating arms equals the number of inner-to-
// outer color interfaces T (chains of shared-edge pieces between opposite
// colors): each such interface carries a monochromatic through-path hugging
// either side, and any two arms of different colors force an interface
// between them. Alternating patterns then reduce to:
//   cyclic even j:  T >= j
//   cyclic odd j:   T >= j+1, or T >= j-1 with (j+1)/2 disjoint paths of
//                   the wrap color (the extra arm shares a tube)
//   linear even j:  T >= j-1  (patterns match up to reflection)
//   linear odd j:   T >= j, or T == j-1 with the leftmost interface's left
//                   side showing the pattern's first color
//   j == 1:         a through-cluster of the requested color
// Hat graphs add wildcard contacts (completion territory) as chain cut
// points and flow endpoints, and may short-circuit through free corridors.
bool arm_eval_on(const EventGraph& g, const std::vector<int8_t>& cell_colors,
                 const ArmSpec& arms) {
    const int8_t wrap = validate_pattern(arms, g.cyclic);
    const int n = g.slot_count();
    std::vector<int8_t> col(n);
    for (int s = 0; s < n; ++s) col[s] = cell_colors[g.cells[s]];
    const auto& pat = arms.pattern;

    if (arms.j == 1) {
        return max_disjoint_flow(g, col, pat[0], 1) >= 1;
    }

    // interface chains over currently bicolor pieces
    const size_t np = g.pieces.size();
    std::vector<uint8_t> active(np, 0);
    for (size_t k = 0; k < np; ++k) active[k] = col[g.pieces[k].a] != col[g.pieces[k].b];
    UF chains(static_cast<int>(np));
    for (const auto& bucket : g.vertex_buckets) {
        int first = -1;
        for (auto [piece, endv] : bucket) {
            (void)endv;
            if (!active[piece]) continue;
            if (first < 0)
                first = piece;
            else
                chains.unite(first, piece);
        }
    }
    std::vector<int> cnt_in(np, 0), cnt_out(np, 0), wild_in(np, 0), wild_out(np, 0);
    for (size_t k = 0; k < np; ++k) {
        if (!active[k]) continue;
        int r = chains.find(static_cast<int>(k));
        const EdgePiece& pc = g.pieces[k];
        if (pc.type_p == kEndInner) ++cnt_in[r];
        if (pc.type_q == kEndInner) ++cnt_in[r];
        if (pc.type_p == kEndOuter) ++cnt_out[r];
        if (pc.type_q == kEndOuter) ++cnt_out[r];
        if (pc.wild_cut_in) wild_in[r] = std::min(wild_in[r] + 1, 8);
        if (pc.wild_cut_out) wild_out[r] = std::min(wild_out[r] + 1, 8);
    }
    int T = 0;
    for (size_t k = 0; k < np; ++k)
        if (active[k] && chains.find(static_cast<int>(k)) == static_cast<int>(k))
            T += std::min(cnt_in[k] + wild_in[k], cnt_out[k] + wild_out[k]);

    if (g.cyclic) {
        if (arms.j % 2 == 0) return T >= arms.j;
        if (T >= arms.j + 1) return true;
        if (T < arms.j - 1) return false;
        return max_disjoint_flow(g, col, wrap, (arms.j + 1) / 2) >= (arms.j + 1) / 2;
    }

    // linear regions
    if (arms.j % 2 == 0) return T >= arms.j - 1;
    if (T >= arms.j) return true;
    if (T < arms.j - 1) return false;
    // phase of the leftmost crossing interface
    double best_t = std::numeric_limits<double>::infinity();
    int8_t ell = 0;
    for (size_t k = 0; k < np; ++k) {
        if (!active[k]) continue;
        int r = chains.find(static_cast<int>(k));
        if (cnt_out[r] + wild_out[r] < 1) continue;
        const EdgePiece& pc = g.pieces[k];
        if (pc.type_p == kEndInner && pc.t_p < best_t && pc.left_p >= 0) {
            best_t = pc.t_p;
            ell = col[pc.left_p];
        }
        if (pc.type_q == kEndInner && pc.t_q < best_t && pc.left_q >= 0) {
            best_t = pc.t_q;
            ell = col[pc.left_q];
        }
    }
    return ell == pat[0];
}

}  // namespace

ArmContext::ArmContext(const Tessellation& tess, const AnnulusSpec& ann, const ArmSpec& arms)
    : arms_(arms) {
    if (ann.r > ann.R) throw event_error("annulus: r > R");
    if (ann.r == ann.R) {
        trivial_ = true;
        return;
    }
    validate_pattern(arms, arms.region == ArmRegion::FullPlane);
    ArmBuild b = build_arm_graph(tess, ann, arms.region, false, false, 0.0, ann.r);
    g_ = std::move(b.g);
}

bool ArmContext::eval(const std::vector<int8_t>& colors) const {
    if (trivial_) return true;
    return arm_eval_on(g_, colors, arms_);
}

bool arm_event(const ColoredConfiguration& cfg, const AnnulusSpec& ann, const ArmSpec& arms) {
    require_certified(cfg, Window::box(ann.center, ann.R), "arm_event");
    ArmContext ctx(cfg.t(), ann, arms);
    return ctx.eval(cfg.colors);
}

// ---------------------------------------------------------------------------
// Hat events: wildcard-boundary surrogate on the conditioning points only.
// ---------------------------------------------------------------------------

constexpr double kDeltaWild = 1.0;

HatEval hat_arm_event_ex(const ColoredConfiguration& cfg, const AnnulusSpec& ann,
                         const ArmSpec& arms, HatKind kind) {
    if (ann.r > ann.R) throw event_error("annulus: r > R");
    if (ann.r == ann.R) return {true, false};
    const Tessellation& t = cfg.t();
    const Vec2 c = ann.center;

    PointSet sub;
    sub.seed = t.pts.seed;
    std::vector<int> orig;
    for (size_t i = 0; i < t.size(); ++i) {
        const Vec2 p = t.pts.points[i];
        double d = sup_norm(p - c);
        bool keep = false;
        switch (kind) {
            case HatKind::Annulus: keep = d >= ann.r && d <= ann.R; break;
            case HatKind::Exterior: keep = d <= ann.R; break;
            case HatKind::Interior: keep = d >= ann.r; break;
        }
        if (keep) {
            sub.points.push_back(p);
            orig.push_back(static_cast<int>(i));
        }
    }
    if (sub.points.empty()) return {true, true};

    const bool wild_in = kind != HatKind::Exterior;
    const bool wild_out = kind != HatKind::Interior;
    sub.window = wild_out ? Window::box(c, ann.R) : t.pts.window;

    std::vector<int8_t> sub_colors(sub.points.size());
    for (size_t k = 0; k < orig.size(); ++k) sub_colors[k] = cfg.colors[orig[k]];

    Tessellation sub_tess = build_tessellation(sub);
    double walk_rho = std::min(ann.r + kDeltaWild, 0.5 * (ann.r + ann.R));
    ArmBuild b = build_arm_graph(sub_tess, ann, arms.region, wild_in, wild_out, kDeltaWild,
                                 wild_in ? walk_rho : ann.r);
    validate_pattern(arms, b.g.cyclic);
    if (b.corridor) return {true, false};
    return {arm_eval_on(b.g, sub_colors, arms), false};
}

bool hat_arm_event(const ColoredConfiguration& cfg, const AnnulusSpec& ann, const ArmSpec& arms,
                   HatKind kind) {
    return hat_arm_event_ex(cfg, ann, arms, kind).value;
}

// ---------------------------------------------------------------------------
// Pivotality.
// ---------------------------------------------------------------------------

bool pivotal_point(ColoredConfiguration& cfg, int x, const Event& event) {
    if (x < 0 || static_cast<size_t>(x) >= cfg.size()) throw event_error("pivotal_point: bad index");
    bool v0 = event(cfg);
    cfg.colors[x] = static_cast<int8_t>(-cfg.colors[x]);
    bool v1 = event(cfg);
    cfg.colors[x] = static_cast<int8_t>(-cfg.colors[x]);
    return v0 != v1;
}

bool pivotal_quenched_box(ColoredConfiguration& cfg, const Window& box, const Event& event,
                          int cap) {
    std::vector<int> idx;
    for (size_t i = 0; i < cfg.size(); ++i)
        if (box.contains(cfg.t().pts.points[i])) idx.push_back(static_cast<int>(i));
    const int k = static_cast<int>(idx.size());
    if (k == 0) return false;
    if (k > cap) throw event_error("enumeration cap");
    std::vector<int8_t> saved;
    for (int i : idx) saved.push_back(cfg.colors[i]);
    bool seen_true = false, seen_false = false;
    for (uint32_t mask = 0; mask < (1u << k) && !(seen_true && seen_false); ++mask) {
        for (int b = 0; b < k; ++b) cfg.colors[idx[b]] = (mask >> b) & 1 ? kBlack : kWhite;
        (event(cfg) ? seen_true : seen_false) = true;
    }
    for (int b = 0; b < k; ++b) cfg.colors[idx[b]] = saved[b];
    return seen_true && seen_false;
}

namespace {

// Poisson sample in `box` avoiding already-occupied grid sites.
std::vector<Vec2> poisson_in_box_avoiding(const Window& box, double intensity, Rng& rng,
                                          std::unordered_set<uint64_t>& occupied) {
    auto key = [](Vec2 p) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(quantized(p.x))) << 32) |
               static_cast<uint64_t>(static_cast<uint32_t>(quantized(p.y)));
    };
    auto snap_into = [&](double v, double lo, double hi) {
        double s = std::round(v * kScale) * kQuantum;
        return std::clamp(s, std::ceil(lo * kScale) * kQuantum, std::floor(hi * kScale) * kQuantum);
    };
    std::vector<Vec2> out;
    uint64_t n = rng.poisson(intensity * box.area());
    for (uint64_t i = 0; i < n; ++i) {
        for (;;) {
            Vec2 p{snap_into(rng.uniform(box.x0, box.x1), box.x0, box.x1),
                   snap_into(rng.uniform(box.y0, box.y1), box.y0, box.y1)};
            if (occupied.insert(key(p)).second) {
                out.push_back(p);
                break;
            }
        }
    }
    return out;
}

}  // namespace

Tri pivotal_annealed_mc(const ColoredConfiguration& cfg, const Window& box, const Event& event,
                        int M, Rng& rng, int quenched_cap) {
    if (M < 2) throw event_error("pivotal_annealed_mc: M must be >= 2");
    const Tessellation& t = cfg.t();
    Window sub{std::max(box.x0, t.window().x0), std::min(box.x1, t.window().x1),
               std::max(box.y0, t.window().y0), std::min(box.y1, t.window().y1)};

    std::vector<int> keep;
    for (size_t i = 0; i < t.size(); ++i)
        if (!box.contains(t.pts.points[i])) keep.push_back(static_cast<int>(i));

    bool seen_true = false, seen_false = false;
    for (int m = 0; m < M && !(seen_true && seen_false); ++m) {
        PointSet ps;
        ps.window = t.window();
        ps.seed = t.pts.seed;
        std::unordered_set<uint64_t> occupied;
        std::vector<int8_t> colors;
        for (int i : keep) {
            Vec2 p = t.pts.points[i];
            occupied.insert((static_cast<uint64_t>(static_cast<uint32_t>(quantized(p.x))) << 32) |
                            static_cast<uint64_t>(static_cast<uint32_t>(quantized(p.y))));
            ps.points.push_back(p);
            colors.push_back(cfg.colors[i]);
        }
        for (Vec2 p : poisson_in_box_avoiding(sub, 1.0, rng, occupied)) {
            ps.points.push_back(p);
            colors.push_back(rng.bernoulli(cfg.p) ? kBlack : kWhite);
        }
        ColoredConfiguration c2;
        c2.tess = std::make_shared<Tessellation>(build_tessellation(ps));
        c2.colors = std::move(colors);
        c2.p = cfg.p;
        c2.certified_roi = cfg.certified_roi;
        c2.certified = cfg.certified && check_padding_valid(c2.t(), cfg.certified_roi);
        if (!c2.certified && cfg.certified) continue;  // discarded draw
        (event(c2) ? seen_true : seen_false) = true;
    }
    if (seen_true && seen_false) return Tri::True;

    // all resamples agree; classify as non-pivotal only if the quenched
    // recoloring test cannot flip the event either
    ColoredConfiguration mut = cfg;
    bool quenched;
    try {
        quenched = pivotal_quenched_box(mut, box, event, quenched_cap);
    } catch (const event_error&) {
        // enumeration cap exceeded: Monte Carlo recoloring fallback with
        // one-sided error 2^-256
        quenched = false;
        std::vector<int> idx;
        for (size_t i = 0; i < cfg.size(); ++i)
            if (box.contains(t.pts.points[i])) idx.push_back(static_cast<int>(i));
        bool v0 = event(mut);
        for (int k = 0; k < 256 && !quenched; ++k) {
            for (int i : idx) mut.colors[i] = rng.bernoulli(0.5) ? kBlack : kWhite;
            if (event(mut) != v0) quenched = true;
        }
        for (int i : idx) mut.colors[i] = cfg.colors[i];
    }
    return quenched ? Tri::Undetermined : Tri::False;
}

bool pivotal_box_monotone_crossing(const ColoredConfiguration& cfg, const Window& box,
                                   const Window& rect, CrossDir dir) {
    const Tessellation& t = cfg.t();
    Window sub{std::max(box.x0, t.window().x0), std::min(box.x1, t.window().x1),
               std::max(box.y0, t.window().y0), std::min(box.y1, t.window().y1)};
    if (sub.x0 >= sub.x1 || sub.y0 >= sub.y1) return false;

    // Survivors plus a fine grid of filler points in the box. Coloring the
    // filler solid black (resp. white) realizes the extremal conditional
    // configurations of the monotone crossing up to the grid resolution:
    // filler cells also capture every location closer to the box than to any
    // survivor, which a dense box content does grab in the limit.
    PointSet ps;
    ps.window = t.window();
    ps.seed = t.pts.seed;
    std::vector<int8_t> colors;
    std::unordered_set<uint64_t> occupied;
    auto key = [](Vec2 p) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(quantized(p.x))) << 32) |
               static_cast<uint64_t>(static_cast<uint32_t>(quantized(p.y)));
    };
    for (size_t i = 0; i < t.size(); ++i) {
        Vec2 p = t.pts.points[i];
        if (box.contains(p)) continue;
        ps.points.push_back(p);
        colors.push_back(cfg.colors[i]);
        occupied.insert(key(p));
    }
    const int grid = 6;
    size_t first_filler = ps.points.size();
    for (int gx = 0; gx < grid; ++gx)
        for (int gy = 0; gy < grid; ++gy) {
            Vec2 p{sub.x0 + (gx + 0.5) * (sub.x1 - sub.x0) / grid,
                   sub.y0 + (gy + 0.5) * (sub.y1 - sub.y0) / grid};
            p = {static_cast<double>(quantized(p.x)) * kQuantum,
                 static_cast<double>(quantized(p.y)) * kQuantum};
            if (!occupied.insert(key(p)).second) continue;
            ps.points.push_back(p);
            colors.push_back(kBlack);
        }
    if (ps.points.size() < 3) return first_filler == 0 && ps.points.size() > 0;

    Tessellation filled = build_tessellation(ps);
    CrossingContext ctx(filled, rect, dir);
    bool hi = ctx.eval(colors, kBlack);
    for (size_t i = first_filler; i < colors.size(); ++i) colors[i] = kWhite;
    bool lo = ctx.eval(colors, kBlack);
    return hi != lo;
}

}  // namespace voroperc
