#include "voroperc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace voroperc {

// ---------------------------------------------------------------------------
// Movers.
// ---------------------------------------------------------------------------

Vec2 sample_stable_increment(double alpha, double t, Rng& rng) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw dynamics_error("stable increment: alpha not in (0,2]");
    if (!(t > 0.0)) throw dynamics_error("stable increment: t must be > 0");
    double subordinator;
    if (alpha == 2.0) {
        subordinator = t;
    } else {
        // S = (t cos(pi a / 2))^{1/a} S_a with a = alpha/2 and S_a the
        // Laplace-normalized positive stable draw; E[e^{-uS}] = e^{-t u^a}.
        double a = alpha / 2.0;
        subordinator = std::pow(t, 1.0 / a) * rng.positive_stable(a);
    }
    double s = std::sqrt(subordinator);
    return {s * rng.normal(), s * rng.normal()};
}

Vec2 sample_mover_increment(const MoverKind& mover, double t, Rng& rng) {
    switch (mover.type) {
        case MoverKind::Type::Zero:
            return {0.0, 0.0};
        case MoverKind::Type::Brownian:
            return sample_stable_increment(2.0, t, rng);
        case MoverKind::Type::IsotropicStable:
            return sample_stable_increment(mover.alpha, t, rng);
        case MoverKind::Type::CompoundPoissonPareto: {
            // jumps at rate `rate`, radius Pareto(alpha), uniform direction
            Vec2 x{0.0, 0.0};
            uint64_t jumps = rng.poisson(mover.rate * t);
            for (uint64_t k = 0; k < jumps; ++k) {
                double r = rng.pareto(mover.alpha);
                double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
                x = x + Vec2{r * std::cos(phi), r * std::sin(phi)};
            }
            return x;
        }
    }
    return {0.0, 0.0};
}

TailCheckReport tail_check(const MoverKind& mover, const std::vector<double>& ts,
                           const std::vector<double>& Ls, int draws, uint64_t seed) {
    TailCheckReport rep;
    rep.alpha = mover.alpha;
    rep.ts = ts;
    rep.Ls = Ls;
    rep.draws = draws;

    for (size_t it = 0; it < ts.size(); ++it) {
        Rng rng(seed, stream::kMoverPaths, it);
        std::vector<int> counts(Ls.size(), 0);
        for (int d = 0; d < draws; ++d) {
            Vec2 x = sample_mover_increment(mover, ts[it], rng);
            double nrm = std::sqrt(norm2(x));
            for (size_t il = 0; il < Ls.size(); ++il)
                if (nrm >= Ls[il]) ++counts[il];
        }
        std::vector<double> p, ratio;
        for (size_t il = 0; il < Ls.size(); ++il) {
            double q = static_cast<double>(counts[il]) / draws;
            p.push_back(q);
            ratio.push_back(q * std::pow(Ls[il], rep.alpha) / ts[it]);
        }
        rep.p.push_back(std::move(p));
        rep.ratio.push_back(std::move(ratio));
    }

    // log-log tail fit at the largest t
    size_t it = ts.size() - 1;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t il = 0; il < Ls.size(); ++il) {
        double q = rep.p[it][il];
        if (q <= 0.0) continue;
        double w = draws * q / (1.0 - q + 1e-12);  // inverse variance of log p
        double x = std::log(Ls[il]), y = std::log(q);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    double det = sw * sxx - sx * sx;
    if (det > 0) {
        rep.slope = (sw * sxy - sx * sy) / det;
        rep.intercept = (sxx * sy - sx * sxy) / det;
    }

    // operational verdict: the bound fails when some cell's ratio collapses
    // (beyond 3 sigma) below a tenth of the typical ratio
    std::vector<double> all;
    for (auto& row : rep.ratio)
        for (double r : row) all.push_back(r);
    std::sort(all.begin(), all.end());
    rep.c_estimate = all.empty() ? 0.0 : all[all.size() / 2];
    rep.min_ratio = all.empty() ? 0.0 : all.front();
    rep.bound_holds = rep.c_estimate > 0.0;
    for (size_t i = 0; i < ts.size(); ++i)
        for (size_t il = 0; il < Ls.size(); ++il) {
            double q = rep.p[i][il];
            double se = std::sqrt(std::max(q * (1 - q), 1.0 / draws) / draws);
            double hi = (q + 3 * se) * std::pow(Ls[il], rep.alpha) / ts[i];
            if (hi < 0.1 * rep.c_estimate) rep.bound_holds = false;
        }
    return rep;
}

// ---------------------------------------------------------------------------
// Frozen dynamics.
// ---------------------------------------------------------------------------

FrozenTrajectory simulate_frozen(const ColoredConfiguration& cfg, double horizon, Rng& rng) {
    if (!(horizon > 0.0)) throw dynamics_error("simulate_frozen: horizon must be > 0");
    FrozenTrajectory traj;
    traj.base = cfg;
    traj.horizon = horizon;
    for (size_t i = 0; i < cfg.size(); ++i) {
        double t = rng.exponential();
        while (t <= horizon) {
            traj.events.push_back({t, static_cast<int>(i), rng.sign() > 0 ? kBlack : kWhite});
            t += rng.exponential();
        }
    }
    std::sort(traj.events.begin(), traj.events.end(), [](const auto& a, const auto& b) {
        return a.t < b.t || (a.t == b.t && a.point < b.point);
    });
    return traj;
}

std::vector<int8_t> FrozenTrajectory::colors_at(double t) const {
    std::vector<int8_t> c = base.colors;
    for (const Flip& e : events) {
        if (e.t > t) break;
        c[e.point] = e.color;
    }
    return c;
}

ColoredConfiguration FrozenTrajectory::config_at(double t) const {
    ColoredConfiguration cfg = base;
    cfg.colors = colors_at(t);
    return cfg;
}

// ---------------------------------------------------------------------------
// Moving dynamics.
// ---------------------------------------------------------------------------

namespace {

// Rebuild-safe coordinates: quantized, clamped to the representable range,
// nudged off occupied grid sites.
Vec2 sanitize_position(Vec2 p, std::unordered_set<uint64_t>& occupied) {
    auto key = [](int64_t ix, int64_t iy) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(ix)) << 32) |
               static_cast<uint64_t>(static_cast<uint32_t>(iy));
    };
    double x = std::clamp(p.x, -1900.0, 1900.0);
    double y = std::clamp(p.y, -1900.0, 1900.0);
    int64_t ix = quantized(x), iy = quantized(y);
    while (!occupied.insert(key(ix, iy)).second) ++ix;  // deterministic nudge
    return {static_cast<double>(ix) * kQuantum, static_cast<double>(iy) * kQuantum};
}

}  // namespace

int MovingTrajectory::step_of(double t) const {
    int k = static_cast<int>(std::floor(t / dt + 1e-12));
    return std::clamp(k, 0, steps);
}

MovingSnapshot MovingTrajectory::snapshot(int step) const {
    const auto& pos = positions[static_cast<size_t>(step)];
    PointSet ps;
    ps.seed = initial.tess->pts.seed;
    double reach = 0.0;
    for (const Vec2& p : pos) reach = std::max(reach, sup_norm(p));
    Window w = initial.tess->pts.window;
    w.x0 = std::min(w.x0, -reach - 1.0);
    w.x1 = std::max(w.x1, reach + 1.0);
    w.y0 = std::min(w.y0, -reach - 1.0);
    w.y1 = std::max(w.y1, reach + 1.0);
    ps.window = w;
    ps.points = pos;

    MovingSnapshot snap;
    snap.cfg.tess = std::make_shared<Tessellation>(build_tessellation(ps));
    snap.cfg.colors = initial.colors;
    snap.cfg.p = initial.p;
    snap.cfg.certified_roi = roi;
    snap.padding_valid = check_padding_valid(snap.cfg.t(), roi);
    snap.cfg.certified = snap.padding_valid;
    return snap;
}

MovingTrajectory simulate_moving(const ColoredConfiguration& cfg, const Window& roi, double horizon,
                                 double dt, const MoverKind& mover, Rng& rng) {
    if (!(dt > 0.0) || horizon < dt) throw dynamics_error("simulate_moving: need horizon >= dt > 0");
    MovingTrajectory traj;
    traj.initial = cfg;
    traj.mover = mover;
    traj.dt = dt;
    traj.horizon = horizon;
    traj.roi = roi;
    traj.steps = static_cast<int>(std::floor(horizon / dt + 1e-12));
    const size_t n = cfg.size();
    traj.positions.resize(traj.steps + 1);
    traj.positions[0] = cfg.tess->pts.points;
    for (int k = 1; k <= traj.steps; ++k) {
        std::unordered_set<uint64_t> occupied;
        occupied.reserve(2 * n);
        auto& prev = traj.positions[k - 1];
        auto& cur = traj.positions[k];
        cur.resize(n);
        for (size_t i = 0; i < n; ++i)
            cur[i] = sanitize_position(prev[i] + sample_mover_increment(mover, dt, rng), occupied);
    }
    return traj;
}

MixedTrajectory simulate_mixed(const ColoredConfiguration& cfg, const Window& roi, double horizon,
                               double dt, const MoverKind& mover, Rng& rng) {
    MixedTrajectory traj;
    traj.motion = simulate_moving(cfg, roi, horizon, dt, mover, rng);
    traj.clocks = simulate_frozen(cfg, horizon, rng);
    return traj;
}

MovingSnapshot MixedTrajectory::snapshot_at(double t) const {
    MovingSnapshot snap = motion.snapshot(motion.step_of(t));
    snap.cfg.colors = clocks.colors_at(t);
    return snap;
}

// ---------------------------------------------------------------------------
// Indicator paths and X_R.
// ---------------------------------------------------------------------------

std::vector<char> indicator_path(const FrozenTrajectory& traj, const Event& event,
                                 const std::vector<double>& times) {
    for (double t : times)
        if (t < 0.0 || t > traj.horizon) throw dynamics_error("indicator_path: time out of range");
    std::vector<size_t> order(times.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return times[a] < times[b]; });

    std::vector<char> out(times.size());
    ColoredConfiguration cur = traj.base;
    size_t ev = 0;
    bool value = event(cur);
    bool dirty = false;
    for (size_t oi : order) {
        double t = times[oi];
        while (ev < traj.events.size() && traj.events[ev].t <= t) {
            const auto& e = traj.events[ev++];
            if (cur.colors[e.point] != e.color) {
                cur.colors[e.point] = e.color;
                dirty = true;
            }
        }
        if (dirty) {
            value = event(cur);
            dirty = false;
        }
        out[oi] = value;
    }
    return out;
}

std::vector<char> indicator_path(const MovingTrajectory& traj, const Event& event,
                                 const std::vector<double>& times) {
    std::vector<char> out;
    int last_step = -1;
    char last = 0;
    for (double t : times) {
        if (t < 0.0 || t > traj.horizon) throw dynamics_error("indicator_path: time out of range");
        int k = traj.step_of(t);
        if (k != last_step) {
            MovingSnapshot s = traj.snapshot(k);
            last = event(s.cfg);
            last_step = k;
        }
        out.push_back(last);
    }
    return out;
}

XRResult integral_X_R(const FrozenTrajectory& traj, double R) {
    if (traj.horizon < 1.0) throw dynamics_error("integral_X_R: horizon must be >= 1");
    const AnnulusSpec ann{{0.0, 0.0}, 1.0, R};
    const ArmSpec arms = ArmSpec::alternating(1);
    ArmContext ctx(traj.base.t(), ann, arms);

    // relevance mask: only flips of participating cells can change f_R
    std::vector<uint8_t> relevant(traj.base.size(), 0);
    for (int i : ctx.graph().cells) relevant[i] = 1;

    std::vector<int8_t> colors = traj.base.colors;
    bool value = ctx.eval(colors);
    double integral = 0.0;
    double t_prev = 0.0;
    for (const auto& e : traj.events) {
        if (e.t >= 1.0) break;
        if (colors[e.point] == e.color) continue;
        colors[e.point] = e.color;
        if (!relevant[e.point]) continue;
        // monotone event: flips toward black keep it true, toward white
        // keep it false
        bool recheck = (value && e.color == kWhite) || (!value && e.color == kBlack);
        if (!recheck) continue;
        bool nv = ctx.eval(colors);
        if (nv != value) {
            if (value) integral += e.t - t_prev;
            t_prev = e.t;
            value = nv;
        }
    }
    if (value) integral += 1.0 - t_prev;
    return {integral, true};
}

namespace {

XRResult xr_moving_impl(const MovingTrajectory& motion, const FrozenTrajectory* clocks, double R,
                        int resolution) {
    if (motion.horizon < 1.0) throw dynamics_error("integral_X_R: horizon must be >= 1");
    if (resolution < 1) throw dynamics_error("integral_X_R: resolution must be >= 1");
    const AnnulusSpec ann{{0.0, 0.0}, 1.0, R};
    const ArmSpec arms = ArmSpec::alternating(1);
    XRResult res;
    double acc = 0.0;
    for (int k = 0; k < resolution; ++k) {
        double t = static_cast<double>(k) / resolution;
        MovingSnapshot snap = motion.snapshot(motion.step_of(t));
        if (clocks) snap.cfg.colors = clocks->colors_at(t);
        if (!snap.padding_valid) {
            res.padding_ok = false;
            continue;
        }
        ArmContext ctx(snap.cfg.t(), ann, arms);
        acc += ctx.eval(snap.cfg.colors) ? 1.0 : 0.0;
    }
    res.value = acc / resolution;
    return res;
}

}  // namespace

XRResult integral_X_R(const MovingTrajectory& traj, double R, int resolution) {
    return xr_moving_impl(traj, nullptr, R, resolution);
}

XRResult integral_X_R(const MixedTrajectory& traj, double R, int resolution) {
    return xr_moving_impl(traj.motion, &traj.clocks, R, resolution);
}

// ---------------------------------------------------------------------------
// Configuration metric.
// ---------------------------------------------------------------------------

namespace {

// Hopcroft-Karp maximum matching on a bipartite graph given as adjacency
// lists from the left side.
int max_matching(const std::vector<std::vector<int>>& adj, int nr) {
    const int nl = static_cast<int>(adj.size());
    std::vector<int> ml(nl, -1), mr(nr, -1), dist(nl);
    const int INF = 1 << 30;

    auto bfs = [&]() {
        std::vector<int> q;
        for (int u = 0; u < nl; ++u) {
            dist[u] = ml[u] < 0 ? 0 : INF;
            if (ml[u] < 0) q.push_back(u);
        }
        bool found = false;
        for (size_t h = 0; h < q.size(); ++h) {
            int u = q[h];
            for (int v : adj[u]) {
                int w = mr[v];
                if (w < 0)
                    found = true;
                else if (dist[w] == INF) {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        return found;
    };
    std::function<bool(int)> dfs = [&](int u) {
        for (int v : adj[u]) {
            int w = mr[v];
            if (w < 0 || (dist[w] == dist[u] + 1 && dfs(w))) {
                ml[u] = v;
                mr[v] = u;
                return true;
            }
        }
        dist[u] = INF;
        return false;
    };

    int matching = 0;
    while (bfs())
        for (int u = 0; u < nl; ++u)
            if (ml[u] < 0 && dfs(u)) ++matching;
    return matching;
}

// smallest threshold distance allowing a perfect matching
double bottleneck_threshold(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    const int n = static_cast<int>(a.size());
    if (n == 0) return 0.0;
    std::vector<double> d2s;
    d2s.reserve(static_cast<size_t>(n) * n);
    for (const Vec2& p : a)
        for (const Vec2& q : b) d2s.push_back(dist2(p, q));
    std::sort(d2s.begin(), d2s.end());
    d2s.erase(std::unique(d2s.begin(), d2s.end()), d2s.end());

    auto feasible = [&](double thr2) {
        std::vector<std::vector<int>> adj(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (dist2(a[i], b[j]) <= thr2) adj[i].push_back(j);
        return max_matching(adj, n) == n;
    };

    size_t lo = 0, hi = d2s.size() - 1;
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (feasible(d2s[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return std::sqrt(d2s[lo]);
}

}  // namespace

double bottleneck_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    if (a.size() != b.size()) throw dynamics_error("bottleneck_distance: size mismatch");
    return bottleneck_threshold(a, b);
}

MetricResult config_metric(const ColoredConfiguration& a, const ColoredConfiguration& b,
                           double r_max) {
    if (!(r_max > 0.0)) throw dynamics_error("config_metric: r_max must be > 0");
    const Window need = Window::box({0, 0}, r_max);
    if (!a.t().window().contains(need) || !b.t().window().contains(need))
        throw dynamics_error("config_metric: windows must cover [-r_max, r_max]^2");

    // radii where the point content of the box changes
    std::vector<double> radii{0.0};
    auto collect = [&](const ColoredConfiguration& cfg) {
        for (const Vec2& p : cfg.t().pts.points) {
            double s = sup_norm(p);
            if (s < r_max) radii.push_back(s);
        }
    };
    collect(a);
    collect(b);
    radii.push_back(r_max);
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

    auto in_box = [](const ColoredConfiguration& cfg, double r, int8_t color) {
        std::vector<Vec2> out;
        for (size_t i = 0; i < cfg.size(); ++i) {
            const Vec2 p = cfg.t().pts.points[i];
            if (sup_norm(p) <= r && cfg.colors[i] == color) out.push_back(p);
        }
        return out;
    };

    double total = 0.0;
    for (size_t k = 0; k + 1 < radii.size(); ++k) {
        double r = radii[k];  // content constant on [radii[k], radii[k+1])
        double dprime;
        std::vector<Vec2> ab = in_box(a, r, kBlack), bb = in_box(b, r, kBlack);
        std::vector<Vec2> aw = in_box(a, r, kWhite), bw = in_box(b, r, kWhite);
        if (ab.size() != bb.size() || aw.size() != bw.size()) {
            dprime = 1.0;
        } else {
            dprime = std::max(bottleneck_threshold(ab, bb), bottleneck_threshold(aw, bw));
        }
        total += (std::exp(-r) - std::exp(-radii[k + 1])) * dprime / (1.0 + dprime);
    }
    return {total, std::exp(-r_max)};
}

}  // namespace voroperc
