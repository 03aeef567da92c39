#include <doctest.h>

#include <cmath>

#include "voroperc/dynamics.hpp"
#include "voroperc/estimators.hpp"

using namespace voroperc;

namespace {

ColoredConfiguration certified_sample(const Window& roi, uint64_t seed) {
    Rng rng(seed, stream::kReplica, 2000);
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto cfg = sample_certified_config(roi, rng);
        if (cfg) return *cfg;
    }
    throw std::runtime_error("certified_sample failed");
}

}  // namespace

TEST_CASE("frozen clocks ring at rate one per point") {
    ColoredConfiguration cfg = certified_sample(Window::box({0, 0}, 4), 1);
    const double T = 2.0;
    double total = 0.0;
    const int runs = 400;
    for (int k = 0; k < runs; ++k) {
        Rng rng(50 + k, stream::kFrozenClocks, 0);
        total += static_cast<double>(simulate_frozen(cfg, T, rng).events.size());
    }
    double mean = total / runs;
    double expect = static_cast<double>(cfg.size()) * T;
    CHECK(std::abs(mean - expect) < 3.0 * std::sqrt(expect / runs) + 1.0);
}

TEST_CASE("frozen trajectory: state at 0, stationary marginal at t") {
    const Window rect{0, 6, 0, 6};
    long hits0 = 0, hits1 = 0, n = 0;
    for (uint64_t s = 0; s < 800; ++s) {
        ColoredConfiguration cfg = certified_sample(rect, 300 + s);
        Rng rng(s, stream::kFrozenClocks, 1);
        FrozenTrajectory traj = simulate_frozen(cfg, 1.0, rng);
        CHECK(traj.config_at(0.0).colors == cfg.colors);
        hits0 += crossing(cfg, rect, CrossDir::LeftRight, kBlack);
        ColoredConfiguration at1 = traj.config_at(1.0);
        hits1 += crossing(at1, rect, CrossDir::LeftRight, kBlack);
        ++n;
    }
    // both time marginals are the stationary law with P[cross] = 1/2
    double se = std::sqrt(0.25 / n);
    CHECK(std::abs(hits0 / double(n) - 0.5) < 3.5 * se);
    CHECK(std::abs(hits1 / double(n) - 0.5) < 3.5 * se);
}

TEST_CASE("stable increments: alpha = 2 is Brownian with per-axis variance t") {
    Rng rng(7, 0, 0);
    const int n = 100000;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec2 x = sample_stable_increment(2.0, 1.0, rng);
        s2 += norm2(x);
    }
    CHECK(std::abs(s2 / n - 2.0) < 3.0 * 2.0 / std::sqrt(n));
}

TEST_CASE("stable increments: self-similarity of quantiles") {
    const int n = 60000;
    for (double alpha : {0.5, 1.0, 1.5}) {
        for (double t : {0.25, 4.0}) {
            Rng rng(11, 0, static_cast<uint64_t>(alpha * 10 + t)), rng2(13, 0, 5);
            std::vector<double> at_t, at_1;
            for (int i = 0; i < n; ++i) {
                at_t.push_back(std::sqrt(norm2(sample_stable_increment(alpha, t, rng))));
                at_1.push_back(std::sqrt(norm2(sample_stable_increment(alpha, 1.0, rng2))) *
                               std::pow(t, 1.0 / alpha));
            }
            std::sort(at_t.begin(), at_t.end());
            std::sort(at_1.begin(), at_1.end());
            for (double q : {0.25, 0.5, 0.75}) {
                double a = at_t[static_cast<size_t>(q * n)];
                double b = at_1[static_cast<size_t>(q * n)];
                // quantile se via the density-free bracket: compare nearby quantiles
                double tol = 3.0 * (at_1[static_cast<size_t>((q + 0.02) * n)] -
                                    at_1[static_cast<size_t>((q - 0.02) * n)]);
                CHECK(std::abs(a - b) < tol + 1e-9);
            }
        }
    }
}

TEST_CASE("tail check: stable movers hold the bound, Brownian fails it") {
    const std::vector<double> ts{0.1, 0.5, 1.0};
    const std::vector<double> Ls{10.0, 30.0, 100.0};
    TailCheckReport stable = tail_check(MoverKind::stable(1.0), ts, Ls, 400000, 3);
    CHECK(stable.bound_holds);
    CHECK(std::abs(stable.slope + 1.0) < 0.15);

    TailCheckReport brown = tail_check(MoverKind::brownian(), ts, Ls, 200000, 4);
    CHECK(!brown.bound_holds);  // expected negative control

    TailCheckReport pareto = tail_check(MoverKind::compound_pareto(1.0, 1.0), ts, Ls, 400000, 5);
    CHECK(pareto.bound_holds);
    // single-jump lower bound: ratio >= rate * exp(-rate)
    CHECK(pareto.min_ratio > 0.9 * std::exp(-1.0));
}

TEST_CASE("moving dynamics: zero mover keeps the configuration constant") {
    const Window roi = Window::box({0, 0}, 4);
    ColoredConfiguration cfg = certified_sample(roi, 21);
    Rng rng(9, stream::kMoverPaths, 0);
    MovingTrajectory traj = simulate_moving(cfg, roi, 0.2, 0.05, MoverKind::zero(), rng);
    for (int k = 0; k <= traj.steps; ++k) {
        MovingSnapshot s = traj.snapshot(k);
        CHECK(s.padding_valid);
        CHECK(s.cfg.t().pts.points == cfg.t().pts.points);
    }
}

TEST_CASE("moving dynamics: stationary crossing probability on the grid") {
    const Window rect{0, 5, 0, 5};
    long h0 = 0, ht = 0, n = 0, bad = 0;
    for (uint64_t s = 0; s < 500; ++s) {
        ColoredConfiguration cfg = certified_sample(rect, 800 + s);
        Rng rng(s, stream::kMoverPaths, 1);
        MovingTrajectory traj = simulate_moving(cfg, rect, 0.3, 0.1, MoverKind::brownian(), rng);
        MovingSnapshot snap = traj.snapshot(traj.steps);
        if (!snap.padding_valid) {
            ++bad;
            continue;
        }
        ++n;
        h0 += crossing(cfg, rect, CrossDir::LeftRight, kBlack);
        ht += crossing(snap.cfg, rect, CrossDir::LeftRight, kBlack);
    }
    CHECK(bad < 5);
    double se = std::sqrt(0.25 / n);
    CHECK(std::abs(h0 / double(n) - 0.5) < 3.5 * se);
    CHECK(std::abs(ht / double(n) - 0.5) < 3.5 * se);
}

TEST_CASE("moving displacement variance adds up over steps") {
    const Window roi = Window::box({0, 0}, 3);
    ColoredConfiguration cfg = certified_sample(roi, 22);
    double s2 = 0.0;
    long cnt = 0;
    for (int rep = 0; rep < 40; ++rep) {
        Rng rng(rep, stream::kMoverPaths, 2);
        MovingTrajectory traj = simulate_moving(cfg, roi, 0.4, 0.1, MoverKind::brownian(), rng);
        const auto& p0 = traj.positions[0];
        const auto& p4 = traj.positions[4];
        for (size_t i = 0; i < p0.size(); ++i) {
            s2 += norm2(p4[i] - p0[i]);
            ++cnt;
        }
    }
    // per-axis variance t = 0.4 after 4 steps of 0.1
    CHECK(std::abs(s2 / cnt - 0.8) < 0.05);
}

TEST_CASE("mixed dynamics with zero mover equals frozen dynamics in law") {
    const Window rect{0, 4, 0, 4};
    long frozen_flip = 0, mixed_flip = 0, n = 0;
    const double t = 0.8;
    for (uint64_t s = 0; s < 400; ++s) {
        ColoredConfiguration cfg = certified_sample(rect, 1600 + s);
        Rng r1(s, stream::kFrozenClocks, 3), r2(s, stream::kMoverPaths, 3);
        FrozenTrajectory ft = simulate_frozen(cfg, t, r1);
        MixedTrajectory mt = simulate_mixed(cfg, rect, t, 0.1, MoverKind::zero(), r2);
        bool f0 = crossing(cfg, rect, CrossDir::LeftRight, kBlack);
        frozen_flip += f0 != crossing(ft.config_at(t), rect, CrossDir::LeftRight, kBlack);
        MovingSnapshot snap = mt.snapshot_at(t);
        mixed_flip += f0 != crossing(snap.cfg, rect, CrossDir::LeftRight, kBlack);
        ++n;
    }
    double pf = frozen_flip / double(n), pm = mixed_flip / double(n);
    double se = std::sqrt(pf * (1 - pf) / n + pm * (1 - pm) / n) + 1e-9;
    CHECK(std::abs(pf - pm) < 3.5 * se);
}

TEST_CASE("indicator_path: constants, t = 0, piecewise reuse") {
    const Window rect{0, 4, 0, 4};
    ColoredConfiguration cfg = certified_sample(rect, 23);
    Rng rng(1, stream::kFrozenClocks, 4);
    FrozenTrajectory traj = simulate_frozen(cfg, 1.0, rng);
    Event constant = [](const ColoredConfiguration&) { return true; };
    auto path = indicator_path(traj, constant, {0.0, 0.3, 0.9});
    CHECK(path == std::vector<char>({1, 1, 1}));
    Event ev = [rect](const ColoredConfiguration& c) {
        return crossing(c, rect, CrossDir::LeftRight, kBlack);
    };
    CHECK(indicator_path(traj, ev, {0.0})[0] == static_cast<char>(ev(cfg)));
    // no events: constant output
    FrozenTrajectory empty = traj;
    empty.events.clear();
    auto p2 = indicator_path(empty, ev, {0.0, 0.5, 1.0});
    CHECK(p2[0] == p2[1]);
    CHECK(p2[1] == p2[2]);
}

TEST_CASE("X_R: constant indicator and constructed half-interval") {
    const double R = 4.0;
    ColoredConfiguration cfg = certified_sample(Window::box({0, 0}, R), 24);
    // make the one-arm event true and freeze all clocks
    std::fill(cfg.colors.begin(), cfg.colors.end(), kBlack);
    FrozenTrajectory traj;
    traj.base = cfg;
    traj.horizon = 1.0;
    CHECK(integral_X_R(traj, R).value == doctest::Approx(1.0));

    // flip every cell to white exactly at t = 1/2
    for (size_t i = 0; i < cfg.size(); ++i)
        traj.events.push_back({0.5, static_cast<int>(i), kWhite});
    CHECK(integral_X_R(traj, R).value == doctest::Approx(0.5));
}

TEST_CASE("X_R mean matches an independent one-arm estimate") {
    // E[X_R] = alpha_1(1, R) for the stationary dynamics
    DynamicsSpec dyn;
    dyn.kind = DynamicsSpec::Kind::Frozen;
    auto rows = estimate_xr_moments(dyn, {4.0}, 600, 91, 4000);
    REQUIRE(rows.size() == 1);
    const auto& r = rows[0];
    double se = std::sqrt(r.mean_stderr * r.mean_stderr +
                          r.alpha1.stderr_ * r.alpha1.stderr_);
    CHECK(std::abs(r.mean - r.alpha1.value) < 3.0 * se);
    CHECK(r.ratio >= 1.0 - 1e-12);  // sample Cauchy-Schwarz
}

TEST_CASE("metric: identity, symmetry, bound, closed form, continuity") {
    const double r_max = 7.0;
    Window win = Window::box({0, 0}, r_max + 1);
    Rng rng(3, stream::kReplica, 7);
    PointSet ps1 = sample_poisson(win, 1.0, rng, 0);
    PointSet ps2 = sample_poisson(win, 1.0, rng, 0);
    auto t1 = std::make_shared<Tessellation>(build_tessellation(ps1));
    auto t2 = std::make_shared<Tessellation>(build_tessellation(ps2));
    ColoredConfiguration a = make_configuration(t1, rng);
    ColoredConfiguration b = make_configuration(t2, rng);

    CHECK(config_metric(a, a, r_max).value == doctest::Approx(0.0));
    MetricResult ab = config_metric(a, b, r_max), ba = config_metric(b, a, r_max);
    CHECK(std::abs(ab.value - ba.value) < 1e-12);
    CHECK(ab.value <= 1.0);
    CHECK(ab.truncation_error == doctest::Approx(std::exp(-r_max)));

    // one displaced point: closed form
    // d = (1 - e^-eps)/2 + (e^-eps - e^-rmax) eps/(1+eps)
    const double eps = 0.25;
    PointSet pa, pb;
    pa.window = pb.window = win;
    pa.points = {{0, 0}};
    pb.points = {{eps, 0}};
    ColoredConfiguration ca, cb;
    ca.tess = std::make_shared<Tessellation>(build_tessellation(pa));
    cb.tess = std::make_shared<Tessellation>(build_tessellation(pb));
    ca.colors = {kBlack};
    cb.colors = {kBlack};
    double closed = (1 - std::exp(-eps)) / 2 +
                    (std::exp(-eps) - std::exp(-r_max)) * eps / (1 + eps);
    MetricResult one = config_metric(ca, cb, r_max);
    CHECK(std::abs(one.value - closed) < 1e-6 + one.truncation_error);

    // continuity: moving one point by delta moves d by at most ~2 delta
    const double delta = 0.05;
    PointSet moved = ps1;
    moved.points[0].x += delta;
    auto tm = std::make_shared<Tessellation>(build_tessellation(moved));
    ColoredConfiguration am;
    am.tess = tm;
    am.colors = a.colors;
    CHECK(config_metric(a, am, r_max).value <= 2.0 * delta + std::exp(-r_max));
}

TEST_CASE("bottleneck distance: hand-checked instances") {
    std::vector<Vec2> a{{0, 0}, {4, 0}};
    std::vector<Vec2> b{{0.5, 0}, {4.5, 0}};
    CHECK(bottleneck_distance(a, b) == doctest::Approx(0.5));
    // crossing assignment is optimal here
    std::vector<Vec2> c{{0, 0}, {1, 0}};
    std::vector<Vec2> d{{1.1, 0}, {-0.1, 0}};
    CHECK(bottleneck_distance(c, d) == doctest::Approx(0.1));
}
