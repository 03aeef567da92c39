#include "voroperc/estimators.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace voroperc {

int worker_threads() {
    if (const char* env = std::getenv("VOROPERC_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace {

// Deterministic parallel map over replica indices [begin, end): each replica
// draws from its own counter-derived stream, results land at their index,
// and reductions happen in index order afterwards. Thread count cannot
// change any output.
template <typename Rec, typename F>
void run_replicas(long begin, long end, uint64_t seed, uint64_t tag,
                  std::vector<std::optional<Rec>>& out, F&& f) {
    out.resize(static_cast<size_t>(end - begin));
    std::atomic<long> next(begin);
    auto worker = [&]() {
        for (;;) {
            long idx = next.fetch_add(1);
            if (idx >= end) return;
            Rng rng(seed, tag, static_cast<uint64_t>(idx));
            out[static_cast<size_t>(idx - begin)] = f(idx, rng);
        }
    };
    int nthreads = std::min<long>(worker_threads(), std::max<long>(1, end - begin));
    if (nthreads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

double binom_stderr(double p, long n) {
    if (n <= 0) return 0.0;
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

// Stream tags per estimator family (distinct from the core rng tags).
namespace etag {
constexpr uint64_t kCrossing = 101;
constexpr uint64_t kArm = 102;
constexpr uint64_t kQuenched = 103;
constexpr uint64_t kCoupled = 104;
constexpr uint64_t kQm = 105;
constexpr uint64_t kNoise = 106;
constexpr uint64_t kPivSum = 107;
constexpr uint64_t kXr = 108;
constexpr uint64_t kAlphaRef = 109;
}  // namespace etag

}  // namespace

std::optional<ColoredConfiguration> sample_certified_config(const Window& roi, Rng& rng) {
    Window win = roi.inflated(default_margin(roi));
    PointSet ps = sample_poisson(win, 1.0, rng, 0);
    if (ps.size() < 3) return std::nullopt;
    auto tess = std::make_shared<Tessellation>(build_tessellation(ps));
    if (!check_padding_valid(*tess, roi)) return std::nullopt;
    ColoredConfiguration cfg = make_configuration(tess, rng);
    cfg.certified_roi = roi;
    cfg.certified = true;
    return cfg;
}

// ---------------------------------------------------------------------------
// Crossing.
// ---------------------------------------------------------------------------

MCEstimate estimate_crossing(double width, double height, long replicas, uint64_t seed) {
    if (replicas < 100) throw estimator_error("estimate_crossing: need >= 100 replicas");
    const Window rect{0.0, width, 0.0, height};
    std::vector<std::optional<char>> recs;
    run_replicas<char>(0, replicas, seed, etag::kCrossing, recs, [&](long, Rng& rng) -> std::optional<char> {
        auto cfg = sample_certified_config(rect, rng);
        if (!cfg) return std::nullopt;
        return static_cast<char>(crossing(*cfg, rect, CrossDir::LeftRight, kBlack));
    });
    MCEstimate est;
    est.seed = seed;
    double hits = 0;
    for (auto& r : recs) {
        if (!r) {
            ++est.n_discarded;
            continue;
        }
        ++est.n_effective;
        hits += *r;
    }
    est.value = est.n_effective ? hits / est.n_effective : 0.0;
    est.stderr_ = binom_stderr(est.value, est.n_effective);
    est.finalize_flag();
    return est;
}

// ---------------------------------------------------------------------------
// Arm battery.
// ---------------------------------------------------------------------------

namespace {

struct ArmRec {
    std::vector<uint8_t> hits;
    int violations = 0;
    int hat_misses = 0;
};

}  // namespace

std::vector<MCEstimate> estimate_arm_battery(const std::vector<ArmQuery>& queries,
                                             const ArmBatteryOptions& opts, uint64_t seed) {
    if (queries.empty()) throw estimator_error("estimate_arm_battery: no queries");
    double maxR = 0.0;
    for (const auto& q : queries) {
        if (q.r > q.R) throw estimator_error("estimate_arm_battery: r > R");
        maxR = std::max(maxR, q.R);
    }
    const Window roi = Window::box({0, 0}, maxR);

    auto replica = [&](long, Rng& rng) -> std::optional<ArmRec> {
        auto cfg = sample_certified_config(roi, rng);
        if (!cfg) return std::nullopt;
        ArmRec rec;
        rec.hits.resize(queries.size());
        for (size_t qi = 0; qi < queries.size(); ++qi) {
            const ArmQuery& q = queries[qi];
            const AnnulusSpec ann{{0, 0}, q.r, q.R};
            ArmContext ctx(cfg->t(), ann, q.arms);
            bool hit = ctx.eval(cfg->colors);
            rec.hits[qi] = hit;
            if (hit && opts.per_sample_checks) {
                // annulus nesting: shrink the outer radius / grow the inner
                double Rmid = std::max(q.r, q.R / 2.0);
                double rmid = std::min(q.R, 2.0 * q.r);
                if (Rmid > q.r &&
                    !ArmContext(cfg->t(), {{0, 0}, q.r, Rmid}, q.arms).eval(cfg->colors))
                    ++rec.violations;
                if (rmid < q.R &&
                    !ArmContext(cfg->t(), {{0, 0}, rmid, q.R}, q.arms).eval(cfg->colors))
                    ++rec.violations;
                // arm-count monotonicity via the prefix pattern
                if (q.arms.j >= 2 && q.arms.j % 2 == 0) {
                    ArmSpec prefix = q.arms;
                    prefix.j -= 1;
                    prefix.pattern.pop_back();
                    if (!(prefix.j % 2 == 1 && prefix.region == ArmRegion::FullPlane &&
                          prefix.pattern.front() != prefix.pattern.back())) {
                        if (!ArmContext(cfg->t(), ann, prefix).eval(cfg->colors)) ++rec.violations;
                    }
                }
                if (opts.hat_checks && !hat_arm_event(*cfg, ann, q.arms)) ++rec.hat_misses;
            }
        }
        return rec;
    };

    std::vector<MCEstimate> out(queries.size());
    for (auto& e : out) e.seed = seed;
    std::vector<double> hits(queries.size(), 0.0);
    long done = 0, n_eff = 0, n_disc = 0, viol = 0, hat_miss = 0;
    long batch = opts.policy.initial;
    for (;;) {
        long target = std::min(done + batch, opts.policy.cap);
        std::vector<std::optional<ArmRec>> recs;
        run_replicas<ArmRec>(done, target, seed, etag::kArm, recs, replica);
        for (auto& r : recs) {
            if (!r) {
                ++n_disc;
                continue;
            }
            ++n_eff;
            for (size_t qi = 0; qi < queries.size(); ++qi) hits[qi] += r->hits[qi];
            viol += r->violations;
            hat_miss += r->hat_misses;
        }
        done = target;
        bool all_ok = true;
        for (size_t qi = 0; qi < queries.size() && all_ok; ++qi) {
            double p = n_eff ? hits[qi] / n_eff : 0.0;
            double se = binom_stderr(p, n_eff);
            if (p <= 0.0 || se / p > opts.policy.rel_target) all_ok = false;
        }
        if (!opts.policy.adaptive || all_ok || done >= opts.policy.cap) break;
        batch = done;  // double
    }
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        out[qi].value = n_eff ? hits[qi] / n_eff : 0.0;
        out[qi].stderr_ = binom_stderr(out[qi].value, n_eff);
        out[qi].n_effective = n_eff;
        out[qi].n_discarded = n_disc;
        out[qi].invariant_violations = viol;
        out[qi].hat_violations = hat_miss;
        out[qi].finalize_flag();
    }
    return out;
}

MCEstimate estimate_arm(const ArmSpec& arms, double r, double R, const ReplicaPolicy& policy,
                        uint64_t seed) {
    if (r == R) {
        // convention: the degenerate annulus carries the trivial event
        MCEstimate e;
        e.value = 1.0;
        e.n_effective = 1;
        e.seed = seed;
        return e;
    }
    ArmBatteryOptions opts;
    opts.policy = policy;
    return estimate_arm_battery({{arms, r, R}}, opts, seed)[0];
}

// ---------------------------------------------------------------------------
// Coupled colorings.
// ---------------------------------------------------------------------------

namespace {

struct PairRec {
    uint8_t first = 0, both = 0;
};

// shared-eta replica with omega'' resampled on W
template <typename EvalFn>
std::optional<PairRec> coupled_replica(const Window& roi, const CoupledRegionSpec& W, Rng& rng,
                                       EvalFn&& ev) {
    auto cfg = sample_certified_config(roi, rng);
    if (!cfg) return std::nullopt;
    ColoredConfiguration cfg2 = *cfg;
    for (size_t i = 0; i < cfg2.size(); ++i)
        if (W.contains(cfg2.t().pts.points[i]))
            cfg2.colors[i] = rng.bernoulli(cfg2.p) ? kBlack : kWhite;
    PairRec rec;
    rec.first = ev(*cfg);
    rec.both = rec.first && ev(cfg2);
    return rec;
}

struct PairStats {
    double pa = 0.0, pb = 0.0;  // means of `first` and `both`
    double var_a = 0.0, var_b = 0.0, cov_ab = 0.0;
    long n_eff = 0, n_disc = 0;
};

template <typename MakeRec>
PairStats collect_pairs(long replicas, uint64_t seed, uint64_t tag, MakeRec&& make) {
    std::vector<std::optional<PairRec>> recs;
    run_replicas<PairRec>(0, replicas, seed, tag, recs, make);
    PairStats st;
    double sa = 0, sb = 0;
    for (auto& r : recs) {
        if (!r) {
            ++st.n_disc;
            continue;
        }
        ++st.n_eff;
        sa += r->first;
        sb += r->both;
    }
    if (st.n_eff == 0) return st;
    st.pa = sa / st.n_eff;
    st.pb = sb / st.n_eff;
    st.var_a = st.pa * (1 - st.pa);
    st.var_b = st.pb * (1 - st.pb);
    st.cov_ab = st.pb - st.pa * st.pb;  // E[ab] = E[b] since b <= a
    return st;
}

}  // namespace

QuenchedComparison estimate_quenched_second_moment(const ArmSpec& arms, double r, double R,
                                                   const ReplicaPolicy& policy, uint64_t seed) {
    const Window roi = Window::box({0, 0}, R);
    const AnnulusSpec ann{{0, 0}, r, R};
    CoupledRegionSpec all{CoupledRegionSpec::Kind::All, {}};

    long n = policy.initial;
    PairStats st;
    for (;;) {
        st = collect_pairs(n, seed, etag::kQuenched, [&](long, Rng& rng) {
            return coupled_replica(roi, all, rng, [&](const ColoredConfiguration& c) {
                return ArmContext(c.t(), ann, arms).eval(c.colors);
            });
        });
        bool ok = st.pb > 0 && binom_stderr(st.pb, st.n_eff) / st.pb <= policy.rel_target;
        if (!policy.adaptive || ok || n >= policy.cap) break;
        n = std::min(2 * n, policy.cap);
    }

    QuenchedComparison out;
    out.second_moment.value = st.pb;
    out.second_moment.stderr_ = binom_stderr(st.pb, st.n_eff);
    out.second_moment.n_effective = st.n_eff;
    out.second_moment.n_discarded = st.n_disc;
    out.second_moment.seed = seed;
    out.second_moment.finalize_flag();
    out.annealed = out.second_moment;
    out.annealed.value = st.pa;
    out.annealed.stderr_ = binom_stderr(st.pa, st.n_eff);
    if (st.pa > 0 && st.pb > 0 && st.n_eff > 1) {
        out.ratio = std::sqrt(st.pb) / st.pa;
        // delta method for g(a,b) = sqrt(b)/a
        double ga = -std::sqrt(st.pb) / (st.pa * st.pa);
        double gb = 0.5 / (std::sqrt(st.pb) * st.pa);
        double var = ga * ga * st.var_a + gb * gb * st.var_b + 2 * ga * gb * st.cov_ab;
        out.ratio_stderr = std::sqrt(std::max(var, 0.0) / st.n_eff);
    }
    return out;
}

CoupledFourArm estimate_coupled_fourarm(const CoupledRegionSpec& W, double r, double R,
                                        FourArmVariant variant, const ReplicaPolicy& policy,
                                        uint64_t seed) {
    const Window roi = Window::box({0, 0}, R);
    const AnnulusSpec ann{{0, 0}, r, R};
    const ArmSpec four = ArmSpec::alternating(4);

    auto eval_variant = [&](const ColoredConfiguration& c) -> bool {
        switch (variant) {
            case FourArmVariant::Plain: return ArmContext(c.t(), ann, four).eval(c.colors);
            case FourArmVariant::Hat: return hat_arm_event(c, ann, four, HatKind::Annulus);
            case FourArmVariant::Ext: return hat_arm_event(c, ann, four, HatKind::Exterior);
            case FourArmVariant::Int: return hat_arm_event(c, ann, four, HatKind::Interior);
        }
        return false;
    };

    // record: (plain on omega', variant on both)
    struct Rec {
        uint8_t plain1 = 0, var_both = 0, var1 = 0;
    };
    long n = policy.initial;
    double s_plain = 0, s_both = 0, s_var1 = 0, s_joint = 0;
    long n_eff = 0, n_disc = 0;
    for (;;) {
        std::vector<std::optional<Rec>> recs;
        run_replicas<Rec>(0, n, seed, etag::kCoupled, recs, [&](long, Rng& rng) -> std::optional<Rec> {
            auto cfg = sample_certified_config(roi, rng);
            if (!cfg) return std::nullopt;
            ColoredConfiguration cfg2 = *cfg;
            for (size_t i = 0; i < cfg2.size(); ++i)
                if (W.contains(cfg2.t().pts.points[i]))
                    cfg2.colors[i] = rng.bernoulli(cfg2.p) ? kBlack : kWhite;
            Rec rec;
            rec.plain1 = ArmContext(cfg->t(), ann, four).eval(cfg->colors);
            rec.var1 = eval_variant(*cfg);
            rec.var_both = rec.var1 && eval_variant(cfg2);
            return rec;
        });
        s_plain = s_both = s_var1 = s_joint = 0;
        n_eff = n_disc = 0;
        for (auto& rr : recs) {
            if (!rr) {
                ++n_disc;
                continue;
            }
            ++n_eff;
            s_plain += rr->plain1;
            s_both += rr->var_both;
            s_var1 += rr->var1;
            s_joint += rr->plain1 && rr->var_both;
        }
        double pb = n_eff ? s_both / n_eff : 0.0;
        bool ok = pb > 0 && binom_stderr(pb, n_eff) / pb <= policy.rel_target;
        if (!policy.adaptive || ok || n >= policy.cap) break;
        n = std::min(2 * n, policy.cap);
    }

    CoupledFourArm out;
    out.beta.value = n_eff ? s_both / n_eff : 0.0;
    out.beta.stderr_ = binom_stderr(out.beta.value, n_eff);
    out.beta.n_effective = n_eff;
    out.beta.n_discarded = n_disc;
    out.beta.seed = seed;
    out.beta.finalize_flag();
    out.alpha_plain = out.beta;
    out.alpha_plain.value = n_eff ? s_plain / n_eff : 0.0;
    out.alpha_plain.stderr_ = binom_stderr(out.alpha_plain.value, n_eff);
    if (out.alpha_plain.value > 0 && n_eff > 1) {
        double a = out.alpha_plain.value, b = out.beta.value;
        out.ratio = b / a;
        // delta method for b/a; cov(a,b) estimated from indicators
        // (b <= a only for the plain variant, so use the generic form)
        double cov_ab = s_joint / n_eff - a * b;
        double var = (b * (1 - b)) / (a * a) + (b * b / (a * a * a * a)) * a * (1 - a) -
                     2.0 * (b / (a * a * a)) * cov_ab;
        out.ratio_stderr = std::sqrt(std::max(var, 0.0) / n_eff);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quasi-multiplicativity.
// ---------------------------------------------------------------------------

QmRatio qm_ratio(const ArmSpec& arms, double r1, double r2, double r3, const ReplicaPolicy& policy,
                 uint64_t seed) {
    if (!(r1 <= r2 && r2 <= r3)) throw estimator_error("qm_ratio: need r1 <= r2 <= r3");
    const Window roi = Window::box({0, 0}, r3);
    struct Rec {
        uint8_t a12 = 0, a23 = 0, a13 = 0;
    };

    long n = policy.initial;
    double s12 = 0, s23 = 0, s13 = 0, s12_23 = 0, s12_13 = 0, s23_13 = 0;
    long n_eff = 0, n_disc = 0;
    for (;;) {
        std::vector<std::optional<Rec>> recs;
        run_replicas<Rec>(0, n, seed, etag::kQm, recs, [&](long, Rng& rng) -> std::optional<Rec> {
            auto cfg = sample_certified_config(roi, rng);
            if (!cfg) return std::nullopt;
            Rec rec;
            rec.a12 = r1 == r2 || ArmContext(cfg->t(), {{0, 0}, r1, r2}, arms).eval(cfg->colors);
            rec.a23 = r2 == r3 || ArmContext(cfg->t(), {{0, 0}, r2, r3}, arms).eval(cfg->colors);
            rec.a13 = r1 == r3 || ArmContext(cfg->t(), {{0, 0}, r1, r3}, arms).eval(cfg->colors);
            return rec;
        });
        s12 = s23 = s13 = s12_23 = s12_13 = s23_13 = 0;
        n_eff = n_disc = 0;
        for (auto& rr : recs) {
            if (!rr) {
                ++n_disc;
                continue;
            }
            ++n_eff;
            s12 += rr->a12;
            s23 += rr->a23;
            s13 += rr->a13;
            s12_23 += rr->a12 && rr->a23;
            s12_13 += rr->a12 && rr->a13;
            s23_13 += rr->a23 && rr->a13;
        }
        double p13 = n_eff ? s13 / n_eff : 0.0;
        bool ok = p13 > 0 && binom_stderr(p13, n_eff) / p13 <= policy.rel_target;
        if (!policy.adaptive || ok || n >= policy.cap) break;
        n = std::min(2 * n, policy.cap);
    }

    QmRatio out;
    auto fill = [&](MCEstimate& e, double s) {
        e.value = n_eff ? s / n_eff : 0.0;
        e.stderr_ = binom_stderr(e.value, n_eff);
        e.n_effective = n_eff;
        e.n_discarded = n_disc;
        e.seed = seed;
        e.finalize_flag();
    };
    fill(out.a12, s12);
    fill(out.a23, s23);
    fill(out.a13, s13);
    double a = out.a12.value, b = out.a23.value, c = out.a13.value;
    if (a > 0 && b > 0 && c > 0 && n_eff > 1) {
        out.ratio = c / (a * b);
        // delta method with the full 3x3 indicator covariance
        double cab = s12_23 / n_eff - a * b;
        double cac = s12_13 / n_eff - a * c;
        double cbc = s23_13 / n_eff - b * c;
        double ga = -c / (a * a * b), gb = -c / (a * b * b), gc = 1.0 / (a * b);
        double var = ga * ga * a * (1 - a) + gb * gb * b * (1 - b) + gc * gc * c * (1 - c) +
                     2 * ga * gb * cab + 2 * ga * gc * cac + 2 * gb * gc * cbc;
        out.stderr_ = std::sqrt(std::max(var, 0.0) / n_eff);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Noise covariance.
// ---------------------------------------------------------------------------

NoiseCurve estimate_noise_covariance(const DynamicsSpec& dyn, double n, std::vector<double> ts,
                                     long replicas, uint64_t seed, double alpha4_hat) {
    std::sort(ts.begin(), ts.end());
    if (ts.empty() || ts.front() < 0.0) throw estimator_error("noise: bad t grid");
    const Window rect{0.0, n, 0.0, n};
    const double horizon = std::max(ts.back(), 1e-6);
    const Event gn = [rect](const ColoredConfiguration& c) {
        return crossing(c, rect, CrossDir::LeftRight, kBlack);
    };

    struct Rec {
        std::vector<char> vals;
        char ok = 1;
    };
    std::vector<std::optional<Rec>> recs;
    run_replicas<Rec>(0, replicas, seed, etag::kNoise, recs, [&](long, Rng& rng) -> std::optional<Rec> {
        auto cfg = sample_certified_config(rect, rng);
        if (!cfg) return std::nullopt;
        Rec rec;
        switch (dyn.kind) {
            case DynamicsSpec::Kind::Frozen: {
                FrozenTrajectory traj = simulate_frozen(*cfg, horizon, rng);
                rec.vals = indicator_path(traj, gn, ts);
                break;
            }
            case DynamicsSpec::Kind::Moving: {
                MovingTrajectory traj =
                    simulate_moving(*cfg, rect, horizon + dyn.dt, dyn.dt, dyn.mover, rng);
                for (double t : ts) {
                    MovingSnapshot s = traj.snapshot(traj.step_of(t));
                    if (!s.padding_valid) return std::nullopt;
                    rec.vals.push_back(gn(s.cfg));
                }
                break;
            }
            case DynamicsSpec::Kind::Mixed: {
                MixedTrajectory traj =
                    simulate_mixed(*cfg, rect, horizon + dyn.dt, dyn.dt, dyn.mover, rng);
                for (double t : ts) {
                    MovingSnapshot s = traj.snapshot_at(t);
                    if (!s.padding_valid) return std::nullopt;
                    rec.vals.push_back(gn(s.cfg));
                }
                break;
            }
        }
        return rec;
    });

    NoiseCurve curve;
    curve.t = ts;
    if (ts.front() != 0.0) throw estimator_error("noise: t grid must start at 0");
    std::vector<const Rec*> good;
    for (auto& r : recs) {
        if (!r) {
            ++curve.n_discarded;
            continue;
        }
        ++curve.n_effective;
        good.push_back(&*r);
    }
    const long N = curve.n_effective;
    if (N == 0) return curve;
    double m0 = 0.0;
    for (auto* r : good) m0 += r->vals[0];
    m0 /= N;
    for (size_t k = 0; k < ts.size(); ++k) {
        double mt = 0.0, mp = 0.0;
        for (auto* r : good) {
            mt += r->vals[k];
            mp += r->vals[0] && r->vals[k];
        }
        mt /= N;
        mp /= N;
        double cov = mp - m0 * mt;
        double var_term = 0.0;
        for (auto* r : good) {
            double z = (r->vals[0] - m0) * (r->vals[k] - mt);
            var_term += (z - cov) * (z - cov);
        }
        curve.cov.push_back(cov);
        curve.cov_stderr.push_back(N > 1 ? std::sqrt(var_term / (N - 1) / N) : 0.0);
        curve.companion.push_back(ts[k] * n * n * alpha4_hat);
    }
    curve.var0 = curve.cov[0];
    curve.var0_stderr = curve.cov_stderr[0];
    return curve;
}

// ---------------------------------------------------------------------------
// Pivotal sum.
// ---------------------------------------------------------------------------

PivotalSum estimate_pivotal_sum(double n, long replicas, uint64_t seed, int margin_boxes,
                                long alpha4_replicas) {
    const Window rect{0.0, n, 0.0, n};
    const int lo = -margin_boxes, hi = static_cast<int>(std::ceil(n)) + margin_boxes;
    struct Rec {
        int inside = 0, outside = 0;
    };
    std::vector<std::optional<Rec>> recs;
    run_replicas<Rec>(0, replicas, seed, etag::kPivSum, recs, [&](long, Rng& rng) -> std::optional<Rec> {
        auto cfg = sample_certified_config(rect, rng);
        if (!cfg) return std::nullopt;
        Rec rec;
        for (int bx = lo; bx < hi; ++bx)
            for (int by = lo; by < hi; ++by) {
                Window box{static_cast<double>(bx), bx + 1.0, static_cast<double>(by), by + 1.0};
                if (pivotal_box_monotone_crossing(*cfg, box, rect, CrossDir::LeftRight)) {
                    bool inside = bx >= 0 && bx < n && by >= 0 && by < n;
                    (inside ? rec.inside : rec.outside) += 1;
                }
            }
        return rec;
    });

    PivotalSum out;
    std::vector<double> totals;
    double sum_out = 0.0;
    for (auto& r : recs) {
        if (!r) {
            ++out.n_discarded;
            continue;
        }
        ++out.n_effective;
        totals.push_back(r->inside + r->outside);
        sum_out += r->outside;
    }
    if (out.n_effective == 0) return out;
    double mean = 0.0;
    for (double v : totals) mean += v;
    mean /= out.n_effective;
    double var = 0.0;
    for (double v : totals) var += (v - mean) * (v - mean);
    out.sum = mean;
    out.sum_stderr = out.n_effective > 1
                         ? std::sqrt(var / (out.n_effective - 1) / out.n_effective)
                         : 0.0;
    out.outside_sum = sum_out / out.n_effective;

    out.alpha4 = estimate_arm(ArmSpec::alternating(4), 1.0, n, ReplicaPolicy::fixed(alpha4_replicas),
                              derive_seed(seed, 0xA4));
    out.companion = n * n * out.alpha4.value;
    out.ratio = out.companion > 0 ? out.sum / out.companion : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// X_R moments.
// ---------------------------------------------------------------------------

std::vector<XRMomentRow> estimate_xr_moments(const DynamicsSpec& dyn, const std::vector<double>& Rs,
                                             long replicas, uint64_t seed, long alpha1_replicas,
                                             int resolution) {
    std::vector<XRMomentRow> rows;
    for (size_t ri = 0; ri < Rs.size(); ++ri) {
        const double R = Rs[ri];
        const Window roi = Window::box({0, 0}, R);
        std::vector<std::optional<double>> recs;
        run_replicas<double>(0, replicas, seed, etag::kXr + 16 * ri, recs,
                             [&](long, Rng& rng) -> std::optional<double> {
                                 auto cfg = sample_certified_config(roi, rng);
                                 if (!cfg) return std::nullopt;
                                 switch (dyn.kind) {
                                     case DynamicsSpec::Kind::Frozen: {
                                         FrozenTrajectory traj = simulate_frozen(*cfg, 1.0, rng);
                                         return integral_X_R(traj, R).value;
                                     }
                                     case DynamicsSpec::Kind::Moving: {
                                         MovingTrajectory traj = simulate_moving(
                                             *cfg, roi, 1.0 + dyn.dt, dyn.dt, dyn.mover, rng);
                                         XRResult xr = integral_X_R(traj, R, resolution);
                                         if (!xr.padding_ok) return std::nullopt;
                                         return xr.value;
                                     }
                                     case DynamicsSpec::Kind::Mixed: {
                                         MixedTrajectory traj = simulate_mixed(
                                             *cfg, roi, 1.0 + dyn.dt, dyn.dt, dyn.mover, rng);
                                         XRResult xr = integral_X_R(traj, R, resolution);
                                         if (!xr.padding_ok) return std::nullopt;
                                         return xr.value;
                                     }
                                 }
                                 return std::nullopt;
                             });
        XRMomentRow row;
        row.R = R;
        std::vector<double> xs;
        for (auto& r : recs) {
            if (!r) {
                ++row.n_discarded;
                continue;
            }
            ++row.n_effective;
            xs.push_back(*r);
        }
        const long N = row.n_effective;
        if (N > 1) {
            double s1 = 0, s2 = 0;
            for (double x : xs) {
                s1 += x;
                s2 += x * x;
            }
            row.mean = s1 / N;
            row.second = s2 / N;
            double v1 = 0, v2 = 0;
            for (double x : xs) {
                v1 += (x - row.mean) * (x - row.mean);
                v2 += (x * x - row.second) * (x * x - row.second);
            }
            row.mean_stderr = std::sqrt(v1 / (N - 1) / N);
            row.second_stderr = std::sqrt(v2 / (N - 1) / N);
            row.ratio = row.mean > 0 ? row.second / (row.mean * row.mean) : 0.0;
            // deterministic bootstrap for the ratio interval
            std::vector<double> boots;
            Rng brng(seed, stream::kBootstrap, ri);
            for (int b = 0; b < 200; ++b) {
                double b1 = 0, b2 = 0;
                for (long k = 0; k < N; ++k) {
                    double x = xs[brng.below(static_cast<uint64_t>(N))];
                    b1 += x;
                    b2 += x * x;
                }
                b1 /= N;
                b2 /= N;
                if (b1 > 0) boots.push_back(b2 / (b1 * b1));
            }
            std::sort(boots.begin(), boots.end());
            if (!boots.empty()) {
                row.ratio_lo = boots[static_cast<size_t>(0.005 * boots.size())];
                row.ratio_hi = boots[std::min(boots.size() - 1,
                                              static_cast<size_t>(0.995 * boots.size()))];
            }
        }
        row.alpha1 = estimate_arm(ArmSpec::alternating(1), 1.0, R,
                                  ReplicaPolicy::fixed(alpha1_replicas), derive_seed(seed, 0xA1 + ri));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Power-law fit.
// ---------------------------------------------------------------------------

PowerFit fit_power_law(const std::vector<PowerPoint>& pts) {
    PowerFit fit;
    std::vector<PowerPoint> used;
    for (const auto& p : pts) {
        if (p.value > 0.0 && p.x > 0.0)
            used.push_back(p);
        else
            ++fit.points_dropped;
    }
    if (used.size() < 3) throw estimator_error("fit_power_law: need >= 3 positive points");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : used) {
        double se_log = p.stderr_ > 0 ? p.stderr_ / p.value : 1e-12;
        double w = 1.0 / (se_log * se_log);
        double x = std::log(p.x), y = std::log(p.value);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    double det = sw * sxx - sx * sx;
    if (det <= 0) throw estimator_error("fit_power_law: degenerate design");
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
    fit.slope_stderr = std::sqrt(sw / det);
    fit.points_used = static_cast<int>(used.size());
    return fit;
}

}  // namespace voroperc
