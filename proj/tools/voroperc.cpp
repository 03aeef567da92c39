// voroperc: reproducible experiment runner for planar Voronoi percolation,
// its dynamics, and its spectral-sample machinery.
//
// Every experiment is described by a JSON config (schema
// voroperc.experiment.v1); subcommands are sugar that assembles the config
// from flags. Results are CSV rows written atomically; wall-clock time and
// other non-reproducible diagnostics go to a sidecar .log.json.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "voroperc/dynamics.hpp"
#include "voroperc/estimators.hpp"
#include "voroperc/io.hpp"
#include "voroperc/spectral.hpp"

using json = nlohmann::ordered_json;
using namespace voroperc;

namespace {

struct config_error : std::runtime_error {
    std::string field;
    config_error(const std::string& msg, std::string f)
        : std::runtime_error(msg), field(std::move(f)) {}
};

double jget_num(const json& j, const std::string& key, double def, bool required = false) {
    if (!j.contains(key)) {
        if (required) throw config_error("missing required field", key);
        return def;
    }
    if (!j.at(key).is_number()) throw config_error("expected a number", key);
    return j.at(key).get<double>();
}

long jget_int(const json& j, const std::string& key, long def, bool required = false) {
    if (!j.contains(key)) {
        if (required) throw config_error("missing required field", key);
        return def;
    }
    if (!j.at(key).is_number_integer()) throw config_error("expected an integer", key);
    return j.at(key).get<long>();
}

std::string jget_str(const json& j, const std::string& key, const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) throw config_error("expected a string", key);
    return j.at(key).get<std::string>();
}

std::vector<double> jget_vec(const json& j, const std::string& key, std::vector<double> def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_array()) throw config_error("expected an array", key);
    std::vector<double> out;
    for (const auto& v : j.at(key)) out.push_back(v.get<double>());
    return out;
}

ArmRegion region_of(const std::string& s, const std::string& field) {
    if (s == "full") return ArmRegion::FullPlane;
    if (s == "half") return ArmRegion::HalfPlane;
    if (s == "quarter") return ArmRegion::QuarterPlane;
    throw config_error("region must be full|half|quarter", field);
}

ArmSpec arms_of(const json& p) {
    int j = static_cast<int>(jget_int(p, "j", 1));
    ArmRegion reg = region_of(jget_str(p, "region", "full"), "region");
    return ArmSpec::alternating(j, reg);
}

DynamicsSpec dynamics_of(const json& p) {
    DynamicsSpec d;
    std::string kind = jget_str(p, "dynamics", "frozen");
    if (kind == "frozen")
        d.kind = DynamicsSpec::Kind::Frozen;
    else if (kind == "moving")
        d.kind = DynamicsSpec::Kind::Moving;
    else if (kind == "mixed")
        d.kind = DynamicsSpec::Kind::Mixed;
    else
        throw config_error("dynamics must be frozen|moving|mixed", "dynamics");
    std::string mv = jget_str(p, "mover", "brownian");
    double alpha = jget_num(p, "alpha", 1.0);
    if (mv == "zero")
        d.mover = MoverKind::zero();
    else if (mv == "brownian")
        d.mover = MoverKind::brownian();
    else if (mv == "stable")
        d.mover = MoverKind::stable(alpha);
    else if (mv == "pareto")
        d.mover = MoverKind::compound_pareto(alpha, jget_num(p, "rate", 1.0));
    else
        throw config_error("mover must be zero|brownian|stable|pareto", "mover");
    d.dt = jget_num(p, "dt", 0.01);
    return d;
}

EventSpec event_of(const json& p) {
    std::string kind = jget_str(p, "event", "crossing");
    if (kind == "crossing") {
        double n = jget_num(p, "n", 2.0);
        return EventSpec::crossing({0.0, n, 0.0, n});
    }
    if (kind == "one-arm") return EventSpec::one_arm(jget_num(p, "R", 3.0));
    if (kind == "arm") {
        AnnulusSpec ann{{0, 0}, jget_num(p, "r", 1.0), jget_num(p, "R", 3.0)};
        return EventSpec::arm(ann, arms_of(p));
    }
    throw config_error("event must be crossing|one-arm|arm", "event");
}

ReplicaPolicy policy_of(const json& p, long default_replicas) {
    if (jget_str(p, "replica_policy", "fixed") == "adaptive")
        return ReplicaPolicy::until_rel(jget_num(p, "rel_target", 0.05),
                                        jget_int(p, "replicas", default_replicas),
                                        jget_int(p, "replica_cap", 10000000));
    return ReplicaPolicy::fixed(jget_int(p, "replicas", default_replicas));
}

std::string params_echo(const json& p) { return p.dump(); }

struct RunOutput {
    std::vector<ResultRow> rows;
    // extra artifacts: (suffix appended to out path, content)
    std::vector<std::pair<std::string, std::string>> extra;
};

// ---------------------------------------------------------------------------
// Experiment implementations.
// ---------------------------------------------------------------------------

RunOutput run_sample(const json& p, uint64_t seed) {
    double n = jget_num(p, "n", 10.0, true);
    Window w{0.0, n, 0.0, n};
    PointSet ps = sample_poisson(w, jget_num(p, "intensity", 1.0), seed);
    RunOutput out;
    MCEstimate e;
    e.value = static_cast<double>(ps.size());
    e.n_effective = 1;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("sample.count", params_echo(p), e));
    out.extra.emplace_back(".pointset.json", pointset_to_json(ps));
    return out;
}

RunOutput run_tessellate(const json& p, uint64_t seed) {
    double n = jget_num(p, "n", 10.0, true);
    Window w{0.0, n, 0.0, n};
    PointSet ps = sample_poisson(w, jget_num(p, "intensity", 1.0), seed);
    Tessellation t = build_tessellation(ps);
    RunOutput out;
    MCEstimate e;
    long edges = 0;
    for (const auto& a : t.adj) edges += static_cast<long>(a.size());
    e.value = static_cast<double>(edges / 2);
    e.n_effective = 1;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("tessellate.edges", params_echo(p), e));
    out.extra.emplace_back(".tessellation.json", tessellation_to_json(t));
    return out;
}

RunOutput run_crossing(const json& p, uint64_t seed) {
    double w = jget_num(p, "width", jget_num(p, "n", 8.0));
    double h = jget_num(p, "height", jget_num(p, "n", 8.0));
    MCEstimate e = estimate_crossing(w, h, jget_int(p, "replicas", 10000), seed);
    RunOutput out;
    out.rows.push_back(ResultRow::from("crossing", params_echo(p), e));
    return out;
}

RunOutput run_arms(const json& p, uint64_t seed) {
    double r = jget_num(p, "r", 1.0), R = jget_num(p, "R", 8.0, true);
    MCEstimate e = estimate_arm(arms_of(p), r, R, policy_of(p, 10000), seed);
    RunOutput out;
    out.rows.push_back(ResultRow::from("arm", params_echo(p), e));
    return out;
}

RunOutput run_hat_arms(const json& p, uint64_t seed) {
    double r = jget_num(p, "r", 2.0), R = jget_num(p, "R", 8.0, true);
    std::string variant = jget_str(p, "variant", "hat");
    HatKind kind = variant == "ext"   ? HatKind::Exterior
                   : variant == "int" ? HatKind::Interior
                                      : HatKind::Annulus;
    ArmSpec arms = arms_of(p);
    AnnulusSpec ann{{0, 0}, r, R};
    Window roi = Window::box({0, 0}, R);
    long replicas = jget_int(p, "replicas", 10000);
    MCEstimate e;
    e.seed = seed;
    double hits = 0;
    for (long k = 0; k < replicas; ++k) {
        Rng rng(seed, stream::kReplica, static_cast<uint64_t>(k));
        auto cfg = sample_certified_config(roi, rng);
        if (!cfg) {
            ++e.n_discarded;
            continue;
        }
        ++e.n_effective;
        hits += hat_arm_event(*cfg, ann, arms, kind);
    }
    e.value = e.n_effective ? hits / e.n_effective : 0.0;
    e.stderr_ = e.n_effective ? std::sqrt(e.value * (1 - e.value) / e.n_effective) : 0.0;
    e.finalize_flag();
    RunOutput out;
    out.rows.push_back(ResultRow::from("hat-arm", params_echo(p), e));
    return out;
}

RunOutput run_qm(const json& p, uint64_t seed) {
    QmRatio q = qm_ratio(arms_of(p), jget_num(p, "r1", 2.0), jget_num(p, "r2", 8.0),
                         jget_num(p, "r3", 32.0), policy_of(p, 30000), seed);
    RunOutput out;
    MCEstimate ratio;
    ratio.value = q.ratio;
    ratio.stderr_ = q.stderr_;
    ratio.n_effective = q.a13.n_effective;
    ratio.n_discarded = q.a13.n_discarded;
    ratio.seed = seed;
    out.rows.push_back(ResultRow::from("qm.ratio", params_echo(p), ratio));
    out.rows.push_back(ResultRow::from("qm.a12", params_echo(p), q.a12));
    out.rows.push_back(ResultRow::from("qm.a23", params_echo(p), q.a23));
    out.rows.push_back(ResultRow::from("qm.a13", params_echo(p), q.a13));
    return out;
}

RunOutput run_quenched_moment(const json& p, uint64_t seed) {
    QuenchedComparison q = estimate_quenched_second_moment(
        arms_of(p), jget_num(p, "r", 2.0), jget_num(p, "R", 16.0), policy_of(p, 20000), seed);
    RunOutput out;
    out.rows.push_back(ResultRow::from("quenched.alpha_tilde_sq", params_echo(p), q.second_moment));
    out.rows.push_back(ResultRow::from("quenched.alpha_an", params_echo(p), q.annealed));
    MCEstimate ratio;
    ratio.value = q.ratio;
    ratio.stderr_ = q.ratio_stderr;
    ratio.n_effective = q.second_moment.n_effective;
    ratio.seed = seed;
    out.rows.push_back(ResultRow::from("quenched.ratio", params_echo(p), ratio));
    return out;
}

RunOutput run_coupled_fourarm(const json& p, uint64_t seed, bool halfplane_sugar) {
    CoupledRegionSpec W;
    std::string wname = halfplane_sugar ? "halfplane" : jget_str(p, "W", "all");
    if (wname == "none")
        W.kind = CoupledRegionSpec::Kind::None;
    else if (wname == "all")
        W.kind = CoupledRegionSpec::Kind::All;
    else if (wname == "halfplane")
        W.kind = CoupledRegionSpec::Kind::UpperHalfPlane;
    else if (wname == "box") {
        W.kind = CoupledRegionSpec::Kind::Box;
        auto b = jget_vec(p, "box", {});
        if (b.size() != 4) throw config_error("box must be [x0,x1,y0,y1]", "box");
        W.box = {b[0], b[1], b[2], b[3]};
    } else
        throw config_error("W must be none|all|halfplane|box", "W");

    std::string vname = jget_str(p, "variant", halfplane_sugar ? "hat" : "plain");
    FourArmVariant variant = vname == "hat"   ? FourArmVariant::Hat
                             : vname == "ext" ? FourArmVariant::Ext
                             : vname == "int" ? FourArmVariant::Int
                                              : FourArmVariant::Plain;
    CoupledFourArm res =
        estimate_coupled_fourarm(W, jget_num(p, "r", 2.0), jget_num(p, "R", 16.0), variant,
                                 policy_of(p, 20000), seed);
    RunOutput out;
    const char* name = halfplane_sugar ? "halfplane-fourarm" : "coupled-fourarm";
    out.rows.push_back(ResultRow::from(std::string(name) + ".beta", params_echo(p), res.beta));
    out.rows.push_back(
        ResultRow::from(std::string(name) + ".alpha4", params_echo(p), res.alpha_plain));
    MCEstimate ratio;
    ratio.value = res.ratio;
    ratio.stderr_ = res.ratio_stderr;
    ratio.n_effective = res.beta.n_effective;
    ratio.seed = seed;
    out.rows.push_back(ResultRow::from(std::string(name) + ".ratio", params_echo(p), ratio));
    return out;
}

RunOutput run_noise(const json& p, uint64_t seed) {
    double n = jget_num(p, "n", 16.0, true);
    std::vector<double> ts = jget_vec(p, "t", {0.0, 0.01, 0.05, 0.25, 1.0, 5.0, 50.0});
    long replicas = jget_int(p, "replicas", 10000);
    long a4rep = jget_int(p, "alpha4_replicas", 20000);
    MCEstimate a4 = estimate_arm(ArmSpec::alternating(4), 1.0, n, ReplicaPolicy::fixed(a4rep),
                                 derive_seed(seed, 0xA4));
    NoiseCurve curve = estimate_noise_covariance(dynamics_of(p), n, ts, replicas, seed, a4.value);
    RunOutput out;
    out.rows.push_back(ResultRow::from("noise.alpha4", params_echo(p), a4));
    for (size_t k = 0; k < curve.t.size(); ++k) {
        MCEstimate e;
        e.value = curve.cov[k];
        e.stderr_ = curve.cov_stderr[k];
        e.n_effective = curve.n_effective;
        e.n_discarded = curve.n_discarded;
        e.seed = seed;
        json pk = p;
        pk["t_value"] = curve.t[k];
        pk["companion"] = curve.companion[k];
        out.rows.push_back(ResultRow::from("noise.cov", pk.dump(), e));
    }
    std::string gp = "set logscale x\nset xlabel 't'\nset ylabel 'Cov'\n"
                     "plot 'noise.csv' using 1:2 with yerrorlines\n";
    out.extra.emplace_back(".gp", gp);
    return out;
}

RunOutput run_pivotal_sum(const json& p, uint64_t seed) {
    PivotalSum ps = estimate_pivotal_sum(jget_num(p, "n", 8.0, true),
                                         jget_int(p, "replicas", 200), seed,
                                         static_cast<int>(jget_int(p, "margin_boxes", 3)),
                                         jget_int(p, "alpha4_replicas", 20000));
    RunOutput out;
    MCEstimate sum;
    sum.value = ps.sum;
    sum.stderr_ = ps.sum_stderr;
    sum.n_effective = ps.n_effective;
    sum.n_discarded = ps.n_discarded;
    sum.seed = seed;
    out.rows.push_back(ResultRow::from("pivotal-sum.sum", params_echo(p), sum));
    out.rows.push_back(ResultRow::from("pivotal-sum.alpha4", params_echo(p), ps.alpha4));
    MCEstimate ratio;
    ratio.value = ps.ratio;
    ratio.n_effective = ps.n_effective;
    ratio.seed = seed;
    out.rows.push_back(ResultRow::from("pivotal-sum.ratio", params_echo(p), ratio));
    MCEstimate outside;
    outside.value = ps.outside_sum;
    outside.n_effective = ps.n_effective;
    outside.seed = seed;
    out.rows.push_back(ResultRow::from("pivotal-sum.outside", params_echo(p), outside));
    return out;
}

RunOutput run_xr_moments(const json& p, uint64_t seed) {
    std::vector<double> Rs = jget_vec(p, "R", {4.0, 8.0});
    auto rows = estimate_xr_moments(dynamics_of(p), Rs, jget_int(p, "replicas", 2000), seed,
                                    jget_int(p, "alpha1_replicas", 20000),
                                    static_cast<int>(jget_int(p, "resolution", 100)));
    RunOutput out;
    for (const auto& r : rows) {
        json pk = p;
        pk["R_value"] = r.R;
        MCEstimate m;
        m.value = r.mean;
        m.stderr_ = r.mean_stderr;
        m.n_effective = r.n_effective;
        m.n_discarded = r.n_discarded;
        m.seed = seed;
        out.rows.push_back(ResultRow::from("xr.mean", pk.dump(), m));
        MCEstimate m2;
        m2.value = r.second;
        m2.stderr_ = r.second_stderr;
        m2.n_effective = r.n_effective;
        m2.seed = seed;
        out.rows.push_back(ResultRow::from("xr.second", pk.dump(), m2));
        MCEstimate rat;
        rat.value = r.ratio;
        rat.stderr_ = 0.5 * (r.ratio_hi - r.ratio_lo);
        rat.n_effective = r.n_effective;
        rat.seed = seed;
        out.rows.push_back(ResultRow::from("xr.ratio", pk.dump(), rat));
        out.rows.push_back(ResultRow::from("xr.alpha1", pk.dump(), r.alpha1));
    }
    return out;
}

RunOutput run_spectral_tabulate(const json& p, uint64_t seed) {
    EventSpec ev = event_of(p);
    BoolTable t = tabulate_event(ev, seed, static_cast<int>(jget_int(p, "cap", 24)));
    SpectrumTable spec = fourier_transform(t);
    RunOutput out;
    MCEstimate e;
    e.value = static_cast<double>(t.m);
    e.n_effective = 1;
    e.n_discarded = t.rejections;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("spectral.m", params_echo(p), e));
    std::string bin(reinterpret_cast<const char*>(spec.coef.data()),
                    spec.coef.size() * sizeof(double));
    out.extra.emplace_back(".spectrum.bin", bin);
    json hdr;
    hdr["m"] = spec.m;
    hdr["event"] = jget_str(p, "event", "crossing");
    hdr["points"] = t.relevant;
    hdr["order"] = "subset-bitmask, bit k = color of points[k], +1 <-> 1";
    out.extra.emplace_back(".spectrum.json", hdr.dump());
    return out;
}

RunOutput run_spectral_sample(const json& p, uint64_t seed) {
    EventSpec ev = event_of(p);
    long draws = jget_int(p, "draws", 1000);
    int cap = static_cast<int>(jget_int(p, "cap", 16));
    Rng rng(seed, stream::kSpectralDraw, 2);
    std::vector<long> hist(33, 0);
    for (long d = 0; d < draws; ++d) {
        AnnealedDraw a = draw_annealed_sample(ev, rng, cap);
        hist[std::popcount(a.subset)]++;
    }
    RunOutput out;
    for (int k = 0; k < 33; ++k) {
        if (hist[k] == 0 && k > 0) continue;
        MCEstimate e;
        e.value = static_cast<double>(hist[k]) / draws;
        e.stderr_ = std::sqrt(std::max(e.value * (1 - e.value), 0.0) / draws);
        e.n_effective = draws;
        e.seed = seed;
        json pk = p;
        pk["size"] = k;
        out.rows.push_back(ResultRow::from("spectral-sample.p_size", pk.dump(), e));
    }
    return out;
}

RunOutput run_cov_identity(const json& p, uint64_t seed) {
    EventSpec ev = event_of(p);
    std::vector<double> ts = jget_vec(p, "t", {0.0, 0.1, 0.7, 3.0, 50.0});
    long instances = jget_int(p, "instances", 20);
    int cap = static_cast<int>(jget_int(p, "cap", 12));
    RunOutput out;
    Rng rng(seed, stream::kSpectralDraw, 3);
    double worst = 0.0;
    for (long i = 0; i < instances; ++i) {
        BoolTable t = tabulate_event_rng(ev, rng, cap);
        CovIdentityReport rep = check_cov_identity(t, ts);
        worst = std::max(worst, rep.max_abs_err);
    }
    MCEstimate e;
    e.value = worst;
    e.n_effective = instances;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("cov-identity.max_abs_err", params_echo(p), e));
    return out;
}

RunOutput run_spectral_pivotal(const json& p, uint64_t seed) {
    EventSpec ev = event_of(p);
    long instances = jget_int(p, "instances", 100);
    int cap = static_cast<int>(jget_int(p, "cap", 12));
    auto g = jget_vec(p, "G", {0.0, 1.0, 0.0, 1.0});
    if (g.size() != 4) throw config_error("G must be [x0,x1,y0,y1]", "G");
    Window G{g[0], g[1], g[2], g[3]};
    Rng rng(seed, stream::kSpectralDraw, 4);
    long violations = 0;
    double min_slack = 1e300;
    for (long i = 0; i < instances; ++i) {
        BoolTable t = tabulate_event_rng(ev, rng, cap);
        SpectrumTable spec = fourier_transform(t);
        PivBoundsReport rep = check_spectral_pivotal_bounds(t, spec, G);
        if (!rep.holds_hit || !rep.holds_within) ++violations;
        min_slack = std::min({min_slack, rep.slack_hit, rep.slack_within});
    }
    RunOutput out;
    MCEstimate e;
    e.value = static_cast<double>(violations);
    e.stderr_ = min_slack;
    e.n_effective = instances;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("spectral-pivotal.violations", params_echo(p), e));
    return out;
}

RunOutput run_lower_tail(const json& p, uint64_t seed) {
    EventSpec ev = event_of(p);
    std::vector<double> ks = jget_vec(p, "k", {0, 1, 2, 4, 8, 16});
    LowerTailProfile prof = lower_tail_profile(ev, ks, static_cast<int>(jget_int(p, "draws", 2000)),
                                               seed, static_cast<int>(jget_int(p, "cap", 16)));
    RunOutput out;
    for (size_t i = 0; i < prof.k.size(); ++i) {
        MCEstimate e;
        e.value = prof.p[i];
        e.stderr_ = prof.stderr_[i];
        e.n_effective = prof.draws;
        e.seed = seed;
        json pk = p;
        pk["k_value"] = prof.k[i];
        out.rows.push_back(ResultRow::from("lower-tail.p", pk.dump(), e));
    }
    MCEstimate e;
    e.value = prof.p_empty;
    e.n_effective = prof.draws;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("lower-tail.p_empty", params_echo(p), e));
    std::string gp = "set xlabel 'k'\nset ylabel 'P[0<|S|<=k]'\nplot 'lower-tail.csv'\n";
    out.extra.emplace_back(".gp", gp);
    return out;
}

RunOutput run_levy_tail(const json& p, uint64_t seed) {
    std::string mv = jget_str(p, "mover", "stable");
    double alpha = jget_num(p, "alpha", 1.0);
    MoverKind mover = mv == "brownian" ? MoverKind::brownian()
                      : mv == "pareto" ? MoverKind::compound_pareto(alpha, jget_num(p, "rate", 1.0))
                                       : MoverKind::stable(alpha);
    std::vector<double> ts = jget_vec(p, "t", {0.1, 0.5, 1.0});
    std::vector<double> Ls = jget_vec(p, "L", {10.0, 30.0, 100.0, 1000.0});
    TailCheckReport rep =
        tail_check(mover, ts, Ls, static_cast<int>(jget_int(p, "draws", 1000000)), seed);
    RunOutput out;
    auto push = [&](const char* name, double v) {
        MCEstimate e;
        e.value = v;
        e.n_effective = rep.draws;
        e.seed = seed;
        out.rows.push_back(ResultRow::from(name, params_echo(p), e));
    };
    push("levy-tail.slope", rep.slope);
    push("levy-tail.c_estimate", rep.c_estimate);
    push("levy-tail.min_ratio", rep.min_ratio);
    push("levy-tail.bound_holds", rep.bound_holds ? 1.0 : 0.0);
    std::string gp = "set logscale xy\nset xlabel 'L'\nset ylabel 'P[|X_t|>=L]'\n";
    out.extra.emplace_back(".gp", gp);
    return out;
}

RunOutput run_metric(const json& p, uint64_t seed) {
    double r_max = jget_num(p, "r_max", 6.0);
    Window win = Window::box({0, 0}, r_max + 1.0);
    Rng rng(seed, stream::kReplica, 0);
    PointSet ps1 = sample_poisson(win, 1.0, rng, 0);
    PointSet ps2 = sample_poisson(win, 1.0, rng, 0);
    auto t1 = std::make_shared<Tessellation>(build_tessellation(ps1));
    auto t2 = std::make_shared<Tessellation>(build_tessellation(ps2));
    ColoredConfiguration c1 = make_configuration(t1, rng);
    ColoredConfiguration c2 = make_configuration(t2, rng);
    MetricResult d12 = config_metric(c1, c2, r_max);
    MetricResult d11 = config_metric(c1, c1, r_max);
    RunOutput out;
    MCEstimate e;
    e.value = d12.value;
    e.stderr_ = d12.truncation_error;
    e.n_effective = 1;
    e.seed = seed;
    out.rows.push_back(ResultRow::from("metric.d", params_echo(p), e));
    MCEstimate z;
    z.value = d11.value;
    z.n_effective = 1;
    z.seed = seed;
    out.rows.push_back(ResultRow::from("metric.d_self", params_echo(p), z));
    return out;
}

// manifest of subcommands and what they measure
const std::vector<std::pair<std::string, std::string>> kManifest = {
    {"sample", "Poisson point sets in a window (deterministic in the seed)"},
    {"tessellate", "Delaunay adjacency and window-clipped Voronoi cells"},
    {"crossing", "box crossing probability; squares give 1/2 by color duality"},
    {"arms", "annealed arm probabilities alpha_j(r,R), full/half/quarter plane"},
    {"hat-arms", "annulus-measurable relaxed arm events (positivity surrogates)"},
    {"qm", "quasi-multiplicativity ratio alpha(r1,r3)/(alpha(r1,r2) alpha(r2,r3))"},
    {"quenched-moment", "quenched second moment via two couplings of one point set"},
    {"coupled-fourarm", "four-arm probabilities of coupled colorings (region W resampled)"},
    {"halfplane-fourarm", "four-arm second moment conditioned on a half-plane"},
    {"noise", "crossing covariance under frozen/moving/mixed dynamics vs t n^2 alpha_4"},
    {"pivotal-sum", "sum over unit boxes of annealed box-pivotality of the crossing"},
    {"xr-moments", "moments of X_R = time-average of the one-arm indicator"},
    {"spectral-tabulate", "exact truth table and Fourier coefficients of a small event"},
    {"spectral-sample", "annealed spectral-sample size histogram (exact rejection)"},
    {"cov-identity", "frozen covariance equals sum of hhat(S)^2 e^{-t|S|} (exact)"},
    {"spectral-pivotal", "spectral mass vs pivotality inequalities (exact, small scale)"},
    {"lower-tail", "lower tail P[0<|S^an|<=k] of the annealed spectral sample"},
    {"levy-tail", "heavy-tail lower bound P[|X_t|>=L] >= c t/L^alpha for the movers"},
    {"metric", "configuration metric d (bottleneck matching integrand)"},
    {"suite", "run the full shipped experiment battery"},
};

RunOutput dispatch(const std::string& experiment, const json& params, uint64_t seed);

RunOutput run_suite(const json& p, uint64_t seed) {
    // trimmed versions of every shipped experiment (full-size runs are the
    // acceptance suite's job)
    long scale = jget_int(p, "scale", 1);
    RunOutput all;
    auto add = [&](const std::string& name, json prm) {
        RunOutput one = dispatch(name, prm, derive_seed(seed, std::hash<std::string>{}(name)));
        for (auto& r : one.rows) all.rows.push_back(std::move(r));
    };
    add("crossing", json{{"n", 8.0}, {"replicas", 400 * scale}});
    add("arms", json{{"j", 1}, {"r", 1.0}, {"R", 6.0}, {"replicas", 400 * scale}});
    add("arms", json{{"j", 4}, {"r", 2.0}, {"R", 8.0}, {"replicas", 400 * scale}});
    add("hat-arms", json{{"j", 4}, {"r", 2.0}, {"R", 6.0}, {"replicas", 100 * scale}});
    add("qm", json{{"j", 4}, {"r1", 2.0}, {"r2", 4.0}, {"r3", 8.0}, {"replicas", 400 * scale}});
    add("quenched-moment", json{{"j", 1}, {"r", 2.0}, {"R", 8.0}, {"replicas", 400 * scale}});
    add("coupled-fourarm", json{{"W", "all"}, {"r", 2.0}, {"R", 8.0}, {"replicas", 400 * scale}});
    add("halfplane-fourarm", json{{"r", 2.0}, {"R", 8.0}, {"replicas", 400 * scale}});
    add("noise", json{{"n", 8.0}, {"replicas", 200 * scale}, {"alpha4_replicas", 400 * scale}});
    add("pivotal-sum", json{{"n", 4.0}, {"replicas", 20 * scale}, {"alpha4_replicas", 400 * scale}});
    add("xr-moments", json{{"R", json::array({4.0})},
                           {"replicas", 200 * scale},
                           {"alpha1_replicas", 400 * scale}});
    add("spectral-tabulate", json{{"event", "crossing"}, {"n", 2.0}, {"cap", 16}});
    add("spectral-sample", json{{"event", "crossing"}, {"n", 2.0}, {"draws", 200 * scale}});
    add("cov-identity", json{{"event", "crossing"}, {"n", 2.0}, {"instances", 5 * scale}});
    add("spectral-pivotal",
        json{{"event", "crossing"}, {"n", 2.0}, {"instances", 10 * scale},
             {"G", json::array({0.0, 1.0, 0.0, 1.0})}});
    add("lower-tail", json{{"event", "crossing"}, {"n", 2.0}, {"draws", 100 * scale}});
    add("levy-tail", json{{"alpha", 1.0}, {"draws", 100000 * scale}});
    add("metric", json{{"r_max", 5.0}});
    return all;
}

RunOutput dispatch(const std::string& experiment, const json& params, uint64_t seed) {
    if (experiment == "sample") return run_sample(params, seed);
    if (experiment == "tessellate") return run_tessellate(params, seed);
    if (experiment == "crossing") return run_crossing(params, seed);
    if (experiment == "arms") return run_arms(params, seed);
    if (experiment == "hat-arms") return run_hat_arms(params, seed);
    if (experiment == "qm") return run_qm(params, seed);
    if (experiment == "quenched-moment") return run_quenched_moment(params, seed);
    if (experiment == "coupled-fourarm") return run_coupled_fourarm(params, seed, false);
    if (experiment == "halfplane-fourarm") return run_coupled_fourarm(params, seed, true);
    if (experiment == "noise") return run_noise(params, seed);
    if (experiment == "pivotal-sum") return run_pivotal_sum(params, seed);
    if (experiment == "xr-moments") return run_xr_moments(params, seed);
    if (experiment == "spectral-tabulate") return run_spectral_tabulate(params, seed);
    if (experiment == "spectral-sample") return run_spectral_sample(params, seed);
    if (experiment == "cov-identity") return run_cov_identity(params, seed);
    if (experiment == "spectral-pivotal") return run_spectral_pivotal(params, seed);
    if (experiment == "lower-tail") return run_lower_tail(params, seed);
    if (experiment == "levy-tail") return run_levy_tail(params, seed);
    if (experiment == "metric") return run_metric(params, seed);
    if (experiment == "suite") return run_suite(params, seed);
    throw config_error("unknown estimator", "experiment");
}

int execute_config(const json& cfg) {
    if (!cfg.is_object()) throw config_error("config must be a JSON object", "(root)");
    std::string schema = jget_str(cfg, "schema", "voroperc.experiment.v1");
    if (schema != "voroperc.experiment.v1") throw config_error("unknown schema", "schema");
    if (!cfg.contains("experiment")) throw config_error("missing required field", "experiment");
    std::string experiment = jget_str(cfg, "experiment", "");
    uint64_t seed = static_cast<uint64_t>(jget_int(cfg, "seed", 1));
    std::string out_path = jget_str(cfg, "out", "");

    json params = cfg.contains("params") ? cfg.at("params") : json::object();
    if (!params.is_object()) throw config_error("params must be an object", "params");
    params["seed"] = seed;  // materialized defaults: echo the seed

    auto t0 = std::chrono::steady_clock::now();
    RunOutput out = dispatch(experiment, params, seed);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

    std::string csv = format_csv(out.rows);
    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        write_file_atomic(out_path, csv);
        for (auto& [suffix, content] : out.extra) write_file_atomic(out_path + suffix, content);
        json log;
        log["experiment"] = experiment;
        log["wall_ms"] = ms;
        log["threads"] = worker_threads();
        write_file_atomic(out_path + ".log.json", log.dump() + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voroperc: planar Voronoi percolation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run an experiment config (JSON)");
    run->add_option("config", config_path, "path to config JSON")->required();

    auto* list = app.add_subcommand("list-experiments", "print the experiment manifest");

    // uniform flags assembled into a config
    struct Common {
        uint64_t seed = 1;
        long replicas = -1;
        std::string out;
        std::vector<std::string> kv;  // extra key=value params
    };
    std::map<std::string, Common> commons;
    for (const auto& [name, help] : kManifest) {
        auto* sub = app.add_subcommand(name, help);
        Common& c = commons[name];
        sub->add_option("--seed", c.seed, "master seed (64-bit)");
        sub->add_option("--replicas", c.replicas, "replica count");
        sub->add_option("--out", c.out, "output CSV path (stdout if omitted)");
        sub->add_option("--param,-p", c.kv, "extra parameter key=value (repeatable)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& [name, help] : kManifest) std::printf("%-18s %s\n", name.c_str(), help.c_str());
            return 0;
        }
        json cfg;
        if (run->parsed()) {
            std::ifstream in(config_path);
            if (!in) throw config_error("cannot read config file", "config");
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                cfg = json::parse(ss.str());
            } catch (const std::exception& e) {
                throw config_error(std::string("invalid JSON: ") + e.what(), "(root)");
            }
        } else {
            for (const auto& [name, help] : kManifest) {
                (void)help;
                auto* sub = app.get_subcommand(name);
                if (!sub->parsed()) continue;
                const Common& c = commons[name];
                cfg["schema"] = "voroperc.experiment.v1";
                cfg["experiment"] = name;
                cfg["seed"] = c.seed;
                json params = json::object();
                if (c.replicas >= 0) params["replicas"] = c.replicas;
                for (const std::string& kv : c.kv) {
                    auto eq = kv.find('=');
                    if (eq == std::string::npos)
                        throw config_error("expected key=value", "--param " + kv);
                    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
                    try {
                        params[key] = json::parse(val);
                    } catch (...) {
                        params[key] = val;
                    }
                }
                cfg["params"] = std::move(params);
                if (!c.out.empty()) cfg["out"] = c.out;
                break;
            }
        }
        return execute_config(cfg);
    } catch (const config_error& e) {
        json err;
        err["error"] = e.what();
        err["field"] = e.field;
        std::printf("%s\n", err.dump().c_str());
        return 2;
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::printf("%s\n", err.dump().c_str());
        return 1;
    }
}
