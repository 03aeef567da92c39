#include "voroperc/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace voroperc {

EventSpec EventSpec::crossing(const Window& rect, CrossDir dir, int8_t color) {
    EventSpec e;
    e.kind = Kind::Crossing;
    e.rect = rect;
    e.dir = dir;
    e.color = color;
    return e;
}

EventSpec EventSpec::one_arm(double R) {
    EventSpec e;
    e.kind = Kind::Arm;
    e.ann = {{0.0, 0.0}, 1.0, R};
    e.arms = ArmSpec::alternating(1);
    return e;
}

EventSpec EventSpec::arm(const AnnulusSpec& ann, const ArmSpec& arms) {
    EventSpec e;
    e.kind = Kind::Arm;
    e.ann = ann;
    e.arms = arms;
    return e;
}

Window EventSpec::support() const {
    if (kind == Kind::Crossing) return rect;
    return Window::box(ann.center, ann.R);
}

Event EventSpec::evaluator() const {
    EventSpec ev = *this;
    return [ev](const ColoredConfiguration& cfg) {
        if (ev.kind == Kind::Crossing)
            return voroperc::crossing(cfg, ev.rect, ev.dir, ev.color);
        return arm_event(cfg, ev.ann, ev.arms);
    };
}

double BoolTable::mean() const {
    double s = 0.0;
    for (uint8_t v : values) s += v;
    return s / static_cast<double>(values.size());
}

namespace {

std::vector<int> relevant_points(const EventSpec& ev, const Tessellation& tess) {
    if (ev.kind == EventSpec::Kind::Crossing) {
        CrossingContext ctx(tess, ev.rect, ev.dir);
        std::vector<int> r = ctx.graph().cells;
        std::sort(r.begin(), r.end());
        return r;
    }
    ArmContext ctx(tess, ev.ann, ev.arms);
    std::vector<int> r = ctx.graph().cells;
    std::sort(r.begin(), r.end());
    return r;
}

}  // namespace

BoolTable tabulate_on(const EventSpec& ev, std::shared_ptr<const Tessellation> tess, int cap) {
    BoolTable t;
    t.tess = std::move(tess);
    t.relevant = relevant_points(ev, *t.tess);
    t.m = static_cast<int>(t.relevant.size());
    if (t.m > cap) throw spectral_error("support too large");

    std::vector<int8_t> colors(t.tess->size(), kWhite);
    t.values.resize(size_t{1} << t.m);
    if (ev.kind == EventSpec::Kind::Crossing) {
        CrossingContext ctx(*t.tess, ev.rect, ev.dir);
        for (size_t idx = 0; idx < t.values.size(); ++idx) {
            for (int k = 0; k < t.m; ++k)
                colors[t.relevant[k]] = (idx >> k) & 1 ? kBlack : kWhite;
            t.values[idx] = ctx.eval(colors, ev.color);
        }
    } else {
        ArmContext ctx(*t.tess, ev.ann, ev.arms);
        for (size_t idx = 0; idx < t.values.size(); ++idx) {
            for (int k = 0; k < t.m; ++k)
                colors[t.relevant[k]] = (idx >> k) & 1 ? kBlack : kWhite;
            t.values[idx] = ctx.eval(colors);
        }
    }
    return t;
}

BoolTable tabulate_event_rng(const EventSpec& ev, Rng& rng, int cap, int max_retries) {
    const Window roi = ev.support();
    const Window win = roi.inflated(default_margin(roi));
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        PointSet ps = sample_poisson(win, 1.0, rng, 0);
        if (ps.size() == 0) continue;
        auto tess = std::make_shared<Tessellation>(build_tessellation(ps));
        if (!check_padding_valid(*tess, roi)) continue;
        std::vector<int> rel = relevant_points(ev, *tess);
        if (static_cast<int>(rel.size()) > cap || rel.empty()) continue;
        BoolTable t = tabulate_on(ev, tess, cap);
        t.rejections = attempt;
        return t;
    }
    throw spectral_error("support too large: cap unreachable after max retries");
}

BoolTable tabulate_event(const EventSpec& ev, uint64_t seed, int cap, int max_retries) {
    Rng rng(seed, stream::kSpectralDraw, 0);
    return tabulate_event_rng(ev, rng, cap, max_retries);
}

namespace {

// In-place symmetric Walsh-Hadamard butterfly: out[S] = sum_x in[x] (-1)^{popcount(S&x)}.
void wht(std::vector<double>& a) {
    const size_t n = a.size();
    for (size_t len = 1; len < n; len <<= 1)
        for (size_t i = 0; i < n; i += len << 1)
            for (size_t j = i; j < i + len; ++j) {
                double u = a[j], v = a[j + len];
                a[j] = u + v;
                a[j + len] = u - v;
            }
}

}  // namespace

SpectrumTable fourier_transform(const BoolTable& table) {
    SpectrumTable s;
    s.m = table.m;
    s.coef.assign(table.values.begin(), table.values.end());
    wht(s.coef);
    // chi_S(x) = prod_{k in S} (+1 if bit else -1) = (-1)^{|S|} (-1)^{popcount(S&x)}
    const double scale = 1.0 / static_cast<double>(s.coef.size());
    for (size_t S = 0; S < s.coef.size(); ++S) {
        double sign = (std::popcount(S) & 1) ? -1.0 : 1.0;
        s.coef[S] *= sign * scale;
    }
    return s;
}

std::vector<double> inverse_transform(const SpectrumTable& spec) {
    std::vector<double> h(spec.coef.size());
    for (size_t S = 0; S < h.size(); ++S)
        h[S] = spec.coef[S] * ((std::popcount(S) & 1) ? -1.0 : 1.0);
    wht(h);
    return h;
}

SpectralSampler::SpectralSampler(const SpectrumTable& spec) {
    cum_.resize(spec.coef.size());
    double acc = 0.0;
    for (size_t S = 0; S < spec.coef.size(); ++S) {
        acc += spec.coef[S] * spec.coef[S];
        cum_[S] = acc;
    }
    total_ = acc;
    if (!(total_ > 0.0)) throw spectral_error("null spectrum");
}

uint32_t SpectralSampler::draw(Rng& rng) const {
    double u = rng.uniform01() * total_;
    return static_cast<uint32_t>(std::lower_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
}

uint32_t draw_quenched_sample(const SpectrumTable& spec, Rng& rng) {
    SpectralSampler sampler(spec);
    return sampler.draw(rng);
}

AnnealedDraw draw_annealed_sample(const EventSpec& ev, Rng& rng, int cap, int max_attempts) {
    int degenerate = 0;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        BoolTable t = tabulate_event_rng(ev, rng, cap);
        double accept = t.mean();  // = E^eta[h^2] for {0,1} events
        if (rng.uniform01() >= accept) {
            if (accept == 0.0) ++degenerate;
            continue;
        }
        AnnealedDraw d;
        d.table = std::move(t);
        d.spec = fourier_transform(d.table);
        d.subset = SpectralSampler(d.spec).draw(rng);
        d.eta_attempts = attempt;
        return d;
    }
    throw spectral_error("annealed sampler: acceptance below floor after " +
                         std::to_string(max_attempts) + " attempts (" +
                         std::to_string(degenerate) + " degenerate tables)");
}

CovIdentityReport check_cov_identity(const BoolTable& table, const std::vector<double>& ts) {
    if (table.m > 14) throw spectral_error("check_cov_identity: m too large for the 4^m sum");
    CovIdentityReport rep;
    rep.ts = ts;

    // pair counts by Hamming distance over the support of h
    std::vector<uint32_t> ones;
    for (uint32_t x = 0; x < table.values.size(); ++x)
        if (table.values[x]) ones.push_back(x);
    std::vector<double> count(table.m + 1, 0.0);
    for (uint32_t x : ones)
        for (uint32_t y : ones) ++count[std::popcount(x ^ y)];

    SpectrumTable spec = fourier_transform(table);
    std::vector<double> weight(table.m + 1, 0.0);
    for (size_t S = 0; S < spec.coef.size(); ++S)
        weight[std::popcount(S)] += spec.coef[S] * spec.coef[S];

    const double inv = 1.0 / static_cast<double>(table.values.size());
    for (double t : ts) {
        double ps = 0.5 * (1.0 + std::exp(-t)), pd = 0.5 * (1.0 - std::exp(-t));
        double lhs = 0.0;
        for (int d = 0; d <= table.m; ++d)
            if (count[d] > 0)
                lhs += count[d] * std::pow(ps, table.m - d) * std::pow(pd, d);
        lhs *= inv;
        double rhs = 0.0;
        for (int k = 0; k <= table.m; ++k) rhs += weight[k] * std::exp(-k * t);
        rep.exhaustive.push_back(lhs);
        rep.spectral.push_back(rhs);
        rep.max_abs_err = std::max(rep.max_abs_err, std::abs(lhs - rhs));
    }
    return rep;
}

PivBoundsReport check_spectral_pivotal_bounds(const BoolTable& table, const SpectrumTable& spec,
                                              const Window& G) {
    PivBoundsReport rep;
    uint32_t gmask = 0;
    for (int k = 0; k < table.m; ++k)
        if (G.contains(table.tess->pts.points[table.relevant[k]])) gmask |= 1u << k;

    for (size_t S = 0; S < spec.coef.size(); ++S) {
        double w = spec.coef[S] * spec.coef[S];
        if (S & gmask) rep.q_hit += w;
        if (S != 0 && (S & ~gmask) == 0) rep.q_within += w;
    }

    // P[Piv_G]: fraction of colorings whose G-block is non-constant
    const uint32_t outside = (~gmask) & ((table.values.size() - 1));
    size_t nonconstant = 0;
    // enumerate off-G assignments, then the G-block within each
    uint32_t base = 0;
    size_t blocks = 0;
    do {
        ++blocks;
        uint32_t sub = 0;
        uint8_t first = table.values[base];
        bool varies = false;
        do {
            if (table.values[base | sub] != first) {
                varies = true;
                break;
            }
            sub = (sub - gmask) & gmask;
        } while (sub != 0);
        if (varies) ++nonconstant;
        base = (base - outside) & outside;
    } while (base != 0);
    rep.piv_prob = static_cast<double>(nonconstant) / static_cast<double>(blocks);

    rep.slack_hit = 4.0 * rep.piv_prob - rep.q_hit;
    rep.slack_within = 4.0 * rep.piv_prob * rep.piv_prob - rep.q_within;
    rep.holds_hit = rep.slack_hit >= -1e-12;
    rep.holds_within = rep.slack_within >= -1e-12;
    return rep;
}

std::vector<double> marginal_mass(const SpectrumTable& spec) {
    std::vector<double> out(spec.m, 0.0);
    for (size_t S = 0; S < spec.coef.size(); ++S) {
        double w = spec.coef[S] * spec.coef[S];
        for (int k = 0; k < spec.m; ++k)
            if (S >> k & 1) out[k] += w;
    }
    return out;
}

std::vector<double> pointwise_pivotal_quarter(const BoolTable& table) {
    std::vector<double> out(table.m, 0.0);
    for (int k = 0; k < table.m; ++k) {
        size_t cnt = 0;
        for (uint32_t x = 0; x < table.values.size(); ++x)
            if (table.values[x] != table.values[x ^ (1u << k)]) ++cnt;
        out[k] = static_cast<double>(cnt) / static_cast<double>(table.values.size()) / 4.0;
    }
    return out;
}

LowerTailProfile lower_tail_profile(const EventSpec& ev, const std::vector<double>& ks, int draws,
                                    uint64_t seed, int cap) {
    LowerTailProfile prof;
    prof.k = ks;
    prof.draws = draws;
    std::vector<int> counts(ks.size(), 0);
    int empty = 0;
    Rng rng(seed, stream::kSpectralDraw, 1);
    for (int d = 0; d < draws; ++d) {
        AnnealedDraw a = draw_annealed_sample(ev, rng, cap);
        int sz = std::popcount(a.subset);
        if (sz == 0) ++empty;
        for (size_t i = 0; i < ks.size(); ++i)
            if (sz > 0 && sz <= ks[i]) ++counts[i];
    }
    prof.p_empty = static_cast<double>(empty) / draws;
    for (size_t i = 0; i < ks.size(); ++i) {
        double p = static_cast<double>(counts[i]) / draws;
        prof.p.push_back(p);
        prof.stderr_.push_back(std::sqrt(std::max(p * (1 - p), 1.0 / draws) / draws));
    }
    return prof;
}

void dump_spectrum(const SpectrumTable& spec, const BoolTable& table, const std::string& event_id,
                   const std::string& path_prefix) {
    {
        FILE* f = std::fopen((path_prefix + ".bin").c_str(), "wb");
        if (!f) throw spectral_error("dump_spectrum: cannot open output");
        // stored little-endian; this writer assumes a little-endian host
        std::fwrite(spec.coef.data(), sizeof(double), spec.coef.size(), f);
        std::fclose(f);
    }
    std::string hdr = "{\"m\":" + std::to_string(spec.m) + ",\"event\":\"" + event_id +
                      "\",\"points\":[";
    for (size_t k = 0; k < table.relevant.size(); ++k) {
        if (k) hdr += ",";
        hdr += std::to_string(table.relevant[k]);
    }
    hdr += "],\"order\":\"subset-bitmask, bit k = color of points[k], +1 <-> 1\"}\n";
    FILE* f = std::fopen((path_prefix + ".json").c_str(), "w");
    if (!f) throw spectral_error("dump_spectrum: cannot open header output");
    std::fwrite(hdr.data(), 1, hdr.size(), f);
    std::fclose(f);
}

}  // namespace voroperc
