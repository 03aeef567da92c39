#include <doctest.h>

#include <bit>
#include <cmath>
#include <map>

#include "voroperc/spectral.hpp"

using namespace voroperc;

namespace {

// naive O(4^m) transform: hhat(S) = 2^-m sum_x h(x) chi_S(x)
std::vector<double> naive_transform(const BoolTable& t) {
    const size_t N = t.values.size();
    std::vector<double> out(N, 0.0);
    for (size_t S = 0; S < N; ++S) {
        double acc = 0.0;
        for (size_t x = 0; x < N; ++x) {
            int par = std::popcount(S & ~x & (N - 1));
            acc += t.values[x] * ((par & 1) ? -1.0 : 1.0);
        }
        out[S] = acc / static_cast<double>(N);
    }
    return out;
}

BoolTable random_table(int m, uint64_t seed) {
    BoolTable t;
    t.m = m;
    t.values.resize(size_t{1} << m);
    Rng rng(seed, 0, 0);
    for (auto& v : t.values) v = rng.bernoulli(0.5);
    return t;
}

BoolTable table_from_bits(int m, std::vector<uint8_t> vals) {
    BoolTable t;
    t.m = m;
    t.values = std::move(vals);
    return t;
}

}  // namespace

TEST_CASE("transform of constants and dictators") {
    // h == 1
    BoolTable ones = table_from_bits(3, std::vector<uint8_t>(8, 1));
    SpectrumTable s = fourier_transform(ones);
    CHECK(s.coef[0] == doctest::Approx(1.0));
    for (size_t S = 1; S < 8; ++S) CHECK(s.coef[S] == doctest::Approx(0.0));

    // dictator h = (1 + omega_0) / 2: value = bit 0
    BoolTable dict = table_from_bits(2, {0, 1, 0, 1});
    s = fourier_transform(dict);
    CHECK(s.coef[0] == doctest::Approx(0.5));
    CHECK(s.coef[1] == doctest::Approx(0.5));
    CHECK(s.coef[2] == doctest::Approx(0.0));
    CHECK(s.coef[3] == doctest::Approx(0.0));

    // parity mapped to {0,1}: h = (1 + chi_full)/2
    BoolTable par = table_from_bits(2, {1, 0, 0, 1});
    s = fourier_transform(par);
    CHECK(s.coef[0] == doctest::Approx(0.5));
    CHECK(s.coef[3] == doctest::Approx(0.5));
    CHECK(std::abs(s.coef[1]) + std::abs(s.coef[2]) == doctest::Approx(0.0));
}

TEST_CASE("fast transform equals the naive definition") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        BoolTable t = random_table(10, seed);
        SpectrumTable fast = fourier_transform(t);
        std::vector<double> slow = naive_transform(t);
        for (size_t S = 0; S < slow.size(); ++S)
            CHECK(fast.coef[S] == doctest::Approx(slow[S]).epsilon(1e-12));
    }
}

TEST_CASE("Parseval and round-trip to 1e-12") {
    for (int m : {4, 8, 12}) {
        BoolTable t = random_table(m, 17 + m);
        SpectrumTable s = fourier_transform(t);
        double lhs = 0.0, rhs = 0.0;
        for (double c : s.coef) lhs += c * c;
        for (uint8_t v : t.values) rhs += static_cast<double>(v) * v;
        rhs /= static_cast<double>(t.values.size());
        CHECK(std::abs(lhs - rhs) < 1e-12);
        std::vector<double> back = inverse_transform(s);
        for (size_t x = 0; x < back.size(); ++x) CHECK(std::abs(back[x] - t.values[x]) < 1e-12);
    }
}

TEST_CASE("tabulation: constant event, single point crossing, order invariance") {
    // single point in a unit window: black crosses, white does not
    EventSpec ev = EventSpec::crossing({0.0, 1.0, 0.0, 1.0});
    BoolTable t = tabulate_event(ev, 5, 24);
    REQUIRE(t.m >= 1);
    SpectrumTable s = fourier_transform(t);
    // re-tabulating from the same seed gives the same table
    BoolTable t2 = tabulate_event(ev, 5, 24);
    CHECK(t.values == t2.values);
    CHECK(t.relevant == t2.relevant);
    // hhat(S) vanishes whenever S contains an ignored point
    std::vector<double> piv = pointwise_pivotal_quarter(t);
    for (int k = 0; k < t.m; ++k) {
        if (piv[k] > 0.0) continue;
        for (size_t S = 0; S < s.coef.size(); ++S)
            if (S >> k & 1) CHECK(std::abs(s.coef[S]) < 1e-12);
    }
}

TEST_CASE("one-dimensional marginal identity, exactly") {
    Rng rng(33, stream::kSpectralDraw, 9);
    for (int inst = 0; inst < 20; ++inst) {
        EventSpec ev = EventSpec::crossing({0.0, 1.8, 0.0, 1.8});
        BoolTable t = tabulate_event_rng(ev, rng, 12);
        SpectrumTable s = fourier_transform(t);
        std::vector<double> lhs = marginal_mass(s);
        std::vector<double> rhs = pointwise_pivotal_quarter(t);
        for (int k = 0; k < t.m; ++k) CHECK(std::abs(lhs[k] - rhs[k]) < 1e-12);
    }
}

TEST_CASE("quenched sampler frequencies match the squared coefficients") {
    // dictator: S = {} and S = {0} each with probability 1/2
    BoolTable dict = table_from_bits(2, {0, 1, 0, 1});
    SpectrumTable s = fourier_transform(dict);
    SpectralSampler sampler(s);
    Rng rng(4, stream::kSpectralDraw, 0);
    std::map<uint32_t, long> counts;
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[sampler.draw(rng)]++;
    CHECK(counts.size() == 2);
    CHECK(std::abs(counts[0] / double(n) - 0.5) < 4.0 * std::sqrt(0.25 / n));
    CHECK(std::abs(counts[1] / double(n) - 0.5) < 4.0 * std::sqrt(0.25 / n));

    // random table: multinomial frequencies within 4 sigma
    BoolTable t = random_table(6, 77);
    SpectrumTable st = fourier_transform(t);
    SpectralSampler sam(st);
    std::vector<long> c(64, 0);
    for (int i = 0; i < n; ++i) c[sam.draw(rng)]++;
    double total = 0.0;
    for (double x : st.coef) total += x * x;
    for (size_t S = 0; S < 64; ++S) {
        double p = st.coef[S] * st.coef[S] / total;
        CHECK(std::abs(c[S] / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n) + 2e-4);
    }
}

TEST_CASE("null spectrum draws throw") {
    BoolTable zero = table_from_bits(2, {0, 0, 0, 0});
    SpectrumTable s = fourier_transform(zero);
    CHECK_THROWS_AS(SpectralSampler{s}, spectral_error);
}

TEST_CASE("covariance identity: exact at both endpoints and generic t") {
    Rng rng(8, stream::kSpectralDraw, 11);
    for (int inst = 0; inst < 10; ++inst) {
        EventSpec ev = EventSpec::crossing({0.0, 1.8, 0.0, 1.8});
        BoolTable t = tabulate_event_rng(ev, rng, 12);
        CovIdentityReport rep = check_cov_identity(t, {0.0, 0.1, 0.7, 3.0, 50.0});
        CHECK(rep.max_abs_err < 1e-10);
        // t = 0 gives E[h^2]; t -> inf gives hhat(empty)^2
        SpectrumTable s = fourier_transform(t);
        CHECK(rep.exhaustive[0] == doctest::Approx(t.mean()).epsilon(1e-10));
        CHECK(rep.exhaustive.back() ==
              doctest::Approx(s.coef[0] * s.coef[0]).epsilon(1e-6));
    }
}

TEST_CASE("spectral-pivotal inequalities hold with zero violations") {
    Rng rng(13, stream::kSpectralDraw, 12);
    const Window G{0.0, 0.9, 0.0, 0.9};
    for (int inst = 0; inst < 100; ++inst) {
        EventSpec ev = EventSpec::crossing({0.0, 1.8, 0.0, 1.8});
        BoolTable t = tabulate_event_rng(ev, rng, 12);
        SpectrumTable s = fourier_transform(t);
        PivBoundsReport rep = check_spectral_pivotal_bounds(t, s, G);
        CHECK(rep.holds_hit);
        CHECK(rep.holds_within);
    }
    // G disjoint from the support: both sides vanish
    EventSpec ev = EventSpec::crossing({0.0, 1.8, 0.0, 1.8});
    BoolTable t = tabulate_event_rng(ev, rng, 12);
    SpectrumTable s = fourier_transform(t);
    PivBoundsReport rep = check_spectral_pivotal_bounds(t, s, Window{50, 51, 50, 51});
    CHECK(rep.q_hit == doctest::Approx(0.0));
    CHECK(rep.piv_prob == doctest::Approx(0.0));
}

TEST_CASE("annealed sampler: histogram matches direct enumeration") {
    // small crossing event; compare the rejection-sampled law of |S| to the
    // direct estimate E_eta[Qhat[|S|=k]] / E[h]
    EventSpec ev = EventSpec::crossing({0.0, 1.6, 0.0, 1.6});
    const int cap = 13;
    Rng rng(21, stream::kSpectralDraw, 13);
    const int draws = 6000;
    std::vector<double> sampled(cap + 1, 0.0);
    for (int d = 0; d < draws; ++d) {
        AnnealedDraw a = draw_annealed_sample(ev, rng, cap);
        sampled[std::popcount(a.subset)] += 1.0 / draws;
    }
    // direct: average Qhat over fresh point sets, normalize by E[h]
    Rng rng2(22, stream::kSpectralDraw, 14);
    const int etas = 3000;
    std::vector<double> direct(cap + 1, 0.0);
    double mean_h = 0.0;
    for (int e = 0; e < etas; ++e) {
        BoolTable t = tabulate_event_rng(ev, rng2, cap);
        SpectrumTable s = fourier_transform(t);
        for (size_t S = 0; S < s.coef.size(); ++S)
            direct[std::popcount(S)] += s.coef[S] * s.coef[S];
        mean_h += t.mean();
    }
    for (double& v : direct) v /= mean_h;
    for (int k = 0; k <= cap; ++k) {
        double se = std::sqrt(std::max(sampled[k] * (1 - sampled[k]), 1e-6) / draws) +
                    std::sqrt(std::max(direct[k] * (1 - direct[k]), 1e-6) / etas);
        CHECK(std::abs(sampled[k] - direct[k]) < 4.5 * se + 1e-3);
    }
}

TEST_CASE("annealed sampler: degenerate event errors out") {
    // an impossible 6-arm event in a thin annulus at tiny scale has
    // vanishing mean on almost every eta; acceptance cannot be reached
    AnnulusSpec ann{{0, 0}, 1.0, 1.2};
    EventSpec ev = EventSpec::arm(ann, ArmSpec::alternating(6));
    Rng rng(31, stream::kSpectralDraw, 15);
    CHECK_THROWS_AS(draw_annealed_sample(ev, rng, 6, 50), spectral_error);
}

TEST_CASE("lower tail profile: definitional columns and monotonicity") {
    EventSpec ev = EventSpec::crossing({0.0, 1.6, 0.0, 1.6});
    LowerTailProfile prof = lower_tail_profile(ev, {0, 1, 2, 4, 8, 1 << 13}, 1500, 99, 13);
    CHECK(prof.p[0] == doctest::Approx(0.0));  // k = 0: impossible given |S| > 0
    for (size_t i = 1; i < prof.p.size(); ++i) CHECK(prof.p[i] >= prof.p[i - 1]);
    CHECK(prof.p.back() == doctest::Approx(1.0 - prof.p_empty).epsilon(1e-12));
}
