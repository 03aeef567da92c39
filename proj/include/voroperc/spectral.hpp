#pragma once

#include <memory>
#include <vector>

#include "voroperc/events.hpp"

namespace voroperc {

// Serializable description of the Boolean events the spectral machinery and
// the CLI work with.
struct EventSpec {
    enum class Kind { Crossing, Arm };
    Kind kind = Kind::Crossing;
    Window rect;                            // Crossing
    CrossDir dir = CrossDir::LeftRight;
    int8_t color = kBlack;
    AnnulusSpec ann;                        // Arm
    ArmSpec arms;

    static EventSpec crossing(const Window& rect, CrossDir dir = CrossDir::LeftRight,
                              int8_t color = kBlack);
    // f_R: the one-arm event A_1(1, R) at the origin
    static EventSpec one_arm(double R);
    static EventSpec arm(const AnnulusSpec& ann, const ArmSpec& arms);

    // region whose cells determine the event
    Window support() const;
    Event evaluator() const;
};

// Exact truth table of an event restricted to the points whose cells meet
// its support ("relevant" points); all other colors are irrelevant by
// construction. Bit k of a table index is the color of relevant[k]
// (+1 <-> bit set), ascending point index.
struct BoolTable {
    std::shared_ptr<const Tessellation> tess;
    std::vector<int> relevant;
    std::vector<uint8_t> values;  // 2^m entries
    int m = 0;
    int rejections = 0;  // point sets redrawn to fit the cap

    double mean() const;  // E^eta[h] = E^eta[h^2] for {0,1} values
};

struct spectral_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

BoolTable tabulate_event(const EventSpec& ev, uint64_t seed, int cap = 24, int max_retries = 1000);
BoolTable tabulate_event_rng(const EventSpec& ev, Rng& rng, int cap = 24, int max_retries = 1000);

// Evaluate a prepared table against an explicitly given tessellation+colors
// (used when the caller owns the sampling loop).
BoolTable tabulate_on(const EventSpec& ev, std::shared_ptr<const Tessellation> tess, int cap);

// All 2^m coefficients hhat(S) = E[h chi_S], indexed by subset bitmask.
struct SpectrumTable {
    std::vector<double> coef;
    int m = 0;
};

SpectrumTable fourier_transform(const BoolTable& table);
std::vector<double> inverse_transform(const SpectrumTable& spec);

// Categorical sampler over subsets with P[S] proportional to coef[S]^2.
class SpectralSampler {
  public:
    explicit SpectralSampler(const SpectrumTable& spec);
    uint32_t draw(Rng& rng) const;
    double total_mass() const { return total_; }

  private:
    std::vector<double> cum_;
    double total_ = 0.0;
};

uint32_t draw_quenched_sample(const SpectrumTable& spec, Rng& rng);

// Exact rejection scheme for the annealed law: accept a point set with
// probability E^eta[h^2], then draw from the quenched law.
struct AnnealedDraw {
    BoolTable table;
    SpectrumTable spec;
    uint32_t subset = 0;
    int eta_attempts = 0;
};
AnnealedDraw draw_annealed_sample(const EventSpec& ev, Rng& rng, int cap = 24,
                                  int max_attempts = 100000);

// Frozen-dynamics covariance identity: exhaustive two-point expectation with
// per-bit agreement probability (1+e^-t)/2 against sum_S hhat(S)^2 e^-t|S|.
struct CovIdentityReport {
    std::vector<double> ts;
    std::vector<double> exhaustive;
    std::vector<double> spectral;
    double max_abs_err = 0.0;
};
CovIdentityReport check_cov_identity(const BoolTable& table, const std::vector<double>& ts);

// Spectral-vs-pivotal inequalities for a box G:
//   Qhat[S cap G != 0] <= 4 P[Piv_G]  and  Qhat[0 != S subseteq G] <= 4 P[Piv_G]^2.
struct PivBoundsReport {
    double q_hit = 0.0, q_within = 0.0;
    double piv_prob = 0.0;
    bool holds_hit = true, holds_within = true;
    double slack_hit = 0.0, slack_within = 0.0;  // rhs - lhs
};
PivBoundsReport check_spectral_pivotal_bounds(const BoolTable& table, const SpectrumTable& spec,
                                              const Window& G);

// sum_{S ni x} coef(S)^2 per relevant point (one-dimensional marginals).
std::vector<double> marginal_mass(const SpectrumTable& spec);
// P[Piv_x]/4 per relevant point, exhaustively.
std::vector<double> pointwise_pivotal_quarter(const BoolTable& table);

// Empirical lower-tail curve P[0 < |S^an| <= k] of the annealed sample.
struct LowerTailProfile {
    std::vector<double> k;        // thresholds
    std::vector<double> p;        // point estimates
    std::vector<double> stderr_;  // binomial
    double p_empty = 0.0;
    int draws = 0;
};
LowerTailProfile lower_tail_profile(const EventSpec& ev, const std::vector<double>& ks,
                                    int draws, uint64_t seed, int cap = 24);

// Binary spectrum dump: little-endian doubles with a JSON header.
void dump_spectrum(const SpectrumTable& spec, const BoolTable& table, const std::string& event_id,
                   const std::string& path_prefix);

}  // namespace voroperc
