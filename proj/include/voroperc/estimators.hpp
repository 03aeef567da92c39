#pragma once

#include <optional>
#include <string>
#include <vector>

#include "voroperc/dynamics.hpp"
#include "voroperc/events.hpp"
#include "voroperc/spectral.hpp"

namespace voroperc {

struct estimator_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MCEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    long n_effective = 0;
    long n_discarded = 0;  // padding failures
    uint64_t seed = 0;
    bool flagged = false;  // discard fraction above 1e-3
    // estimator-specific counters
    long invariant_violations = 0;  // nesting / monotonicity failures
    long hat_violations = 0;        // hat-domination surrogate misses (reported)

    void finalize_flag() { flagged = n_effective > 0 && n_discarded > 1e-3 * n_effective; }
};

// Number of worker threads (VOROPERC_THREADS env var, default hardware).
int worker_threads();

// Replica policy: fixed count, or adaptive doubling until the relative
// standard error target is met (hard cap per the defaults).
struct ReplicaPolicy {
    long initial = 10000;
    bool adaptive = false;
    double rel_target = 0.05;
    long cap = 10000000;

    static ReplicaPolicy fixed(long n) { return {n, false, 0.0, n}; }
    static ReplicaPolicy until_rel(double rel, long initial = 10000, long cap = 10000000) {
        return {initial, true, rel, cap};
    }
};

// Samples a fresh certified configuration on the default-padded window of
// roi; returns nullopt when the padding certificate fails (the replica is
// discarded and counted).
std::optional<ColoredConfiguration> sample_certified_config(const Window& roi, Rng& rng);

// ---------------------------------------------------------------------------
// Crossing probabilities.
// ---------------------------------------------------------------------------

MCEstimate estimate_crossing(double width, double height, long replicas, uint64_t seed);

// ---------------------------------------------------------------------------
// Arm probabilities. Queries share the configuration per replica (annuli
// centered at the origin), so ratios between them are variance-reduced.
// Per-sample inclusion checks (annulus nesting, arm-count monotonicity, hat
// domination) run on every accepted sample; the first two count as
// invariant_violations, hat misses are reported separately.
// ---------------------------------------------------------------------------

struct ArmQuery {
    ArmSpec arms;
    double r = 1.0;
    double R = 8.0;
};

struct ArmBatteryOptions {
    ReplicaPolicy policy = ReplicaPolicy::fixed(10000);
    bool per_sample_checks = true;
    bool hat_checks = false;  // expensive: annulus tessellation rebuild per hit
};

std::vector<MCEstimate> estimate_arm_battery(const std::vector<ArmQuery>& queries,
                                             const ArmBatteryOptions& opts, uint64_t seed);

MCEstimate estimate_arm(const ArmSpec& arms, double r, double R, const ReplicaPolicy& policy,
                        uint64_t seed);

// ---------------------------------------------------------------------------
// Coupled-coloring estimators.
// ---------------------------------------------------------------------------

// Region W resampled between the two colorings of a CoupledPair.
struct CoupledRegionSpec {
    enum class Kind { None, All, UpperHalfPlane, Box };
    Kind kind = Kind::All;
    Window box;  // Kind::Box

    bool contains(Vec2 p) const {
        switch (kind) {
            case Kind::None: return false;
            case Kind::All: return true;
            case Kind::UpperHalfPlane: return p.y > 0.0;
            case Kind::Box: return box.contains(p);
        }
        return false;
    }
};

// alpha_tilde_j(r,R)^2 = E[P^eta[A_j]^2] via two conditionally independent
// colorings of a shared point set; also the single-coloring alpha and the
// delta-method ratio alpha_tilde / alpha.
struct QuenchedComparison {
    MCEstimate second_moment;  // alpha_tilde^2
    MCEstimate annealed;       // alpha
    double ratio = 0.0;        // alpha_tilde / alpha
    double ratio_stderr = 0.0;
};
QuenchedComparison estimate_quenched_second_moment(const ArmSpec& arms, double r, double R,
                                                   const ReplicaPolicy& policy, uint64_t seed);

enum class FourArmVariant { Plain, Hat, Ext, Int };

// beta_4^{an,W}(r,R) = P[omega', omega'' in A_4(r,R)] and friends.
struct CoupledFourArm {
    MCEstimate beta;          // requested variant
    MCEstimate alpha_plain;   // P[omega' in A_4] on the same replicas
    double ratio = 0.0;       // beta / alpha_plain
    double ratio_stderr = 0.0;
};
CoupledFourArm estimate_coupled_fourarm(const CoupledRegionSpec& W, double r, double R,
                                        FourArmVariant variant, const ReplicaPolicy& policy,
                                        uint64_t seed);

// ---------------------------------------------------------------------------
// Quasi-multiplicativity ratio alpha(r1,r3) / (alpha(r1,r2) alpha(r2,r3)),
// all three events evaluated on shared configurations.
// ---------------------------------------------------------------------------

struct QmRatio {
    double ratio = 0.0;
    double stderr_ = 0.0;
    MCEstimate a13, a12, a23;
};
QmRatio qm_ratio(const ArmSpec& arms, double r1, double r2, double r3,
                 const ReplicaPolicy& policy, uint64_t seed);

// ---------------------------------------------------------------------------
// Noise sensitivity of the crossing event g_n under a dynamics.
// ---------------------------------------------------------------------------

struct DynamicsSpec {
    enum class Kind { Frozen, Moving, Mixed };
    Kind kind = Kind::Frozen;
    MoverKind mover = MoverKind::brownian();
    double dt = 0.01;
};

struct NoiseCurve {
    std::vector<double> t;
    std::vector<double> cov;
    std::vector<double> cov_stderr;
    std::vector<double> companion;  // t * n^2 * alpha4_hat
    double var0 = 0.0, var0_stderr = 0.0;
    long n_effective = 0, n_discarded = 0;
};
NoiseCurve estimate_noise_covariance(const DynamicsSpec& dyn, double n, std::vector<double> ts,
                                     long replicas, uint64_t seed, double alpha4_hat);

// ---------------------------------------------------------------------------
// Pivotal sum over the unit grid (monotone fill classifier, exact for the
// crossing event).
// ---------------------------------------------------------------------------

struct PivotalSum {
    double sum = 0.0;
    double sum_stderr = 0.0;
    double outside_sum = 0.0;  // boxes outside [0,n]^2
    MCEstimate alpha4;         // alpha_4^{an}(1, n)
    double companion = 0.0;    // n^2 alpha4
    double ratio = 0.0;        // sum / companion
    long n_effective = 0, n_discarded = 0;
};
PivotalSum estimate_pivotal_sum(double n, long replicas, uint64_t seed, int margin_boxes = 3,
                                long alpha4_replicas = 20000);

// ---------------------------------------------------------------------------
// X_R moments.
// ---------------------------------------------------------------------------

struct XRMomentRow {
    double R = 0.0;
    double mean = 0.0, mean_stderr = 0.0;
    double second = 0.0, second_stderr = 0.0;
    double ratio = 0.0;  // E[X^2]/E[X]^2
    double ratio_lo = 0.0, ratio_hi = 0.0;  // bootstrap 99% interval
    MCEstimate alpha1;   // independent alpha_1^{an}(R) estimate
    long n_effective = 0, n_discarded = 0;
};
std::vector<XRMomentRow> estimate_xr_moments(const DynamicsSpec& dyn, const std::vector<double>& Rs,
                                             long replicas, uint64_t seed,
                                             long alpha1_replicas = 20000, int resolution = 100);

// ---------------------------------------------------------------------------
// Power-law fit (weighted least squares on log-log).
// ---------------------------------------------------------------------------

struct PowerPoint {
    double x = 0.0;       // e.g. r/R
    double value = 0.0;   // estimate
    double stderr_ = 0.0;
};
struct PowerFit {
    double slope = 0.0;       // d log value / d log x
    double slope_stderr = 0.0;
    double intercept = 0.0;
    int points_used = 0;
    int points_dropped = 0;  // nonpositive estimates
};
PowerFit fit_power_law(const std::vector<PowerPoint>& pts);

}  // namespace voroperc
