#pragma once

#include <vector>

#include "voroperc/events.hpp"
#include "voroperc/rng.hpp"

namespace voroperc {

struct dynamics_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Movers.
// ---------------------------------------------------------------------------

struct MoverKind {
    enum class Type { Zero, Brownian, IsotropicStable, CompoundPoissonPareto };
    Type type = Type::Brownian;
    double alpha = 1.0;  // stable index / Pareto tail exponent
    double rate = 1.0;   // compound-Poisson jump rate

    static MoverKind zero() { return {Type::Zero, 0.0, 0.0}; }
    static MoverKind brownian() { return {Type::Brownian, 2.0, 0.0}; }
    static MoverKind stable(double alpha) { return {Type::IsotropicStable, alpha, 0.0}; }
    static MoverKind compound_pareto(double alpha, double rate = 1.0) {
        return {Type::CompoundPoissonPareto, alpha, rate};
    }
};

// Isotropic alpha-stable increment over time t via Brownian subordination:
// sqrt(S) * N(0, I_2) with S a positive (alpha/2)-stable variable normalized
// so that E[exp(i<u,X_t>)] = exp(-t |u|^alpha / 2^{alpha/2}); alpha = 2 is a
// Brownian increment with per-axis variance t.
Vec2 sample_stable_increment(double alpha, double t, Rng& rng);

Vec2 sample_mover_increment(const MoverKind& mover, double t, Rng& rng);

// Empirical check of the heavy-tail lower bound P[|X_t| >= L] >= c t / L^alpha.
struct TailCheckReport {
    double alpha = 0.0;
    std::vector<double> ts, Ls;
    std::vector<std::vector<double>> p;      // p[it][iL]
    std::vector<std::vector<double>> ratio;  // p * L^alpha / t
    double slope = 0.0, intercept = 0.0;     // log-log fit at the largest t
    double c_estimate = 0.0;                 // median ratio over the grid
    double min_ratio = 0.0;
    bool bound_holds = false;
    int draws = 0;
};
TailCheckReport tail_check(const MoverKind& mover, const std::vector<double>& ts,
                           const std::vector<double>& Ls, int draws, uint64_t seed);

// ---------------------------------------------------------------------------
// Frozen dynamics: colors resampled at rate-1 clocks, the point set frozen.
// ---------------------------------------------------------------------------

struct FrozenTrajectory {
    ColoredConfiguration base;
    struct Flip {
        double t;
        int point;
        int8_t color;  // freshly drawn color (half the rings are no-ops)
    };
    std::vector<Flip> events;  // sorted by (t, point)
    double horizon = 0.0;

    // color state at time t (0 <= t <= horizon)
    std::vector<int8_t> colors_at(double t) const;
    ColoredConfiguration config_at(double t) const;
};

FrozenTrajectory simulate_frozen(const ColoredConfiguration& cfg, double horizon, Rng& rng);

// ---------------------------------------------------------------------------
// Moving dynamics: colors frozen, points displaced by i.i.d. mover
// increments on a uniform grid of step dt.
// ---------------------------------------------------------------------------

struct MovingSnapshot {
    ColoredConfiguration cfg;
    bool padding_valid = false;
};

struct MovingTrajectory {
    ColoredConfiguration initial;
    MoverKind mover;
    double dt = 0.01;
    double horizon = 1.0;
    int steps = 0;
    std::vector<std::vector<Vec2>> positions;  // positions[k] at time k*dt
    Window roi;  // certification target for rebuilt snapshots

    int step_of(double t) const;  // largest grid step <= t
    MovingSnapshot snapshot(int step) const;
};

MovingTrajectory simulate_moving(const ColoredConfiguration& cfg, const Window& roi, double horizon,
                                 double dt, const MoverKind& mover, Rng& rng);

// Mixed dynamics: independent composition of motion and color clocks.
struct MixedTrajectory {
    MovingTrajectory motion;
    FrozenTrajectory clocks;  // events applied on top of the moving colors

    MovingSnapshot snapshot_at(double t) const;
};

MixedTrajectory simulate_mixed(const ColoredConfiguration& cfg, const Window& roi, double horizon,
                               double dt, const MoverKind& mover, Rng& rng);

// ---------------------------------------------------------------------------
// Functionals.
// ---------------------------------------------------------------------------

// Event values along a trajectory at the requested times; frozen evaluation
// is reused between color events (piecewise-constant exactness).
std::vector<char> indicator_path(const FrozenTrajectory& traj, const Event& event,
                                 const std::vector<double>& times);
std::vector<char> indicator_path(const MovingTrajectory& traj, const Event& event,
                                 const std::vector<double>& times);

// X_R = int_0^1 f_R(omega(t)) dt with f_R the one-arm event A_1(1,R).
// Exact for frozen trajectories; left-endpoint Riemann sum with O(dt) bias
// for moving/mixed ones.
struct XRResult {
    double value = 0.0;
    bool padding_ok = true;  // moving/mixed snapshots all certified
};
XRResult integral_X_R(const FrozenTrajectory& traj, double R);
XRResult integral_X_R(const MovingTrajectory& traj, double R, int resolution);
XRResult integral_X_R(const MixedTrajectory& traj, double R, int resolution);

// ---------------------------------------------------------------------------
// Configuration metric d = int_0^inf e^-r d'_r / (1 + d'_r) dr, where d'_r
// is the color-preserving bottleneck matching distance between the
// restrictions to [-r,r]^2 (1 when the counts differ). The integrand is
// piecewise constant between the radii where points enter the box, so the
// integral is evaluated exactly up to the reported truncation error.
// ---------------------------------------------------------------------------

struct MetricResult {
    double value = 0.0;
    double truncation_error = 0.0;  // <= e^-r_max
};

MetricResult config_metric(const ColoredConfiguration& a, const ColoredConfiguration& b,
                           double r_max);

// Bottleneck bipartite matching distance between two equal-size point lists
// (binary search over pairwise distances + Hopcroft-Karp). Exposed for tests.
double bottleneck_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

}  // namespace voroperc
