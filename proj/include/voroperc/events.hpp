#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "voroperc/geometry.hpp"
#include "voroperc/rng.hpp"

namespace voroperc {

// Colors are +1 (black) and -1 (white).
constexpr int8_t kBlack = 1;
constexpr int8_t kWhite = -1;

struct ColoredConfiguration {
    std::shared_ptr<const Tessellation> tess;
    std::vector<int8_t> colors;  // one per point
    double p = 0.5;

    // Region certified by check_padding_valid at construction; event
    // evaluators refuse regions outside it.
    Window certified_roi;
    bool certified = false;

    const Tessellation& t() const { return *tess; }
    size_t size() const { return colors.size(); }
};

// Fresh i.i.d. coloring of a tessellation.
ColoredConfiguration make_configuration(std::shared_ptr<const Tessellation> tess, Rng& rng,
                                        double p = 0.5);

// Square annulus A(center; r, R) = center + [-R,R]^2 \ ]-r,r[^2 (sup norm).
struct AnnulusSpec {
    Vec2 center;
    double r = 1.0;
    double R = 2.0;
};

enum class ArmRegion { FullPlane, HalfPlane, QuarterPlane };

// Cyclic (full-plane) or linear (half/quarter-plane) color pattern of the
// arms. Supported patterns have no two equal adjacent colors, except that a
// cyclic pattern may close with one equal pair (the odd-j alternating
// conventions: 1-arm single color, 3- and 5-arm alternating). Cyclic
// patterns match up to rotation; linear patterns up to reversal (the
// half-plane carries no preferred orientation).
struct ArmSpec {
    int j = 1;
    ArmRegion region = ArmRegion::FullPlane;
    std::vector<int8_t> pattern;

    static ArmSpec alternating(int j, ArmRegion region = ArmRegion::FullPlane,
                               int8_t first = kBlack);
};

enum class CrossDir { LeftRight, TopBottom };

struct event_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-color union-find labels over the whole tessellation (same-colored
// Delaunay-adjacent points share a label).
struct ClusterLabeling {
    std::vector<int> label;  // canonical representative per point
    int cluster_of(int i) const { return label[i]; }
};
ClusterLabeling cluster_labels(const ColoredConfiguration& cfg);

// ---------------------------------------------------------------------------
// Restricted event graphs. Building one is the expensive part (polygon
// clipping against the region); evaluation under recoloring is cheap and
// reused by the spectral tabulation and the dynamics.
// ---------------------------------------------------------------------------

struct WalkEntry {
    double t;   // position along the inner boundary walk
    int slot;   // participating-cell slot
};

// Endpoint classification of a shared-edge piece inside the region.
enum : uint8_t {
    kEndInternal = 0,  // Voronoi vertex inside the region (chains continue)
    kEndInner = 1,     // cut by the inner boundary
    kEndOuter = 2,     // cut by the outer boundary
    kEndSide = 3,      // cut by a half/quarter-plane side
};

// Region-clipped piece of the shared Voronoi edge between two cells; the
// pieces of differently colored cells chain into the color interfaces whose
// inner-to-outer count drives the arm criterion.
struct EdgePiece {
    int a = 0, b = 0;  // slots
    Vec2 p, q;
    uint8_t type_p = kEndInternal, type_q = kEndInternal;
    double t_p = 0.0, t_q = 0.0;  // inner-walk params of inner endpoints
    int left_p = -1, left_q = -1;  // slot on the lower-param side of an inner endpoint
    uint8_t wild_cut_in = 0, wild_cut_out = 0;  // hat: completion can cut here
};

struct EventGraph {
    std::vector<int> cells;                    // tessellation point indices
    std::vector<std::pair<int, int>> edges;    // slot pairs, shared edge meets region
    std::vector<uint8_t> touch_a;              // crossing: side A; arms: inner boundary
    std::vector<uint8_t> touch_b;              // crossing: side B; arms: outer boundary
    std::vector<uint8_t> wild_a, wild_b;       // hat variants: wildcard contact flags
    std::vector<WalkEntry> walk;               // arms: inner-boundary walk, sorted by t
    std::vector<EdgePiece> pieces;             // interface substrate
    std::vector<std::vector<std::pair<int, int>>> vertex_buckets;  // (piece, end) sharing a vertex
    bool cyclic = true;                        // full-plane walk wraps around
    int slot_count() const { return static_cast<int>(cells.size()); }
};

class CrossingContext {
  public:
    CrossingContext(const Tessellation& tess, const Window& rect, CrossDir dir);
    bool eval(const std::vector<int8_t>& colors, int8_t color) const;
    const EventGraph& graph() const { return g_; }

  private:
    EventGraph g_;
};

class ArmContext {
  public:
    ArmContext(const Tessellation& tess, const AnnulusSpec& ann, const ArmSpec& arms);
    bool eval(const std::vector<int8_t>& colors) const;
    const EventGraph& graph() const { return g_; }
    bool trivial() const { return trivial_; }  // r == R convention: always true

  private:
    EventGraph g_;
    ArmSpec arms_;
    bool trivial_ = false;
};

// ---------------------------------------------------------------------------
// One-shot event evaluators.
// ---------------------------------------------------------------------------

// Left-right (or top-bottom) crossing of rect by color-matching cells whose
// clipped parts are chained through shared Voronoi edges meeting rect.
bool crossing(const ColoredConfiguration& cfg, const Window& rect, CrossDir dir, int8_t color);

// j-arm event in the (full/half/quarter-plane) annulus.
bool arm_event(const ColoredConfiguration& cfg, const AnnulusSpec& ann, const ArmSpec& arms);

// Hat variants: positivity of the conditional arm probability given part of
// the configuration, evaluated through the wildcard-boundary surrogate
// (tessellation rebuilt from the conditioning points only; regions reachable
// by outside cells act as free connectors).
enum class HatKind {
    Annulus,   // conditioned on the annulus configuration (both boundaries free)
    Exterior,  // conditioned on the full outer box (outer boundary free)
    Interior,  // conditioned on everything outside the inner box (inner free)
};

struct HatEval {
    bool value = false;
    bool vacuous = false;  // no conditioning points: positivity is trivial
};

HatEval hat_arm_event_ex(const ColoredConfiguration& cfg, const AnnulusSpec& ann,
                         const ArmSpec& arms, HatKind kind = HatKind::Annulus);
bool hat_arm_event(const ColoredConfiguration& cfg, const AnnulusSpec& ann, const ArmSpec& arms,
                   HatKind kind = HatKind::Annulus);

// ---------------------------------------------------------------------------
// Pivotality.
// ---------------------------------------------------------------------------

using Event = std::function<bool(const ColoredConfiguration&)>;

// Flip-recheck-restore; the configuration is returned bit-identical.
bool pivotal_point(ColoredConfiguration& cfg, int x, const Event& event);

// Exhaustive recoloring of the points in D (early exit); throws
// "enumeration cap" above cap points.
bool pivotal_quenched_box(ColoredConfiguration& cfg, const Window& box, const Event& event,
                          int cap = 20);

enum class Tri { False, True, Undetermined };

// Annealed-pivotality classifier: resample positions and colors inside the
// box M times. One-sided error (1 - p_min)^M when all resamples agree.
Tri pivotal_annealed_mc(const ColoredConfiguration& cfg, const Window& box, const Event& event,
                        int M, Rng& rng, int quenched_cap = 20);

// Exact annealed-pivotality for monotone events: the conditional probability
// lies strictly between 0 and 1 iff the solid-black and solid-white fillings
// of the box disagree (dense-filler limit of the resampling classifier).
bool pivotal_box_monotone_crossing(const ColoredConfiguration& cfg, const Window& box,
                                   const Window& rect, CrossDir dir);

}  // namespace voroperc
