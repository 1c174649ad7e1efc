#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dplab/grid.hpp"
#include "dplab/recoding.hpp"
#include "dplab/refinement.hpp"

namespace dplab {

/// A barrier is whatever set the obstacle constraint is anchored to. The
/// level-k realization is a boolean mask on the level-k grid. Three
/// constructors:
///  - env threshold: mask(x) = env(x) >= theta, env resampled per level
///    (coverage-calibrated barriers; the set has fixed physical extent);
///  - geometric point: the single cell containing a point (shrinks with h);
///  - geometric segment: the one-cell-thick axis-aligned line through a
///    position (thickness shrinks with h).
class BarrierSpec {
public:
    static BarrierSpec env_threshold(Field env, double theta);
    static BarrierSpec point(std::vector<double> position);
    // One-cell-thick line through `offset` spanning [from, to] along the
    // given axis. Endpoints stay off the grounded boundary: a line touching
    // it has divergent Dirichlet energy (no plateau to certify).
    static BarrierSpec segment(int along_axis, double offset, double from = 0.15,
                               double to = 0.85);
    static BarrierSpec empty();

    // Mask sampled on an n-per-axis 2D/3D grid over [0,1]^d.
    std::vector<std::uint8_t> mask(const Grid& g) const;
    const std::string& describe() const { return describe_; }

private:
    std::function<std::vector<std::uint8_t>(const Grid&)> mask_fn_;
    std::string describe_;
};

enum class CapacityVerdict { Zero, Positive, Inconclusive };

struct CapacityLevel {
    int resolution = 0;  // cells per axis
    double energy = 0.0;
};

struct CapacityEstimate {
    std::vector<CapacityLevel> levels;
    CapacityVerdict verdict = CapacityVerdict::Inconclusive;
};

/// Resolutions probed per level. Capacity of log-type sets (points in 2D)
/// decays like 1/log(1/h), so a ladder whose resolution *exponents* grow
/// geometrically is what makes a 2^-k-style certificate visible; the
/// default ladder is 2^e+1 with e = 3, 5, 8, 13, ...
struct GridLadder {
    std::vector<int> resolutions;
    static GridLadder capacity_default(int k_max);
    static GridLadder dyadic(int base, int k_max);
};

struct CapacityOptions {
    double decay_factor = 1.5;   // verdict zero: E_k / E_{k+1} >= this at every step
    double plateau_band = 0.2;   // verdict positive: final two energies within this band
    double floor = 1e-12;        // energies at/below this count as zero
    int dilation_cells = 1;      // "near S" = this many cells of dilation per level
    double solve_tol = 1e-10;    // obstacle-solver max update per sweep
    int max_sweeps = 200000;
};

/// Minimal discrete Dirichlet energy sum over lattice edges (homogeneous
/// Dirichlet ghost ring) subject to u >= 1 on the mask dilated by
/// opts.dilation_cells, computed by projected SOR.
double obstacle_energy(const Grid& g, const std::vector<std::uint8_t>& mask,
                       const CapacityOptions& opts = {});

/// Runs obstacle_energy per ladder level on the spec's level masks and
/// reads a verdict off the energy trend.
CapacityEstimate capacity(const BarrierSpec& spec, const GridLadder& ladder, int k_max,
                          const CapacityOptions& opts = {});

/// True iff the capacity verdict is Zero. Inconclusive propagates as
/// InconclusiveVerdict.
std::pair<bool, CapacityEstimate> markov_unique(const BarrierSpec& spec,
                                                const GridLadder& ladder, int k_max,
                                                const CapacityOptions& opts = {});

struct ThetaCalibration {
    double theta = 0.0;
    int ladder_index = -1;
};

/// Least ladder theta whose coverage fraction stays within each policy's
/// stage tolerance of phi_star from the policy's stabilization index on.
/// Throws CalibrationFailure when no ladder entry qualifies.
ThetaCalibration calibrate_theta(const Field& env, double phi_star, const PolicyFamily& fam,
                                 const std::vector<double>& theta_ladder);

bool theta_qualifies(const Field& env, double theta, double phi_star, const PolicyFamily& fam);

// Coverage fraction of env >= theta after refining env to the policy stage.
double coverage_fraction(const Field& env, double theta, const RefinementPolicy& policy,
                         int level);

/// A coarse-graining scheme: the probed grid ladder together with the
/// discretization knobs (dilation rate, solver tolerance).
struct CoarseGrainScheme {
    std::string id;
    GridLadder ladder;
    CapacityOptions opts;
};

struct UniquenessFrequency {
    std::vector<std::string> scheme_ids;
    std::vector<double> fraction;     // per scheme: fraction classified Markov-unique
    std::vector<int> inconclusive;    // per scheme: members without a verdict
    double drift = 0.0;               // max pairwise |fraction difference|
};

/// Fraction of barrier samples classified Markov-unique under each
/// coarse-graining scheme; inconclusive members are reported, not fatal.
UniquenessFrequency uniqueness_frequency(const std::vector<BarrierSpec>& ensemble,
                                         const std::vector<CoarseGrainScheme>& schemes,
                                         int k_max);

/// v(x) = base + contrast * indicator(x); uniform ellipticity requires
/// base + min(contrast, 0) > 0.
struct CoefficientField {
    double base = 1.0;
    double contrast = 0.0;
    Field indicator;
};

struct CoercivityEntry {
    std::string recoding;
    int resolution = 0;
    double floor = 0.0;  // smallest probe Rayleigh quotient
    double ceiling = 0.0;
};

struct CoercivityReport {
    std::vector<CoercivityEntry> entries;
    bool stable = true;          // floors agree across recodings per level
    double max_floor_spread = 0.0;
};

/// Assembles a(u,u) = sum over edges of v_edge (du)^2 h^(d-2) with
/// arithmetic-mean edge coefficients and reports min/max Rayleigh
/// quotients over the tensor sine probe basis, per recoding of the
/// indicator and per level. Flags instability when the coercivity floor
/// varies across recodings beyond tol.
CoercivityReport coercivity_check(const CoefficientField& coef,
                                  const std::vector<Recoding>& recodings,
                                  const std::vector<int>& levels, double tol = 1e-9);

// Smallest eigenvalue of the probe problem for a constant coefficient:
// the lowest tensor sine mode of the Dirichlet Laplacian.
double dirichlet_laplacian_lambda_min(int n_per_axis, int naxes);

}  // namespace dplab
