#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dplab/grid.hpp"

namespace dplab {

/// Resampling schemes accepted as admissible refinements. The catalog is
/// configurable by construction: a policy declares exactly one scheme.
///  - Nearest: value of the nearest source sample.
///  - Bilinear: separable linear interpolation on node samples
///    (x_i = i * h for Free axes, wrapped cell positions for Periodic).
///    Exact on per-axis linear ramps.
///  - ConservativeAverage: overlap-weighted cell averages; preserves the
///    field mean to machine precision.
enum class ResampleScheme { Nearest, Bilinear, ConservativeAverage };

struct PolicyStage {
    std::vector<int> resolution;  // grid dims at this stage
    int sample_count = 0;         // sampling schedule (time samples, subsequence strides)
    double tolerance = 0.0;       // stage tolerance, a strictly decreasing 2^-m ladder
    double window = 0.0;          // trailing-window fraction for trace extraction
};

/// Deterministic schedule from level n (1-based) to a discretization
/// stage. Stands in for an infinite refinement schedule, truncated at
/// max_level.
struct RefinementPolicy {
    std::string id;
    ResampleScheme scheme = ResampleScheme::Bilinear;
    int max_level = 5;
    int stabilization_index = 1;  // stages >= this index are subject to tolerance checks
    std::function<PolicyStage(int)> stage;
};

struct PolicyFamily {
    std::vector<RefinementPolicy> policies;
    int max_level = 5;
};

Field resample(const Field& f, const std::vector<int>& new_dims, ResampleScheme scheme);

/// Resamples f onto the stage-n grid of the policy.
/// Throws std::invalid_argument when n < 1 or n > policy.max_level.
Field refine(const Field& f, const RefinementPolicy& p, int level);

/// Stage resolutions double per level starting from base_dims; the stage
/// tolerance ladder is tol0 * 4^-(n-1); sample counts double from
/// samples0. growth scales the doubling (e.g. 1.5 for a slower ladder).
RefinementPolicy dyadic_policy(std::string id, std::vector<int> base_dims,
                               ResampleScheme scheme, int max_level,
                               double tol0 = 1e-3, int samples0 = 16,
                               double growth = 2.0);

PolicyFamily make_family(std::vector<RefinementPolicy> policies);

// Contract checks used by tests: strictly increasing resolutions and
// strictly decreasing tolerance ladder across 1..max_level.
bool policy_well_formed(const RefinementPolicy& p);

}  // namespace dplab
