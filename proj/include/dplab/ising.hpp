#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dplab/grid.hpp"

namespace dplab {

struct SpinConfig {
    Grid box;                   // 2D or 3D
    std::vector<std::int8_t> spins;  // +1 / -1 per site

    std::int8_t at(const std::vector<int>& c) const { return spins[box.index(c)]; }
};

SpinConfig make_spin_config(Grid box, std::vector<std::int8_t> spins);
SpinConfig uniform_config(Grid box, std::int8_t value);
/// Seeded random config keyed by site coordinates relative to the box
/// centre, so boxes of different shapes agree on their shared sites.
SpinConfig seeded_config(Grid box, std::uint64_t seed);

/// Finite-range ferromagnetic couplings: symmetric offset/weight list plus
/// an external field. Weights must be >= 0.
struct CouplingSpec {
    std::vector<std::pair<std::vector<int>, double>> neighbors;
    double field_h = 0.0;
};

CouplingSpec nearest_neighbor_coupling(int dimension, double J, double h);

enum class TieBreakKind { Plus, Minus, Keep, Flip, Parity, SeededRandom };

/// Local deterministic tie-break: the value at a tied site depends only on
/// the site (centre-relative), the current spin there, the step index and
/// the seed.
struct TieBreakRule {
    TieBreakKind kind = TieBreakKind::Plus;
    std::uint64_t seed = 0;
};

/// l_i = sum_j J_ij sigma_j + h over in-range neighbours; missing
/// neighbours on free axes contribute zero.
double local_field(const SpinConfig& s, const CouplingSpec& c, const std::vector<int>& site);

/// One synchronous update: +1 where l_i > 0, -1 where l_i < 0, tie-break
/// otherwise. Reads only the input config; the result is a fresh config.
SpinConfig step(const SpinConfig& s, const CouplingSpec& c, const TieBreakRule& rule,
                std::int64_t step_index = 0);

enum class CycleKind { None, FixedPoint, TwoCycle };

struct EvolveResult {
    SpinConfig final;
    int steps_taken = 0;
    CycleKind cycle = CycleKind::None;
    int detected_at = -1;               // step index where the cycle was confirmed
    std::vector<double> magnetization;  // per step, mean spin
};

/// Iterates step() up to max_steps, stopping early on a fixed point or
/// 2-cycle (hash-screened, then confirmed by exact comparison).
EvolveResult evolve(SpinConfig s, const CouplingSpec& c, const TieBreakRule& rule, int max_steps);

struct ShapeAgreement {
    std::vector<double> disagreement;  // per step, fraction of core sites where any two shapes differ
    int core_sites = 0;
    int validity_window = 0;  // steps before boundary effects can reach the core
};

/// Evolves the same seeded initial condition restricted to each box shape
/// and reports the per-step disagreement density on the common core (the
/// central core_fraction of the smallest box). All shapes are centre
/// aligned.
ShapeAgreement shape_agreement(std::uint64_t init_seed, const std::vector<std::vector<int>>& shapes,
                               const CouplingSpec& c, const TieBreakRule& rule, int steps,
                               double core_fraction);

}  // namespace dplab
