#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dplab/grid.hpp"

namespace dplab {

enum class RecodingKind { Permutation, Reflection, Rotation, Resample, ValueRescale };

/// Exactly invertible transformation pair: a data-space map with its
/// inverse, plus the corresponding state-space (solution) map. Lattice
/// maps round-trip bit-exactly; value rescales round-trip within 1 ulp.
/// Lossy regridding is never expressed as a Recoding; that is what
/// RefinementPolicy is for.
struct Recoding {
    std::string name;
    RecodingKind kind;
    std::function<Field(const Field&)> forward;
    std::function<Field(const Field&)> inverse;
    std::function<Field(const Field&)> state_forward;
    std::function<Field(const Field&)> state_inverse;
};

Field apply_recoding(const Recoding& r, const Field& f);
Field apply_inverse(const Recoding& r, const Field& f);

// Catalog. State maps default to the data maps (grid symmetries act the
// same way on data and solutions; the affine rescale carries the same
// affine map on the solution space).
Recoding identity_recoding();
Recoding axis_reflection(int axis);
// quarter_turns in {1,2,3}; 2D fields; 90/270 degrees require square grids.
Recoding rotation90(int quarter_turns);
// 2D axis transpose (the nontrivial axis permutation).
Recoding transpose_recoding();
// Replicate each cell `factor` times per axis; inverse is the block mean,
// exact on images of the forward map.
Recoding upsample_recoding(int factor);
// x -> a*x + b with a != 0.
Recoding value_rescale(double a, double b);

// Named lookup used by protocol configs ("identity", "reflect0",
// "reflect1", "rot90", "rot180", "rot270", "transpose", "flipsign",
// "rescale:a:b", "upsample:k").
Recoding recoding_by_name(const std::string& name);

}  // namespace dplab
