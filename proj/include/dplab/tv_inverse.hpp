#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dplab/grid.hpp"
#include "dplab/recoding.hpp"
#include "dplab/refinement.hpp"

namespace dplab {

enum class OperatorKind { Identity, Convolution, Subsampling };

/// Linear forward operator with an explicit adjoint. The adjoint pairing
/// <Au, w> = <u, A^T w> is a module invariant, probed in tests on random
/// fields.
class ForwardOperator {
public:
    static ForwardOperator identity();
    // Same-grid convolution; kernel dims must be odd per axis. Free axes
    // zero-pad, periodic axes wrap.
    static ForwardOperator convolution(Field kernel);
    // Componentwise 0/1 mask (observed entries keep their value).
    static ForwardOperator subsampling(std::vector<std::uint8_t> mask);

    OperatorKind kind() const { return kind_; }
    Field apply(const Field& u) const { return apply_(u); }
    Field adjoint(const Field& w) const { return adjoint_(w); }
    // Upper bound for the operator norm used to size solver steps.
    double norm_bound(const Grid& domain) const;

private:
    ForwardOperator() = default;
    OperatorKind kind_ = OperatorKind::Identity;
    std::function<Field(const Field&)> apply_, adjoint_;
    Field kernel_;                      // convolution only
    std::vector<std::uint8_t> mask_;    // subsampling only
};

struct InverseProblem {
    ForwardOperator op;
    Field data;
    double noise_level = 0.0;  // epsilon >= 0, in the raw l2 norm of the data grid
    double tau = 1.1;          // discrepancy factor, > 1
    double mu = 1e-8;          // quadratic reinforcement, >= 0
};

struct LambdaGrid {
    std::vector<double> values;  // strictly ascending, all > 0
    // Geometric ladder lambda0 * factor^k, k = 0..count-1.
    static LambdaGrid geometric(double lambda0 = 1e-3, int count = 20, double factor = 2.0);
};

struct TvSolveOptions {
    double tol = 1e-6;       // first-order optimality residual target (RMS)
    int max_iter = 200000;
    bool randomize_init = false;
    std::uint64_t init_seed = 0;
    int trace_stride = 1;    // record the objective every k-th iterate
};

struct TvSolution {
    Field u;
    double optimality_residual = 0.0;  // max of primal/dual fixed-point residuals, RMS
    int iterations = 0;
    double objective = 0.0;
    std::vector<double> objective_trace;
};

/// Anisotropic total variation: raw sum over axes of |forward
/// differences|; free axes take one-sided differences at the boundary
/// (n-1 terms), periodic axes wrap (n terms). No spacing weights: this is
/// the grid functional, not a continuum quadrature.
double tv(const Field& u);

double residual_norm(const InverseProblem& p, const Field& u);
double objective_value(const InverseProblem& p, double lambda, const Field& u);

/// Approximate minimizer of |Au-d|^2 + lambda*TV(u) + mu*|u|^2 by a
/// primal-dual (Chambolle-Pock) iteration. The reported optimality
/// residual is the RMS norm of the fixed-point residuals of the
/// primal-dual map; a zero residual is exactly the first-order condition
/// for a saddle point. Throws SolverFailure when the iteration budget is
/// exhausted.
TvSolution solve_tv(const InverseProblem& p, double lambda, TvSolveOptions opts = {});

struct DiscrepancyResult {
    double lambda = 0.0;
    int index = -1;  // ladder index
    Field u;
    double residual = 0.0;
};

/// Least ladder lambda with |A u_lambda - d| <= tau * epsilon, found by an
/// ascending scan that stops at the first admissible entry (and therefore
/// agrees with the full linear scan by construction). Throws
/// NoAdmissibleLambda when no entry qualifies.
DiscrepancyResult discrepancy_lambda(const InverseProblem& p, const LambdaGrid& grid,
                                     TvSolveOptions opts = {});

/// Recode-then-reconstruct vs reconstruct-then-recode gap at stage n:
///   rms(U(s(d)) - s(T(d))) / (1 + rms(s(d)))
/// where s = refine to stage n, pick lambda by discrepancy, solve. The
/// stage problem inherits the relative noise budget epsilon/|d|, so value
/// rescales keep a consistent acceptance set.
double commutation_gap(const InverseProblem& p, const Recoding& r,
                       const RefinementPolicy& policy, int level,
                       const LambdaGrid& grid, TvSolveOptions opts = {});

}  // namespace dplab
