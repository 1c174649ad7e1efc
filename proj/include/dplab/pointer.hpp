#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "dplab/refinement.hpp"

namespace dplab {

using CMatrix = Eigen::MatrixXcd;

struct HilbertSpec {
    int dim_s = 2;
    int dim_e = 2;
    static constexpr int kDimCap = 64;  // dim_s * dim_e cap, desk scale
};

/// Validated density matrix: Hermitian and unit trace to 1e-10, smallest
/// eigenvalue >= -1e-10.
struct DensityMatrix {
    CMatrix rho;
};

DensityMatrix make_density(CMatrix rho);

/// Menu of admissible orthonormal bases on the system space; each entry is
/// a unitary whose columns are the basis vectors. Labels order ties.
struct BasisMenu {
    std::vector<CMatrix> bases;
    std::vector<std::string> labels;
};

BasisMenu make_menu(std::vector<CMatrix> bases, std::vector<std::string> labels);

struct TimeGridQuadrature {
    double horizon = 1.0;
    std::vector<double> nodes;
    std::vector<double> weights;
    static TimeGridQuadrature trapezoid(double horizon, int intervals);
};

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix partial_trace_env(const CMatrix& rho_se, int dim_s, int dim_e);

/// Caches the eigendecomposition of a Hermitian generator so that
/// e^{-iHt} rho e^{+iHt} costs two dense multiplies per time.
class Propagator {
public:
    explicit Propagator(const CMatrix& hamiltonian);
    CMatrix evolve(const CMatrix& rho, double t) const;

private:
    Eigen::SelfAdjointEigenSolver<CMatrix> es_;
};

/// e^{-iHt} rho e^{+iHt} by eigendecomposition. H must be Hermitian
/// (checked to 1e-10) and t >= 0.
CMatrix evolve_state(const CMatrix& hamiltonian, const CMatrix& rho, double t);

/// Trace norm of the off-diagonal part of B^dagger rho B. The off-diagonal
/// part of a Hermitian matrix is Hermitian, so the trace norm is the sum
/// of absolute eigenvalues.
double offdiag_norm(const CMatrix& rho_s, const CMatrix& basis);

/// Quadrature value of int_0^T |offdiag_B(Tr_E[U_t (rho_s0 x rho_e) U_t^dag])|_1 dt.
double decoherence_functional(const CMatrix& basis, const CMatrix& rho_e, const CMatrix& hamiltonian,
                              const CMatrix& rho_s0, const TimeGridQuadrature& quad);

struct PreferredBasisResult {
    std::vector<int> argmin_set;  // menu indices within tie tolerance of the minimum, label order
    std::vector<double> values;   // functional value per menu entry
};

PreferredBasisResult preferred_basis(const BasisMenu& menu, const CMatrix& rho_e,
                                     const CMatrix& hamiltonian, const CMatrix& rho_s0,
                                     const TimeGridQuadrature& quad, double tie_tol = 1e-9);

/// Finite-truncation universal stability: for every policy there is a q in
/// q_grid whose empirical exceedance fraction at the policy's finest
/// sampling stage is <= density_tol. Policies provide sample counts via
/// their stage sample_count.
bool universally_stable(const CMatrix& basis, const CMatrix& rho_e, const CMatrix& hamiltonian,
                        const CMatrix& rho_s0, const PolicyFamily& fam,
                        const std::vector<double>& q_grid, double density_tol, double horizon);

/// Declared alternative encoding of the environment: a unitary change of
/// the environment code space applied consistently to rho_e and H.
struct EnvEncoding {
    std::string name;
    CMatrix unitary;
};

struct BasisFrequencyMap {
    std::map<std::string, double> frequency;  // selected-label frequency, base encoding
    double encoding_drift = 0.0;              // max TV distance across encodings
};

BasisFrequencyMap basis_frequency_map(const std::vector<CMatrix>& rho_e_ensemble,
                                      const BasisMenu& menu, const CMatrix& hamiltonian,
                                      const CMatrix& rho_s0, const TimeGridQuadrature& quad,
                                      const std::vector<EnvEncoding>& encodings,
                                      double tie_tol = 1e-9);

// Model presets -------------------------------------------------------------

CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
/// g sigma_z x sigma_z (+ hs sigma_z x I + he I x sigma_z): pure dephasing
/// in the computational basis.
CMatrix dephasing_hamiltonian(double g, double hs = 0.0, double he = 0.0);
/// exp(-beta H_e) normalized.
CMatrix thermal_state(const CMatrix& h_env, double beta);

/// Text matrix format: one row per line, entries as "re im" pairs
/// separated by whitespace; '#' starts a comment.
CMatrix read_complex_matrix(const std::string& path);
void write_complex_matrix(const CMatrix& m, const std::string& path);

}  // namespace dplab
