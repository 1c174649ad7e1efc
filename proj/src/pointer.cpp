#include "dplab/pointer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dplab {

namespace {

constexpr double kHermTol = 1e-10;

bool is_hermitian(const CMatrix& m, double tol) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const CMatrix& m, double tol) {
    CMatrix id = CMatrix::Identity(m.rows(), m.cols());
    return (m.adjoint() * m - id).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

DensityMatrix make_density(CMatrix rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("density matrix must be square");
    if (!is_hermitian(rho, kHermTol))
        throw std::invalid_argument("density matrix must be Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > kHermTol || std::abs(rho.trace().imag()) > kHermTol)
        throw std::invalid_argument("density matrix must have unit trace");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kHermTol)
        throw std::invalid_argument("density matrix must be positive semidefinite");
    return DensityMatrix{std::move(rho)};
}

BasisMenu make_menu(std::vector<CMatrix> bases, std::vector<std::string> labels) {
    if (bases.empty()) throw std::invalid_argument("basis menu must be non-empty");
    if (bases.size() != labels.size()) throw std::invalid_argument("menu label count mismatch");
    for (const auto& b : bases)
        if (!is_unitary(b, kHermTol)) throw std::invalid_argument("menu entries must be unitary");
    return BasisMenu{std::move(bases), std::move(labels)};
}

TimeGridQuadrature TimeGridQuadrature::trapezoid(double horizon, int intervals) {
    if (!(horizon > 0.0) || intervals < 1)
        throw std::invalid_argument("bad quadrature spec");
    TimeGridQuadrature q;
    q.horizon = horizon;
    double h = horizon / intervals;
    for (int i = 0; i <= intervals; ++i) {
        q.nodes.push_back(i * h);
        q.weights.push_back((i == 0 || i == intervals) ? h / 2.0 : h);
    }
    return q;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix partial_trace_env(const CMatrix& rho_se, int dim_s, int dim_e) {
    if (rho_se.rows() != static_cast<Eigen::Index>(dim_s) * dim_e)
        throw std::invalid_argument("partial trace: dimension mismatch");
    CMatrix out = CMatrix::Zero(dim_s, dim_s);
    for (int i = 0; i < dim_s; ++i)
        for (int j = 0; j < dim_s; ++j)
            for (int e = 0; e < dim_e; ++e)
                out(i, j) += rho_se(i * dim_e + e, j * dim_e + e);
    return out;
}

Propagator::Propagator(const CMatrix& hamiltonian) : es_(hamiltonian) {
    if (!is_hermitian(hamiltonian, kHermTol))
        throw std::invalid_argument("Hamiltonian must be Hermitian");
}

CMatrix Propagator::evolve(const CMatrix& rho, double t) const {
    const auto& v = es_.eigenvectors();
    const auto& w = es_.eigenvalues();
    Eigen::VectorXcd phase(w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k)
        phase(k) = std::polar(1.0, -w(k) * t);
    CMatrix u = v * phase.asDiagonal() * v.adjoint();
    return u * rho * u.adjoint();
}

CMatrix evolve_state(const CMatrix& hamiltonian, const CMatrix& rho, double t) {
    if (t < 0.0) throw std::invalid_argument("evolve_state: t must be >= 0");
    Propagator prop(hamiltonian);
    return prop.evolve(rho, t);
}

double offdiag_norm(const CMatrix& rho_s, const CMatrix& basis) {
    if (rho_s.rows() != basis.rows())
        throw std::invalid_argument("offdiag_norm: dimension mismatch");
    CMatrix in_basis = basis.adjoint() * rho_s * basis;
    in_basis.diagonal().setZero();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(in_basis, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

double decoherence_functional(const CMatrix& basis, const CMatrix& rho_e,
                              const CMatrix& hamiltonian, const CMatrix& rho_s0,
                              const TimeGridQuadrature& quad) {
    int dim_s = static_cast<int>(rho_s0.rows());
    int dim_e = static_cast<int>(rho_e.rows());
    if (dim_s * dim_e > HilbertSpec::kDimCap)
        throw std::invalid_argument("composite dimension exceeds the desk-scale cap");
    CMatrix rho_se = kron(rho_s0, rho_e);
    Propagator prop(hamiltonian);
    double acc = 0.0;
    for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
        CMatrix rho_t = prop.evolve(rho_se, quad.nodes[k]);
        CMatrix rho_s = partial_trace_env(rho_t, dim_s, dim_e);
        acc += quad.weights[k] * offdiag_norm(rho_s, basis);
    }
    return acc;
}

PreferredBasisResult preferred_basis(const BasisMenu& menu, const CMatrix& rho_e,
                                     const CMatrix& hamiltonian, const CMatrix& rho_s0,
                                     const TimeGridQuadrature& quad, double tie_tol) {
    PreferredBasisResult out;
    out.values.reserve(menu.bases.size());
    for (const auto& b : menu.bases)
        out.values.push_back(decoherence_functional(b, rho_e, hamiltonian, rho_s0, quad));
    double best = *std::min_element(out.values.begin(), out.values.end());
    for (std::size_t i = 0; i < out.values.size(); ++i)
        if (out.values[i] <= best + tie_tol) out.argmin_set.push_back(static_cast<int>(i));
    return out;
}

bool universally_stable(const CMatrix& basis, const CMatrix& rho_e, const CMatrix& hamiltonian,
                        const CMatrix& rho_s0, const PolicyFamily& fam,
                        const std::vector<double>& q_grid, double density_tol, double horizon) {
    int dim_s = static_cast<int>(rho_s0.rows());
    int dim_e = static_cast<int>(rho_e.rows());
    CMatrix rho_se = kron(rho_s0, rho_e);
    Propagator prop(hamiltonian);
    const double slack = 1e-12;
    for (const auto& policy : fam.policies) {
        int samples = std::max(1, policy.stage(policy.max_level).sample_count);
        std::vector<double> norms(samples);
        for (int j = 0; j < samples; ++j) {
            double t = (j + 0.5) * horizon / samples;
            CMatrix rho_s = partial_trace_env(prop.evolve(rho_se, t), dim_s, dim_e);
            norms[j] = offdiag_norm(rho_s, basis);
        }
        bool ok = false;
        for (double q : q_grid) {
            int exceed = 0;
            for (double v : norms)
                if (v > q) ++exceed;
            if (static_cast<double>(exceed) / samples <= density_tol + slack) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

BasisFrequencyMap basis_frequency_map(const std::vector<CMatrix>& rho_e_ensemble,
                                      const BasisMenu& menu, const CMatrix& hamiltonian,
                                      const CMatrix& rho_s0, const TimeGridQuadrature& quad,
                                      const std::vector<EnvEncoding>& encodings, double tie_tol) {
    if (rho_e_ensemble.empty()) throw std::invalid_argument("empty environment ensemble");
    int dim_s = static_cast<int>(rho_s0.rows());

    auto frequencies = [&](const EnvEncoding* enc) {
        std::map<std::string, double> freq;
        for (const auto& label : menu.labels) freq[label] = 0.0;
        for (const auto& rho_e : rho_e_ensemble) {
            CMatrix re = rho_e;
            CMatrix h = hamiltonian;
            if (enc) {
                re = enc->unitary * rho_e * enc->unitary.adjoint();
                CMatrix lift = kron(CMatrix::Identity(dim_s, dim_s), enc->unitary);
                h = lift * hamiltonian * lift.adjoint();
            }
            PreferredBasisResult r = preferred_basis(menu, re, h, rho_s0, quad, tie_tol);
            freq[menu.labels[r.argmin_set.front()]] += 1.0;  // first label wins ties
        }
        for (auto& [k, v] : freq) v /= static_cast<double>(rho_e_ensemble.size());
        return freq;
    };

    BasisFrequencyMap out;
    out.frequency = frequencies(nullptr);
    for (const auto& enc : encodings) {
        auto f = frequencies(&enc);
        double tv_dist = 0.0;
        for (const auto& [k, v] : out.frequency) tv_dist += std::abs(v - f.at(k));
        out.encoding_drift = std::max(out.encoding_drift, tv_dist / 2.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Presets and I/O

CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << std::complex<double>(0, 0), std::complex<double>(0, -1), std::complex<double>(0, 1),
        std::complex<double>(0, 0);
    return m;
}

CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

CMatrix dephasing_hamiltonian(double g, double hs, double he) {
    CMatrix id = CMatrix::Identity(2, 2);
    return g * kron(pauli_z(), pauli_z()) + hs * kron(pauli_z(), id) + he * kron(id, pauli_z());
}

CMatrix thermal_state(const CMatrix& h_env, double beta) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h_env);
    Eigen::VectorXd w = es.eigenvalues();
    double wmin = w.minCoeff();
    Eigen::VectorXd p(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) p(i) = std::exp(-beta * (w(i) - wmin));
    p /= p.sum();
    return es.eigenvectors() * p.cast<std::complex<double>>().asDiagonal() *
           es.eigenvectors().adjoint();
}

CMatrix read_complex_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open matrix file: " + path);
    std::vector<std::vector<std::complex<double>>> rows;
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::complex<double>> row;
        double re, im;
        while (ls >> re >> im) row.emplace_back(re, im);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("matrix file has no rows: " + path);
    std::size_t cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != cols) throw std::runtime_error("ragged matrix file: " + path);
    CMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

void write_complex_matrix(const CMatrix& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << "  ";
            os << m(i, j).real() << " " << m(i, j).imag();
        }
        os << "\n";
    }
}

}  // namespace dplab
