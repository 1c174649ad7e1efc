#include <cmath>
#include <complex>
#include <stdexcept>

#include "doctest.h"

#include "dplab/pointer.hpp"
#include "dplab/refinement.hpp"
#include "dplab/rng.hpp"

using namespace dplab;
using Cplx = std::complex<double>;

namespace {

CMatrix plus_state() {
    CMatrix r(2, 2);
    r << 0.5, 0.5, 0.5, 0.5;
    return r;
}

CMatrix hadamard() {
    CMatrix h(2, 2);
    h << 1, 1, 1, -1;
    return h / std::sqrt(2.0);
}

CMatrix random_hermitian(int n, std::uint64_t seed) {
    RngKey key(seed);
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double re = key.with(i * n + j).with(0).normal();
            double im = i == j ? 0.0 : key.with(i * n + j).with(1).normal();
            m(i, j) = Cplx(re, im);
            m(j, i) = Cplx(re, -im);
        }
    }
    return m;
}

CMatrix random_density(int n, std::uint64_t seed) {
    CMatrix a = random_hermitian(n, seed);
    CMatrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return rho;
}

// closed-form dephasing factor for H = g sz x sz with a z-diagonal
// environment: f(t) = p e^{-2igt} + (1-p) e^{+2igt}
double dephasing_oracle_phi(double g, double p, double horizon) {
    auto absf = [&](double t) {
        Cplx f = p * std::exp(Cplx(0, -2.0 * g * t)) + (1.0 - p) * std::exp(Cplx(0, 2.0 * g * t));
        return std::abs(f);
    };
    // dense trapezoid on the analytic integrand
    const int n = 400000;
    double h = horizon / n, acc = 0.5 * (absf(0) + absf(horizon));
    for (int i = 1; i < n; ++i) acc += absf(i * h);
    return acc * h;
}

}  // namespace

TEST_CASE("density matrix validation") {
    CMatrix good = plus_state();
    CHECK_NOTHROW(make_density(good));
    CMatrix bad_trace = 2.0 * good;
    CHECK_THROWS_AS(make_density(bad_trace), std::invalid_argument);
    CMatrix non_herm(2, 2);
    non_herm << 1.0, 0.5, 0.0, 0.0;
    CHECK_THROWS_AS(make_density(non_herm), std::invalid_argument);
    CMatrix indefinite(2, 2);
    indefinite << 1.5, 0, 0, -0.5;
    CHECK_THROWS_AS(make_density(indefinite), std::invalid_argument);
}

TEST_CASE("evolve_state: t = 0 and commuting generators leave the state alone") {
    CMatrix rho = plus_state();
    CMatrix h = pauli_z();
    CHECK((evolve_state(h, rho, 0.0) - rho).cwiseAbs().maxCoeff() <= 1e-14);

    CMatrix diag_rho(2, 2);
    diag_rho << 0.7, 0, 0, 0.3;
    for (double t : {0.3, 1.7, 4.0})
        CHECK((evolve_state(h, diag_rho, t) - diag_rho).cwiseAbs().maxCoeff() <= 1e-12);

    CMatrix non_herm(2, 2);
    non_herm << 0, 1, 0, 0;
    CHECK_THROWS_AS(evolve_state(non_herm, rho, 1.0), std::invalid_argument);
}

TEST_CASE("evolve_state matches the closed 2x2 dephasing formula") {
    CMatrix rho = plus_state();
    for (double t : {0.25, M_PI / 4, M_PI / 2, 2.0}) {
        CMatrix out = evolve_state(pauli_z(), rho, t);
        Cplx expect = 0.5 * std::exp(Cplx(0, -2.0 * t));
        CHECK(std::abs(out(0, 1) - expect) <= 1e-12);
        CHECK(std::abs(out(0, 0) - 0.5) <= 1e-12);
    }
}

TEST_CASE("trace and Hermiticity survive evolution") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        CMatrix h = random_hermitian(6, seed);
        CMatrix rho = random_density(6, seed + 100);
        CMatrix out = evolve_state(h, rho, 1.37);
        CHECK(std::abs(out.trace().real() - 1.0) <= 1e-10);
        CHECK(std::abs(out.trace().imag()) <= 1e-10);
        CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("offdiag_norm: diagonal, plus state, maximally mixed") {
    CMatrix id = CMatrix::Identity(2, 2);
    CMatrix diag_rho(2, 2);
    diag_rho << 0.7, 0, 0, 0.3;
    CHECK(offdiag_norm(diag_rho, id) == doctest::Approx(0.0).epsilon(1e-14));

    // |+><+| in the computational basis: two singular values of 1/2
    CHECK(offdiag_norm(plus_state(), id) == doctest::Approx(1.0).epsilon(1e-12));

    CMatrix mixed = 0.5 * CMatrix::Identity(2, 2);
    for (const CMatrix& b : {id, hadamard()})
        CHECK(offdiag_norm(mixed, b) <= 1e-14);
}

TEST_CASE("decoherence functional vanishes when nothing ever acquires coherence") {
    CMatrix h = kron(pauli_z(), CMatrix::Identity(2, 2));
    CMatrix rho_s(2, 2);
    rho_s << 0.8, 0, 0, 0.2;
    CMatrix rho_e = 0.5 * CMatrix::Identity(2, 2);
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(5.0, 64);
    double phi = decoherence_functional(CMatrix::Identity(2, 2), rho_e, h, rho_s, quad);
    CHECK(phi <= 1e-12);
}

TEST_CASE("uncoupled evolution keeps the coherence constant: phi = c * T") {
    CMatrix id = CMatrix::Identity(2, 2);
    CMatrix h = kron(pauli_z(), id) + 1.3 * kron(id, pauli_z());
    CMatrix rho_e(2, 2);
    rho_e << 0.6, 0, 0, 0.4;
    double horizon = 4.0;
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(horizon, 128);
    double c = offdiag_norm(plus_state(), id);
    double phi = decoherence_functional(id, rho_e, h, plus_state(), quad);
    CHECK(phi == doctest::Approx(c * horizon).epsilon(1e-10));
}

TEST_CASE("two-qubit dephasing matches the closed-form factor") {
    double g = 0.9, p = 0.75, horizon = 5.0;
    CMatrix h = g * kron(pauli_z(), pauli_z());
    CMatrix rho_e(2, 2);
    rho_e << p, 0, 0, 1 - p;
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(horizon, 4096);
    double phi = decoherence_functional(CMatrix::Identity(2, 2), rho_e, h, plus_state(), quad);
    double oracle = dephasing_oracle_phi(g, p, horizon);
    CHECK(phi == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("preferred_basis: singleton menu, dephasing selection, duplicate labels") {
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(5.0, 256);
    CMatrix h = 0.8 * kron(pauli_z(), pauli_z());
    CMatrix rho_e(2, 2);
    rho_e << 0.7, 0, 0, 0.3;
    CMatrix rho_s(2, 2);
    rho_s << 0.8, 0, 0, 0.2;

    BasisMenu single = make_menu({hadamard()}, {"X"});
    PreferredBasisResult r1 = preferred_basis(single, rho_e, h, rho_s, quad);
    CHECK(r1.argmin_set == std::vector<int>{0});

    BasisMenu zx = make_menu({CMatrix::Identity(2, 2), hadamard()}, {"Z", "X"});
    PreferredBasisResult r2 = preferred_basis(zx, rho_e, h, rho_s, quad);
    REQUIRE(r2.argmin_set == std::vector<int>{0});  // Z wins: phi is exactly zero
    CHECK(r2.values[0] <= 1e-12);
    CHECK(r2.values[1] > 0.1);  // X keeps |2a-1| coherence forever

    BasisMenu dup = make_menu({hadamard(), hadamard()}, {"X1", "X2"});
    PreferredBasisResult r3 = preferred_basis(dup, rho_e, h, rho_s, quad);
    CHECK(r3.argmin_set == std::vector<int>{0, 1});
}

TEST_CASE("unitary relabeling permutes the argmin set identically") {
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(4.0, 128);
    CMatrix h = 0.8 * kron(pauli_z(), pauli_z()) + 0.4 * kron(CMatrix::Identity(2, 2), pauli_z());
    CMatrix rho_e(2, 2);
    rho_e << 0.65, 0, 0, 0.35;
    CMatrix rho_s(2, 2);
    rho_s << 0.8, 0, 0, 0.2;
    BasisMenu menu = make_menu({CMatrix::Identity(2, 2), hadamard()}, {"Z", "X"});

    // conjugate everything by a fixed unitary on the system space
    CMatrix v = hadamard();
    CMatrix lift = kron(v, CMatrix::Identity(2, 2));
    BasisMenu moved = make_menu({v * menu.bases[0], v * menu.bases[1]}, {"Z", "X"});
    CMatrix h2 = lift * h * lift.adjoint();
    CMatrix rho_s2 = v * rho_s * v.adjoint();

    PreferredBasisResult a = preferred_basis(menu, rho_e, h, rho_s, quad);
    PreferredBasisResult b = preferred_basis(moved, rho_e, h2, rho_s2, quad);
    CHECK(a.argmin_set == b.argmin_set);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-10));
}

TEST_CASE("quadrature self-convergence order is at least 1.9") {
    double g = 0.9, horizon = 5.0;
    CMatrix h = g * kron(pauli_z(), pauli_z());
    CMatrix rho_e(2, 2);
    rho_e << 0.75, 0, 0, 0.25;
    auto phi_at = [&](int intervals) {
        return decoherence_functional(CMatrix::Identity(2, 2), rho_e, h, plus_state(),
                                      TimeGridQuadrature::trapezoid(horizon, intervals));
    };
    double p64 = phi_at(64), p128 = phi_at(128), p256 = phi_at(256);
    double order = std::log2(std::abs(p64 - p128) / std::abs(p128 - p256));
    CHECK(order >= 1.9);
}

TEST_CASE("universally_stable: decaying, constant and zero coherence") {
    // a 16-level environment with spread frequencies dephases the qubit
    // essentially monotonically over the window
    int dim_e = 16;
    CMatrix h_e = CMatrix::Zero(dim_e, dim_e);
    RngKey key(4);
    for (int e = 0; e < dim_e; ++e) h_e(e, e) = 2.0 * key.with(e).normal();
    CMatrix h = kron(pauli_z(), h_e);
    CMatrix rho_e = CMatrix::Zero(dim_e, dim_e);
    for (int e = 0; e < dim_e; ++e) rho_e(e, e) = 1.0 / dim_e;

    PolicyFamily fam = make_family(
        {dyadic_policy("t0", {8}, ResampleScheme::Bilinear, 3, 0.125, 64),
         dyadic_policy("t1", {8}, ResampleScheme::Bilinear, 3, 0.125, 96)});
    double horizon = 12.0;

    CMatrix id = CMatrix::Identity(2, 2);
    // the coherence collapses quickly; partial recurrences stay below 1/2
    // except on a vanishing fraction of the window
    bool decaying = universally_stable(id, rho_e, h, plus_state(), fam, {0.5}, 0.08, horizon);
    CHECK(decaying);

    // constant-coherence model: uncoupled evolution, qGrid max below c = 1
    CMatrix rho_e2(2, 2);
    rho_e2 << 0.6, 0, 0, 0.4;
    CMatrix h2 = kron(pauli_z(), CMatrix::Identity(2, 2));
    bool constant = universally_stable(id, rho_e2, h2, plus_state(), fam, {0.2, 0.5}, 0.0, 4.0);
    CHECK_FALSE(constant);

    // zero coherence forever
    CMatrix rho_s(2, 2);
    rho_s << 0.8, 0, 0, 0.2;
    bool zero = universally_stable(id, rho_e2, h2, rho_s, fam, {0.1}, 0.0, 4.0);
    CHECK(zero);
}

TEST_CASE("basis_frequency_map: singleton, dephasing family, degenerate menu") {
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(5.0, 128);
    CMatrix h = dephasing_hamiltonian(0.7);
    CMatrix rho_s(2, 2);
    rho_s << 0.8, 0, 0, 0.2;
    std::vector<CMatrix> ensemble;
    for (int m = 0; m < 8; ++m)
        ensemble.push_back(thermal_state(1.3 * pauli_z(), 0.3 + 0.2 * m));

    std::vector<EnvEncoding> encodings = {{"swapE", pauli_x()}};

    BasisMenu single = make_menu({CMatrix::Identity(2, 2)}, {"Z"});
    BasisFrequencyMap f1 = basis_frequency_map(ensemble, single, h, rho_s, quad, encodings);
    CHECK(f1.frequency.at("Z") == 1.0);
    CHECK(f1.encoding_drift == 0.0);

    BasisMenu zx = make_menu({CMatrix::Identity(2, 2), hadamard()}, {"Z", "X"});
    BasisFrequencyMap f2 = basis_frequency_map(ensemble, zx, h, rho_s, quad, encodings);
    CHECK(f2.frequency.at("Z") == 1.0);
    CHECK(f2.frequency.at("X") == 0.0);
    CHECK(f2.encoding_drift <= 1e-12);

    BasisMenu dup = make_menu({hadamard(), hadamard()}, {"X1", "X2"});
    BasisFrequencyMap f3 = basis_frequency_map(ensemble, dup, h, rho_s, quad, encodings);
    CHECK(f3.frequency.at("X1") == 1.0);  // deterministic label-order tie
    CHECK(f3.encoding_drift == 0.0);
}

TEST_CASE("matrix text format round-trips") {
    CMatrix m = random_hermitian(3, 8);
    std::string path = "/tmp/dplab_matrix_test.txt";
    write_complex_matrix(m, path);
    CMatrix back = read_complex_matrix(path);
    REQUIRE(back.rows() == 3);
    CHECK((back - m).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("composite dimension cap is enforced") {
    CMatrix big_env = CMatrix::Identity(64, 64) / 64.0;
    CMatrix h = kron(pauli_z(), CMatrix::Identity(64, 64));
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(1.0, 4);
    CHECK_THROWS_AS(
        decoherence_functional(CMatrix::Identity(2, 2), big_env, h, plus_state(), quad),
        std::invalid_argument);
}
