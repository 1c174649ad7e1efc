#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "dplab/errors.hpp"
#include "dplab/horizon.hpp"

using namespace dplab;

namespace {

PipelineSpec leapfrog(double cfl = 0.8) { return {Scheme::Leapfrog, cfl}; }
PipelineSpec characteristic() { return {Scheme::Characteristic, 1.0}; }

double max_err_vs(const Evolution& evo, std::size_t slice,
                  const std::function<double(double)>& ref) {
    double err = 0.0;
    for (int i = 0; i < evo.nx; ++i)
        err = std::max(err, std::abs(evo.phi[slice][i] - ref(i * evo.dx)));
    return err;
}

// hand-built evolution for quadrature-only checks
Evolution manufactured(int nx, double dx, int slices, double v0, double dv,
                       const std::function<double(double, double)>& phi,
                       const std::function<double(double, double)>& phi_v) {
    Evolution evo;
    evo.nx = nx;
    evo.dx = dx;
    for (int n = 0; n < slices; ++n) {
        double v = v0 + n * dv;
        evo.v_nodes.push_back(v);
        std::vector<double> p(nx), pv(nx);
        for (int i = 0; i < nx; ++i) {
            p[i] = phi(v, i * dx);
            pv[i] = phi_v(v, i * dx);
        }
        evo.phi.push_back(std::move(p));
        evo.dphi_dv.push_back(std::move(pv));
    }
    evo.datum_norm = 1.0;
    return evo;
}

PolicyFamily two_windows(int base_res, int levels = 3) {
    return make_family({extraction_policy("wide", base_res, 0.5, levels),
                        extraction_policy("narrow", base_res, 0.25, levels)});
}

}  // namespace

TEST_CASE("zero datum evolves to the zero field under both schemes") {
    InteriorModel m = flat_model(2.0);
    for (auto spec : {leapfrog(), characteristic()}) {
        Evolution evo = evolve_interior(m, zero_datum(), spec, 32);
        for (const auto& slice : evo.phi)
            for (double v : slice) CHECK(v == 0.0);
    }
}

TEST_CASE("rightward pulse translates at unit speed") {
    InteriorModel m = flat_model(2.0);  // two full periods: returns home
    CauchyDatum d = rightward_pulse(0.3, 0.1, 1.0);

    // exact transport for the characteristic scheme at cfl = 1
    Evolution ch = evolve_interior(m, d, characteristic(), 64);
    CHECK(max_err_vs(ch, ch.phi.size() - 1, d.phi0) <= 1e-12);

    // second-order convergence for the leapfrog scheme
    Evolution lf128 = evolve_interior(m, d, leapfrog(), 128);
    Evolution lf256 = evolve_interior(m, d, leapfrog(), 256);
    double e128 = max_err_vs(lf128, lf128.phi.size() - 1, d.phi0);
    double e256 = max_err_vs(lf256, lf256.phi.size() - 1, d.phi0);
    CHECK(e256 < e128 / 2.5);
}

TEST_CASE("dispersion error converges at second order") {
    InteriorModel m = constant_potential_model(0.0, 1.0, 2.0);
    CauchyDatum d = standing_mode(1, 1.0);
    double omega = std::sqrt(4.0 * M_PI * M_PI + 1.0);
    auto ref = [omega](double x) { return std::cos(2 * M_PI * x) * std::cos(omega * 2.0); };
    Evolution a = evolve_interior(m, d, leapfrog(), 128);
    Evolution b = evolve_interior(m, d, leapfrog(), 256);
    double ea = max_err_vs(a, a.phi.size() - 1, ref);
    double eb = max_err_vs(b, b.phi.size() - 1, ref);
    CHECK(std::log2(ea / eb) >= 1.9);
}

TEST_CASE("CFL and commensurability preconditions") {
    InteriorModel m = constant_potential_model(0.0, 50.0, 2.0);
    CHECK_THROWS_AS(evolve_interior(m, zero_datum(), {Scheme::Leapfrog, 1.0}, 16),
                    std::invalid_argument);  // potential tightens the stable step
    InteriorModel odd = flat_model(2.0);
    odd.v_max = 2.0 + 1e-4;  // span no longer a multiple of dx
    CHECK_THROWS_AS(evolve_interior(odd, zero_datum(), characteristic(), 32),
                    std::invalid_argument);
    CHECK_THROWS_AS(evolve_interior(flat_model(2.0), zero_datum(), {Scheme::Characteristic, 0.9},
                                    32),
                    std::invalid_argument);
}

TEST_CASE("runaway growth raises EvolutionBlowup with a step index") {
    InteriorModel m = constant_potential_model(0.0, -4.0, 16.0);
    m.potential_bound = 4.0;
    try {
        evolve_interior(m, standing_mode(0, 1.0), leapfrog(), 32);
        FAIL("expected blowup");
    } catch (const EvolutionBlowup& ex) {
        CHECK(ex.step() > 0);
    }
}

TEST_CASE("weighted_flux: zero field and v-independent field give zero") {
    InteriorModel m = flat_model(2.0);
    Evolution zero = evolve_interior(m, zero_datum(), leapfrog(), 32);
    CHECK(weighted_flux(m, zero, 0.0, 2.0) == 0.0);

    Evolution frozen = manufactured(
        16, 1.0 / 16, 41, 0.0, 0.05, [](double, double x) { return std::sin(2 * M_PI * x); },
        [](double, double) { return 0.0; });
    CHECK(weighted_flux(m, frozen, 0.0, 2.0) == 0.0);
}

TEST_CASE("weighted_flux matches the closed-form integral for sin(v)") {
    // kappa = 0, phi = sin(v) uniform in x: integral of cos^2 over one
    // period is pi, times the domain length
    InteriorModel m = flat_model(2 * M_PI);
    int slices = 20001;
    double dv = 2 * M_PI / (slices - 1);
    Evolution evo = manufactured(
        32, 1.0 / 32, slices, 0.0, dv, [](double v, double) { return std::sin(v); },
        [](double v, double) { return std::cos(v); });
    double flux = weighted_flux(m, evo, 0.0, 2 * M_PI);
    CHECK(flux == doctest::Approx(M_PI * 1.0).epsilon(1e-7));
}

TEST_CASE("weighted_flux is additive over adjacent intervals") {
    InteriorModel m = constant_potential_model(0.7, 0.5, 4.0);
    Evolution evo = evolve_interior(m, rightward_pulse(0.4, 0.12, 1.0), leapfrog(), 64);
    double a = evo.v_nodes[10], b = evo.v_nodes[40], c = evo.v_nodes[90];
    double whole = weighted_flux(m, evo, a, c);
    double parts = weighted_flux(m, evo, a, b) + weighted_flux(m, evo, b, c);
    CHECK(whole == doctest::Approx(parts).epsilon(1e-14));
}

TEST_CASE("flux_tail: zero datum is admissible with zero flux") {
    InteriorModel m = flat_model(4.0);
    Evolution evo = evolve_interior(m, zero_datum(), leapfrog(), 32);
    TailResult t = flux_tail(m, evo, 2.0);
    CHECK(t.flux == 0.0);
    CHECK(t.admissible);
}

TEST_CASE("flux_tail: dispersing pulse is admissible, consistent across resolutions") {
    InteriorModel m = constant_potential_model(0.1, 0.0, 4.0);
    TailResult t64 = flux_tail(m, evolve_interior(m, rightward_pulse(0.3, 0.12, 0.5),
                                                  leapfrog(), 64), 2.0);
    TailResult t128 = flux_tail(m, evolve_interior(m, rightward_pulse(0.3, 0.12, 0.5),
                                                   leapfrog(), 128), 2.0);
    CHECK(t64.admissible);
    CHECK(t128.admissible);
    CHECK(t64.flux == doctest::Approx(t128.flux).epsilon(0.1));
}

TEST_CASE("tuned negative potential drives inadmissible growth at the analytic rate") {
    InteriorModel m = constant_potential_model(0.3, -4.0, 6.0);
    Evolution evo = evolve_interior(m, standing_mode(0, 0.01), leapfrog(), 64);
    TailResult tail = flux_tail(m, evo, 3.0);
    CHECK_FALSE(tail.admissible);
    // growth rate of the k = 0 mode is sqrt(-V) = 2
    std::size_t n1 = evo.v_nodes.size() / 2, n2 = evo.v_nodes.size() - 1;
    double rate = std::log(std::abs(evo.phi[n2][0]) / std::abs(evo.phi[n1][0])) /
                  (evo.v_nodes[n2] - evo.v_nodes[n1]);
    CHECK(rate == doctest::Approx(2.0).epsilon(0.01));

    CHECK_THROWS_AS(
        extract_traces(m, standing_mode(0, 0.01), two_windows(64), leapfrog(), 64),
        InadmissibleDatum);
}

TEST_CASE("extract_traces: zero datum and stationary solutions collapse the candidate set") {
    InteriorModel m = flat_model(4.0);
    auto zeroes = extract_traces(m, zero_datum(), two_windows(32), leapfrog(), 32);
    REQUIRE(zeroes.size() == 2);
    for (const auto& c : zeroes)
        for (double v : c.trace) CHECK(v == 0.0);

    CauchyDatum constant{[](double) { return 0.75; }, [](double) { return 0.0; }};
    auto cands = extract_traces(m, constant, two_windows(32), leapfrog(), 32);
    for (const auto& c : cands)
        for (double v : c.trace) CHECK(v == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("extract_traces: dispersing pulse keeps all candidates, bounded apart") {
    InteriorModel m = constant_potential_model(0.2, 1.0, 4.0);
    auto cands = extract_traces(m, rightward_pulse(0.35, 0.1, 1.0), two_windows(64),
                                leapfrog(), 64);
    REQUIRE(cands.size() == 2);
    double dev = 0.0;
    for (std::size_t i = 0; i < cands[0].trace.size(); ++i)
        dev = std::max(dev, std::abs(cands[0].trace[i] - cands[1].trace[i]));
    CHECK(std::isfinite(dev));
    CHECK(cands[0].flux_at_extraction >= 0.0);
    CHECK(cands[1].flux_at_extraction >= 0.0);
}

TEST_CASE("select_continuation: lexicographic order and declared ties") {
    UtConfig ut{{10.0}};
    TraceCandidate a{{1.0, 1.0}, "a", 0.0, 1.0, 5.0};
    TraceCandidate b{{1.0, 1.0}, "b", 0.0, 1.0, 2.0};
    SelectionOutcome low_phi1 = select_continuation({a, b}, ut);
    CHECK(low_phi1.chosen.policy_id == "b");  // equal e0, smaller phi1 wins

    TraceCandidate c{{1.0, 1.0}, "c", 0.0, 1.0, 2.0};
    SelectionOutcome tie = select_continuation({b, c}, ut);
    CHECK(tie.chosen.policy_id == "b");  // first policy id wins
    CHECK(tie.tie_set_size == 2);

    SelectionOutcome single = select_continuation({a}, ut);
    CHECK(single.chosen.policy_id == "a");
    CHECK(single.tie_set_size == 1);
    CHECK(single.ut_passed);

    // selection idempotence
    SelectionOutcome again = select_continuation({low_phi1.chosen}, ut);
    CHECK(again.chosen.policy_id == low_phi1.chosen.policy_id);
}

TEST_CASE("select_continuation: every candidate failing tameness is an error") {
    UtConfig tight{{1e-12}};
    TraceCandidate a{{0.0, 0.0}, "a", 0.0, 1.0, 1.0};
    TraceCandidate b{{5.0, -5.0}, "b", 0.0, 1.0, 1.0};
    CHECK_THROWS_AS(select_continuation({a, b}, tight), NoTameContinuation);
}

TEST_CASE("energy identity: zero field, flat conservation, weighted slab") {
    InteriorModel flat = flat_model(4.0);
    Evolution zero = evolve_interior(flat, zero_datum(), leapfrog(), 32);
    CHECK(energy_identity_residual(flat, zero, 0.5, 3.5) == 0.0);

    // kappa = 0: the residual is the discrete conservation error, second order
    CauchyDatum d = rightward_pulse(0.3, 0.12, 1.0);
    double r64 = energy_identity_residual(flat, evolve_interior(flat, d, leapfrog(), 64), 0.5,
                                          3.5);
    double r128 = energy_identity_residual(flat, evolve_interior(flat, d, leapfrog(), 128), 0.5,
                                           3.5);
    CHECK(std::log2(r64 / r128) >= 1.5);

    // kappa > 0: residual still halves (order >= 0.9) when the step halves
    InteriorModel kerr = flat_model(4.0);
    kerr.kappa = 0.5;
    double k64 = energy_identity_residual(kerr, evolve_interior(kerr, d, leapfrog(), 64), 0.5,
                                          3.5);
    double k128 = energy_identity_residual(kerr, evolve_interior(kerr, d, leapfrog(), 128), 0.5,
                                           3.5);
    double k256 = energy_identity_residual(kerr, evolve_interior(kerr, d, leapfrog(), 256), 0.5,
                                           3.5);
    CHECK(std::log2(k64 / k128) >= 0.9);
    CHECK(std::log2(k128 / k256) >= 0.9);
}

TEST_CASE("evolution is linear to 1e-10") {
    InteriorModel m = constant_potential_model(0.3, 1.0, 2.0);
    CauchyDatum d1 = rightward_pulse(0.3, 0.12, 1.0);
    CauchyDatum d2 = standing_mode(1, 0.5);
    double alpha = 1.7;
    CauchyDatum combo{[&](double x) { return alpha * d1.phi0(x) + d2.phi0(x); },
                      [&](double x) { return alpha * d1.phi1(x) + d2.phi1(x); }};
    for (auto spec : {leapfrog(), characteristic()}) {
        Evolution ea = evolve_interior(m, d1, spec, 64);
        Evolution eb = evolve_interior(m, d2, spec, 64);
        Evolution ec = evolve_interior(m, combo, spec, 64);
        double err = 0.0;
        for (std::size_t n = 0; n < ec.phi.size(); ++n)
            for (int i = 0; i < 64; ++i)
                err = std::max(err, std::abs(ec.phi[n][i] - alpha * ea.phi[n][i] - eb.phi[n][i]));
        CHECK(err <= 1e-10);
    }
}

TEST_CASE("cross-pipeline divergence: degenerate cases and convergence") {
    InteriorModel m = constant_potential_model(0.4, 1.0, 4.0);
    PolicyFamily fam = two_windows(16);
    UtConfig ut{{1e-3, 1e-2, 0.1, 1.0}};

    auto same = cross_pipeline_divergence(m, rightward_pulse(0.3, 0.1, 1.0), leapfrog(),
                                          leapfrog(), {64}, fam, ut);
    CHECK(same[0] == 0.0);

    auto zero = cross_pipeline_divergence(m, zero_datum(), leapfrog(), characteristic(), {64},
                                          fam, ut);
    CHECK(zero[0] == 0.0);

    auto div = cross_pipeline_divergence(m, rightward_pulse(0.3, 0.1, 1.0), leapfrog(),
                                         characteristic(), {64, 128, 256}, fam, ut);
    CHECK(div[0] > div[1]);
    CHECK(div[1] > div[2]);
    CHECK(std::log2(div[0] / div[1]) >= 1.0);
    CHECK(std::log2(div[1] / div[2]) >= 1.0);
}
