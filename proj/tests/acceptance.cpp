// Acceptance suite: one line per criterion, tolerances pinned in code.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "dplab/barrier.hpp"
#include "dplab/classify.hpp"
#include "dplab/errors.hpp"
#include "dplab/harness.hpp"
#include "dplab/horizon.hpp"
#include "dplab/ising.hpp"
#include "dplab/pointer.hpp"
#include "dplab/recoding.hpp"
#include "dplab/rng.hpp"
#include "dplab/tv_inverse.hpp"

using namespace dplab;
using nlohmann::json;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.c_str());
    if (!pass) ++failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Field smooth_phantom(int n, std::uint64_t seed) {
    Field f = make_field(make_grid({n, n}, 1.0 / (n - 1), Topology::Free));
    RngKey key(seed);
    for (int b = 0; b < 3; ++b) {
        double amp = 0.5 + 0.5 * key.with(b).with(0).uniform();
        double cx = 0.2 + 0.6 * key.with(b).with(1).uniform();
        double cy = 0.2 + 0.6 * key.with(b).with(2).uniform();
        double w = 0.1 + 0.15 * key.with(b).with(3).uniform();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double x = i / (n - 1.0), y = j / (n - 1.0);
                f.at({i, j}) +=
                    amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * w * w));
            }
        }
    }
    return f;
}

char buf[512];

// --------------------------------------------------------------------------

void criterion_1_tv_optimality() {
    double t0 = now_seconds();
    Field phantom = smooth_phantom(64, 7);
    InverseProblem p{ForwardOperator::identity(), phantom, 0.0, 1.1, 1e-8};
    TvSolveOptions opts{2.5e-11, 400000, false, 0, 1};
    TvSolution s = solve_tv(p, 0.05, opts);
    TvSolveOptions o1 = opts, o2 = opts;
    o1.randomize_init = true;
    o1.init_seed = 101;
    o2.randomize_init = true;
    o2.init_seed = 202;
    TvSolution a = solve_tv(p, 0.05, o1);
    TvSolution b = solve_tv(p, 0.05, o2);
    double elapsed = now_seconds() - t0;
    double agree_rms = rms(a.u - b.u);
    double agree_max = max_abs(a.u - b.u);
    bool pass = s.optimality_residual <= 1e-6 && elapsed <= 10.0 && agree_rms <= 1e-5 &&
                agree_max <= 1e-5;
    std::snprintf(buf, sizeof(buf),
                  "residual=%.2e<=1e-6, runtime=%.2fs<=10s, init agreement rms=%.2e max=%.2e<=1e-5",
                  s.optimality_residual, elapsed, agree_rms, agree_max);
    report(1, pass, "TV solver optimality and uniqueness on a 64x64 phantom", buf);
}

void criterion_2_discrepancy_monotone() {
    LambdaGrid grid = LambdaGrid::geometric(1e-3, 20);
    TvSolveOptions opts{1e-10, 400000, false, 0, 1};
    bool monotone = true, scan_agrees = true;
    double worst_drop = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Field d = make_field(make_grid({32}, 1.0 / 31, Topology::Free));
        RngKey key(seed);
        for (int i = 0; i < 32; ++i)
            d[i] = (i >= 16 ? 1.0 : 0.0) + 0.05 * key.with(i).normal();
        InverseProblem p{ForwardOperator::identity(), d, 0.05 * std::sqrt(32.0), 1.1, 1e-8};

        double prev = -1.0;
        int oracle_index = -1;
        for (std::size_t k = 0; k < grid.values.size(); ++k) {
            TvSolution s = solve_tv(p, grid.values[k], opts);
            double r = residual_norm(p, s.u);
            if (r < prev - 1e-8) {
                monotone = false;
                worst_drop = std::max(worst_drop, prev - r);
            }
            prev = r;
            if (oracle_index < 0 && r <= p.tau * p.noise_level)
                oracle_index = static_cast<int>(k);
        }
        DiscrepancyResult fast = discrepancy_lambda(p, grid, opts);
        if (fast.index != oracle_index) scan_agrees = false;
    }
    std::snprintf(buf, sizeof(buf), "monotone within 1e-8 (worst drop %.1e), scan agreement=%s",
                  worst_drop, scan_agrees ? "exact" : "BROKEN");
    report(2, monotone && scan_agrees,
           "residual monotonicity and linear-scan agreement on 5 seeded ladders", buf);
}

void criterion_3_commutation_decay() {
    double t0 = now_seconds();
    json j{{"protocol", "imaging"},
           {"seed", 11},
           {"ensemble", 10},
           {"levels", 4},
           {"recodings", {"rot90", "rot180", "reflect0", "transpose"}},
           {"imaging",
            {{"base", 9},
             {"eps_rel", 0.1},
             {"tau", 1.1},
             {"mu", 1e-8},
             {"tol0", 1e-6},
             {"lambda0", 1e-3},
             {"lambda_count", 20},
             {"policies", 2}}}};
    StabilityReport rep = run_protocol(ProtocolConfig::from_json(j));
    double elapsed = now_seconds() - t0;
    const double floor = 1e-9;
    bool nonincreasing = true;
    for (std::size_t n = 0; n + 1 < rep.sc.size(); ++n)
        if (rep.sc[n + 1] > std::max(1.1 * rep.sc[n], floor)) nonincreasing = false;
    bool halves = rep.sc.back() <= std::max(0.5 * rep.sc.front(), floor);
    bool pass = nonincreasing && halves && elapsed <= 300.0 && rep.survivors == 10;
    std::snprintf(buf, sizeof(buf),
                  "SC=[%.2e,%.2e,%.2e,%.2e], SC(4)<=max(0.5*SC(1),1e-9)=%s, runtime=%.0fs<=300s",
                  rep.sc[0], rep.sc[1], rep.sc[2], rep.sc[3], halves ? "yes" : "NO", elapsed);
    report(3, pass, "recode/reconstruct commutation decay over 4 levels, ensemble 10", buf);
}

void criterion_4_capacity_trends() {
    GridLadder ladder = GridLadder::capacity_default(3);
    CapacityEstimate empty = capacity(BarrierSpec::empty(), ladder, 3);
    bool empty_ok = empty.verdict == CapacityVerdict::Zero;
    for (const auto& lv : empty.levels) empty_ok = empty_ok && lv.energy < 1e-12;

    CapacityEstimate pt = capacity(BarrierSpec::point({0.5, 0.5}), ladder, 3);
    bool point_ok = pt.verdict == CapacityVerdict::Zero &&
                    pt.levels[0].energy >= 1.5 * pt.levels[1].energy &&
                    pt.levels[1].energy >= 1.5 * pt.levels[2].energy;

    CapacityEstimate seg = capacity(BarrierSpec::segment(0, 0.5), ladder, 3);
    double a = seg.levels[1].energy, b = seg.levels[2].energy;
    bool seg_ok = seg.verdict == CapacityVerdict::Positive &&
                  std::abs(a - b) <= 0.2 * std::max(a, b);

    // 50/50 seeded mixed ensemble, classification vs construction
    int wrong = 0;
    RngKey key(41);
    for (int m = 0; m < 20; ++m) {
        bool is_point = m % 2 == 0;
        BarrierSpec spec =
            is_point ? BarrierSpec::point({0.3 + 0.4 * key.with(m).with(0).uniform(),
                                           0.3 + 0.4 * key.with(m).with(1).uniform()})
                     : BarrierSpec::segment(0, 0.3 + 0.4 * key.with(m).with(2).uniform());
        try {
            bool unique = markov_unique(spec, ladder, 3).first;
            if (unique != is_point) ++wrong;
        } catch (const InconclusiveVerdict&) {
            ++wrong;
        }
    }
    bool pass = empty_ok && point_ok && seg_ok && wrong == 0;
    std::snprintf(buf, sizeof(buf),
                  "empty=%s, point ratios %.2f/%.2f>=1.5, segment band %.0f%%<=20%%, "
                  "misclassified=%d/20",
                  empty_ok ? "zero" : "BAD", pt.levels[0].energy / pt.levels[1].energy,
                  pt.levels[1].energy / pt.levels[2].energy,
                  100.0 * std::abs(a - b) / std::max(a, b), wrong);
    report(4, pass, "capacity trend verdicts and mixed-ensemble classification", buf);
}

void criterion_5_ising_oracle() {
    CouplingSpec nn = nearest_neighbor_coupling(2, 1.0, 0.0);
    Grid box = make_grid({12, 12}, 1.0, Topology::Free);

    // independent per-site recomputation, 1000 seeded configs, exact equality
    int mismatches = 0;
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        SpinConfig s = seeded_config(box, trial);
        SpinConfig fast = step(s, nn, {TieBreakKind::Plus, 0}, 0);
        for (int i = 0; i < 12 && mismatches == 0; ++i) {
            for (int j = 0; j < 12; ++j) {
                double l = 0.0;
                if (i > 0) l += s.at({i - 1, j});
                if (i < 11) l += s.at({i + 1, j});
                if (j > 0) l += s.at({i, j - 1});
                if (j < 11) l += s.at({i, j + 1});
                std::int8_t want = l > 0 ? 1 : (l < 0 ? -1 : 1);
                if (fast.at({i, j}) != want) {
                    ++mismatches;
                    break;
                }
            }
        }
    }

    // spin-flip and translation symmetries, exact
    bool symmetries = true;
    {
        SpinConfig s = seeded_config(box, 999);
        SpinConfig neg = s;
        for (auto& v : neg.spins) v = -v;
        SpinConfig lhs = step(neg, nn, {TieBreakKind::Minus, 0});
        SpinConfig rhs = step(s, nn, {TieBreakKind::Plus, 0});
        for (std::size_t i = 0; i < s.spins.size(); ++i)
            if (lhs.spins[i] != -rhs.spins[i]) symmetries = false;

        Grid torus = make_grid({12, 12}, 1.0, Topology::Periodic);
        SpinConfig t = seeded_config(torus, 1001);
        SpinConfig shifted = t;
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j)
                shifted.spins[torus.index({i, j})] = t.at({(i + 11) % 12, (j + 7) % 12});
        SpinConfig a = step(shifted, nn, {TieBreakKind::Plus, 0});
        SpinConfig b = step(t, nn, {TieBreakKind::Plus, 0});
        for (int i = 0; i < 12 && symmetries; ++i)
            for (int j = 0; j < 12; ++j)
                if (a.at({i, j}) != b.at({(i + 11) % 12, (j + 7) % 12})) symmetries = false;
    }

    // square vs slab: zero disagreement strictly inside the validity window
    ShapeAgreement sa =
        shape_agreement(7, {{32, 32}, {32, 64}}, nn, {TieBreakKind::Plus, 0}, 20, 0.5);
    bool window_ok = sa.validity_window >= 1;
    for (int t = 0; t <= sa.validity_window && t < static_cast<int>(sa.disagreement.size()); ++t)
        if (sa.disagreement[t] != 0.0) window_ok = false;

    bool pass = mismatches == 0 && symmetries && window_ok;
    std::snprintf(buf, sizeof(buf),
                  "oracle mismatches=%d/1000, symmetries=%s, density=0 through window=%d steps",
                  mismatches, symmetries ? "exact" : "BROKEN", sa.validity_window);
    report(5, pass, "synchronous update oracle equivalence and shape agreement", buf);
}

void criterion_6_pointer_basis() {
    CMatrix h = dephasing_hamiltonian(0.7);
    CMatrix rho_s(2, 2);
    rho_s << 0.8, 0, 0, 0.2;
    CMatrix had(2, 2);
    had << 1, 1, 1, -1;
    had /= std::sqrt(2.0);
    BasisMenu menu = make_menu({CMatrix::Identity(2, 2), had}, {"Z", "X"});
    TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(6.0, 256);

    int selected_z = 0;
    bool z_minimal = true;
    double worst_trace_drift = 0.0;
    RngKey key(17);
    std::vector<CMatrix> ensemble;
    for (int m = 0; m < 20; ++m) {
        double beta = 0.25 + 2.25 * key.with(m).uniform();
        CMatrix rho_e = thermal_state(1.3 * pauli_z(), beta);
        ensemble.push_back(rho_e);
        PreferredBasisResult r = preferred_basis(menu, rho_e, h, rho_s, quad);
        if (r.argmin_set.front() == 0) ++selected_z;
        if (!(r.values[0] <= r.values[1] + 1e-12)) z_minimal = false;
        // trace drift through one full evolution of the composite state
        CMatrix rho_se = kron(rho_s, rho_e);
        CMatrix evolved = evolve_state(h, rho_se, 6.0);
        worst_trace_drift =
            std::max(worst_trace_drift, std::abs(evolved.trace().real() - 1.0) +
                                            std::abs(evolved.trace().imag()));
    }

    // self-convergence needs a non-constant integrand: start the system in
    // the coherent plus state, whose Z off-diagonal oscillates smoothly
    CMatrix plus(2, 2);
    plus << 0.5, 0.5, 0.5, 0.5;
    auto phi_at = [&](int intervals) {
        return decoherence_functional(CMatrix::Identity(2, 2), ensemble[0], h, plus,
                                      TimeGridQuadrature::trapezoid(6.0, intervals));
    };
    double p64 = phi_at(64), p128 = phi_at(128), p256 = phi_at(256);
    double order = std::log2(std::abs(p64 - p128) / std::abs(p128 - p256));

    bool pass = selected_z == 20 && z_minimal && order >= 1.9 && worst_trace_drift <= 1e-10;
    std::snprintf(buf, sizeof(buf),
                  "dephasing basis selected %d/20, quadrature order %.2f>=1.9, trace drift "
                  "%.1e<=1e-10",
                  selected_z, order, worst_trace_drift);
    report(6, pass, "pointer-basis selection on a thermal ensemble", buf);
}

void criterion_7_horizon_identities() {
    CauchyDatum d = rightward_pulse(0.3, 0.1, 1.0);

    InteriorModel flat = flat_model(4.0);
    double drift[3];
    int k = 0;
    for (int res : {64, 128, 256}) {
        Evolution evo = evolve_interior(flat, d, {Scheme::Leapfrog, 0.8}, res);
        drift[k++] = std::abs(slice_energy(flat, evo, evo.v_nodes.size() - 1) -
                              slice_energy(flat, evo, 0));
    }
    double cons_order = std::min(std::log2(drift[0] / drift[1]), std::log2(drift[1] / drift[2]));

    InteriorModel kerr = flat_model(4.0);
    kerr.kappa = 0.5;
    double resid[3];
    k = 0;
    for (int res : {64, 128, 256}) {
        Evolution evo = evolve_interior(kerr, d, {Scheme::Leapfrog, 0.8}, res);
        resid[k++] = energy_identity_residual(kerr, evo, 0.5, 3.5);
    }
    double ident_order = std::min(std::log2(resid[0] / resid[1]), std::log2(resid[1] / resid[2]));

    InteriorModel m2 = constant_potential_model(0.4, 1.0, 4.0);
    PolicyFamily fam = make_family({extraction_policy("wide", 16, 0.5, 3),
                                    extraction_policy("narrow", 16, 0.25, 3)});
    UtConfig ut{{1e-3, 1e-2, 0.1, 1.0}};
    std::vector<double> div = cross_pipeline_divergence(
        m2, d, {Scheme::Leapfrog, 0.8}, {Scheme::Characteristic, 1.0}, {64, 128, 256}, fam, ut);
    double div_order = std::min(std::log2(div[0] / div[1]), std::log2(div[1] / div[2]));

    // linearity across both schemes
    double lin_err = 0.0;
    {
        CauchyDatum d2 = standing_mode(1, 0.5);
        CauchyDatum combo{[&](double x) { return 1.7 * d.phi0(x) + d2.phi0(x); },
                          [&](double x) { return 1.7 * d.phi1(x) + d2.phi1(x); }};
        for (auto spec : {PipelineSpec{Scheme::Leapfrog, 0.8},
                          PipelineSpec{Scheme::Characteristic, 1.0}}) {
            Evolution ea = evolve_interior(m2, d, spec, 64);
            Evolution eb = evolve_interior(m2, d2, spec, 64);
            Evolution ec = evolve_interior(m2, combo, spec, 64);
            for (std::size_t n = 0; n < ec.phi.size(); ++n)
                for (int i = 0; i < 64; ++i)
                    lin_err = std::max(lin_err, std::abs(ec.phi[n][i] - 1.7 * ea.phi[n][i] -
                                                         eb.phi[n][i]));
        }
    }

    bool pass = cons_order >= 1.9 && ident_order >= 0.9 && div_order >= 1.0 && lin_err <= 1e-10;
    std::snprintf(buf, sizeof(buf),
                  "conservation order %.2f>=1.9, identity order %.2f>=0.9, divergence order "
                  "%.2f>=1.0, linearity %.1e<=1e-10",
                  cons_order, ident_order, div_order, lin_err);
    report(7, pass, "flat conservation, weighted-current identity, pipeline divergence", buf);
}

void criterion_8_classifier() {
    // fold oracle, written independently of the block-scan classifier
    struct Oracle {
        int kind = 0;
        int level = 0;
        bool sigma = false;
    };
    auto apply = [](const Quantifier& q, Oracle c) {
        bool qs = !q.universal;
        if (q.sort == QuantifierSort::Number) {
            if (c.kind == 2) return c;
            if (c.kind == 0) return Oracle{1, 1, qs};
            if (qs == c.sigma) return c;
            return Oracle{1, c.level + 1, qs};
        }
        if (c.kind != 2) return Oracle{2, 1, qs};
        if (qs == c.sigma) return c;
        return Oracle{2, c.level + 1, qs};
    };

    int checked = 0, agreement_failures = 0;
    for (int len = 1; len <= 4; ++len) {
        int combos = 1;
        for (int i = 0; i < len; ++i) combos *= 4;
        for (int code = 0; code < combos; ++code) {
            FormulaPrefix f;
            int rem = code;
            for (int i = 0; i < len; ++i) {
                Quantifier q;
                q.universal = (rem & 1) == 0;
                q.sort = (rem & 2) ? QuantifierSort::Real : QuantifierSort::Number;
                rem >>= 2;
                f.tokens.push_back(q);
            }
            Oracle want;
            for (auto it = f.tokens.rbegin(); it != f.tokens.rend(); ++it)
                want = apply(*it, want);
            Classification got = classify_prefix(f, ClassifyMode::Strict);
            bool ok = got.level == want.level && got.projective == (want.kind == 2) &&
                      (want.kind == 0 || got.sigma == want.sigma);
            if (!ok) ++agreement_failures;
            ++checked;
        }
    }

    FormulaPrefix fn4 = parse_prefix("Ar:R Em:N An:N [phi]");
    FormulaPrefix s8 = parse_prefix("Ef:R An:N Em:N Ak:N [P]");
    bool anchors = classify_prefix(fn4, ClassifyMode::AsWritten).label == "Pi^1_2" &&
                   classify_prefix(fn4, ClassifyMode::Strict).label == "Pi^1_1" &&
                   classify_prefix(s8, ClassifyMode::AsWritten).label == "Sigma^1_2" &&
                   classify_prefix(s8, ClassifyMode::Strict).label == "Sigma^1_1";

    bool pass = agreement_failures == 0 && checked >= 256 && anchors;
    std::snprintf(buf, sizeof(buf),
                  "%d prefixes checked (includes all 256 of length 4), disagreements=%d, "
                  "anchored labels=%s",
                  checked, agreement_failures, anchors ? "reproduced" : "BROKEN");
    report(8, pass, "strict-mode normalization oracle and source-anchored labels", buf);
}

void criterion_9_reproducibility() {
    json j{{"protocol", "ising"},
           {"seed", 3},
           {"ensemble", 2},
           {"levels", 2},
           {"recodings", {"reflect0"}},
           {"ising", {{"base", 8}, {"steps", 4}, {"h", 0.0}}}};
    ProtocolConfig cfg = ProtocolConfig::from_json(j);
    StabilityReport a = run_protocol(cfg);
    StabilityReport b = run_protocol(cfg);
    bool identical = a.to_json().dump(2) == b.to_json().dump(2);

    // the canonical hash is a pure integer fold over the sorted-key dump,
    // frozen here so any platform drift is caught
    std::string hash = cfg.hash();
    const std::string frozen = "777256bb21deff0b";
    bool hash_ok = hash == frozen;

    json j2{{"protocol", "pointer"},
            {"seed", 5},
            {"ensemble", 2},
            {"levels", 2},
            {"recodings", {"swapE"}},
            {"pointer", json::object()}};
    ProtocolConfig cfg2 = ProtocolConfig::from_json(j2);
    bool identical2 = run_protocol(cfg2).to_json().dump(2) == run_protocol(cfg2).to_json().dump(2);

    bool pass = identical && identical2 && hash_ok;
    std::snprintf(buf, sizeof(buf), "byte-identical reports=%s, config hash %s %s frozen value",
                  identical && identical2 ? "yes" : "NO", hash.c_str(),
                  hash_ok ? "matches" : "DIFFERS FROM");
    report(9, pass, "reproducible reports and stable config hash", buf);
}

}  // namespace

int main() {
    struct Entry {
        int id;
        void (*fn)();
        const char* what;
    };
    const Entry entries[] = {
        {1, criterion_1_tv_optimality, "TV solver optimality"},
        {2, criterion_2_discrepancy_monotone, "discrepancy monotonicity"},
        {3, criterion_3_commutation_decay, "commutation decay"},
        {4, criterion_4_capacity_trends, "capacity trends"},
        {5, criterion_5_ising_oracle, "lattice oracle equivalence"},
        {6, criterion_6_pointer_basis, "pointer-basis selection"},
        {7, criterion_7_horizon_identities, "horizon identities"},
        {8, criterion_8_classifier, "prefix classifier"},
        {9, criterion_9_reproducibility, "reproducibility"},
    };
    for (const Entry& e : entries) {
        try {
            e.fn();
        } catch (const std::exception& ex) {
            report(e.id, false, e.what, std::string("unexpected exception: ") + ex.what());
        }
        std::fflush(stdout);
    }
    std::printf("%s: %d/9 criteria passed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                9 - failures);
    return failures;
}
