#include "dplab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <fstream>
#include <stdexcept>

#include "dplab/barrier.hpp"
#include "dplab/errors.hpp"
#include "dplab/field_io.hpp"
#include "dplab/horizon.hpp"
#include "dplab/ising.hpp"
#include "dplab/pointer.hpp"
#include "dplab/recoding.hpp"
#include "dplab/refinement.hpp"
#include "dplab/rng.hpp"
#include "dplab/tv_inverse.hpp"

namespace dplab {

using nlohmann::json;

Protocol protocol_from_name(const std::string& name) {
    if (name == "imaging") return Protocol::Imaging;
    if (name == "barrier") return Protocol::Barrier;
    if (name == "ising") return Protocol::Ising;
    if (name == "pointer") return Protocol::Pointer;
    if (name == "horizon") return Protocol::Horizon;
    throw std::invalid_argument("unknown protocol: " + name);
}

std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Imaging: return "imaging";
        case Protocol::Barrier: return "barrier";
        case Protocol::Ising: return "ising";
        case Protocol::Pointer: return "pointer";
        case Protocol::Horizon: return "horizon";
    }
    return "?";
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Decaying: return "decaying";
        case Verdict::Plateau: return "plateau";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

Verdict verdict(const std::vector<double>& idx, const Thresholds& t) {
    if (idx.size() < 2) return Verdict::Inconclusive;
    bool nonincreasing = true;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        if (idx[i + 1] > std::max(idx[i] * (1.0 + t.slack), t.floor)) nonincreasing = false;
    }
    double first = idx.front(), last = idx.back();
    if (nonincreasing && last <= std::max(t.decay_ratio * first, t.floor))
        return Verdict::Decaying;
    double a = idx[idx.size() - 2], b = idx.back();
    double hi = std::max(a, b), lo = std::min(a, b);
    if (b > t.floor && hi - lo <= t.plateau_band * hi) return Verdict::Plateau;
    return Verdict::Inconclusive;
}

// ---------------------------------------------------------------------------
// Config

ProtocolConfig ProtocolConfig::from_json(const json& j) {
    ProtocolConfig c;
    c.protocol = protocol_from_name(j.at("protocol").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{1});
    c.ensemble_size = j.value("ensemble", 4);
    c.levels = j.value("levels", 3);
    c.quorum = j.value("quorum", 1);
    if (j.contains("recodings")) c.recodings = j.at("recodings").get<std::vector<std::string>>();
    if (j.contains("thresholds")) {
        const auto& t = j.at("thresholds");
        c.thresholds.decay_ratio = t.value("decay_ratio", 0.5);
        c.thresholds.slack = t.value("slack", 0.1);
        c.thresholds.floor = t.value("floor", 1e-9);
        c.thresholds.plateau_band = t.value("plateau_band", 0.1);
    }
    std::string key = protocol_name(c.protocol);
    c.extra = j.contains(key) ? j.at(key) : json::object();
    if (c.ensemble_size < 1) throw std::invalid_argument("ensemble size must be >= 1");
    if (c.levels < 2) throw std::invalid_argument("stability indices need levels >= 2");
    return c;
}

json ProtocolConfig::canonical_json() const {
    json j;
    j["protocol"] = protocol_name(protocol);
    j["seed"] = seed;
    j["ensemble"] = ensemble_size;
    j["levels"] = levels;
    j["quorum"] = quorum;
    j["recodings"] = recodings;
    j["thresholds"] = {{"decay_ratio", thresholds.decay_ratio},
                       {"slack", thresholds.slack},
                       {"floor", thresholds.floor},
                       {"plateau_band", thresholds.plateau_band}};
    j[protocol_name(protocol)] = extra;
    return j;
}

std::string ProtocolConfig::hash() const {
    std::string dump = canonical_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) h = (h ^ c) * 0x100000001b3ULL;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Drivers

namespace {

double json_num(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

int json_int(const json& j, const char* key, int fallback) {
    return j.contains(key) ? j.at(key).get<int>() : fallback;
}

class ImagingDriver final : public ProtocolDriver {
public:
    explicit ImagingDriver(const ProtocolConfig& cfg) : cfg_(cfg) {
        const json& e = cfg.extra;
        base_ = json_int(e, "base", 9);
        eps_rel_ = json_num(e, "eps_rel", 0.1);
        tau_ = json_num(e, "tau", 1.1);
        mu_ = json_num(e, "mu", 1e-8);
        tol0_ = json_num(e, "tol0", 1e-3);
        noise_rel_ = json_num(e, "noise_rel", 0.0);
        bumps_ = json_int(e, "bumps", 3);
        lambda_ = LambdaGrid::geometric(json_num(e, "lambda0", 1e-3),
                                        json_int(e, "lambda_count", 20));
        if (e.contains("data_file")) {
            data_file_ = read_field_binary(e.at("data_file").get<std::string>());
            base_ = data_file_->grid.dims[0];
        }
        op_ = make_operator(e.contains("op") ? e.at("op").get<std::string>() : "identity");
        int pc = json_int(e, "policies", 2);
        // nested node grids ((b-1) * integer ratios + 1) so that stage
        // refinements of the same data prolong exactly into one another
        const std::vector<std::vector<int>> ratios = {{2, 2, 2, 2}, {3, 2, 2, 2}, {4, 2, 2, 2}};
        for (int p = 0; p < pc && p < 3; ++p)
            policies_.push_back(nested_policy("imaging-p" + std::to_string(p), base_, ratios[p],
                                              cfg.levels, tol0_));
        for (const auto& name : cfg.recodings) recodings_.push_back(recoding_by_name(name));
    }

    int policy_count() const override { return static_cast<int>(policies_.size()); }
    int level_count() const override { return cfg_.levels; }
    int recoding_count() const override { return static_cast<int>(recodings_.size()); }

    Field output(int member, int policy, int level) override {
        InverseProblem prob = problem(member);
        Field refined = refine(prob.data, policies_[policy], level);
        InverseProblem stage{prob.op, refined, eps_rel_ * l2_norm(refined), tau_, mu_};
        TvSolveOptions opts;
        opts.tol = policies_[policy].stage(level).tolerance;
        return discrepancy_lambda(stage, lambda_, opts).u;
    }

    double recoding_gap(int member, int recoding, int level) override {
        InverseProblem prob = problem(member);
        TvSolveOptions opts;
        opts.tol = policies_[0].stage(level).tolerance;
        return commutation_gap(prob, recodings_[recoding], policies_[0], level, lambda_, opts);
    }

private:
    static RefinementPolicy nested_policy(std::string id, int base,
                                          const std::vector<int>& ratios, int max_level,
                                          double tol0) {
        RefinementPolicy p;
        p.id = std::move(id);
        p.scheme = ResampleScheme::Bilinear;
        p.max_level = max_level;
        p.stage = [base, ratios, tol0](int n) {
            PolicyStage st;
            int cells = base - 1;
            for (int k = 0; k + 2 <= n && k < static_cast<int>(ratios.size()); ++k)
                cells *= ratios[k];
            st.resolution = {cells + 1, cells + 1};
            st.sample_count = cells;
            st.tolerance = tol0 * std::pow(4.0, -(n - 1));
            return st;
        };
        return p;
    }

    static ForwardOperator make_operator(const std::string& spec) {
        if (spec == "identity") return ForwardOperator::identity();
        if (spec == "blur3") {
            Field kern = make_field(make_grid({3, 3}, 1.0, Topology::Free),
                                    {0.05, 0.1, 0.05, 0.1, 0.4, 0.1, 0.05, 0.1, 0.05});
            return ForwardOperator::convolution(std::move(kern));
        }
        throw std::invalid_argument("unknown operator spec: " + spec);
    }

    InverseProblem problem(int member) {
        if (data_file_) {
            double eps = eps_rel_ * l2_norm(*data_file_);
            return InverseProblem{op_, *data_file_, eps, tau_, mu_};
        }
        Field phantom = make_field(
            make_grid({base_, base_}, 1.0 / (base_ - 1), Topology::Free));
        RngKey key = RngKey(cfg_.seed).with(0xffa6e).with(member);
        for (int b = 0; b < bumps_; ++b) {
            RngKey bk = key.with(b);
            double amp = 0.5 + 0.5 * bk.with(0).uniform();
            double cx = 0.2 + 0.6 * bk.with(1).uniform();
            double cy = 0.2 + 0.6 * bk.with(2).uniform();
            double w = 0.1 + 0.15 * bk.with(3).uniform();
            for (int i = 0; i < base_; ++i) {
                for (int j = 0; j < base_; ++j) {
                    double x = static_cast<double>(i) / (base_ - 1);
                    double y = static_cast<double>(j) / (base_ - 1);
                    double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    phantom.at({i, j}) += amp * std::exp(-r2 / (2 * w * w));
                }
            }
        }
        if (noise_rel_ > 0.0) {
            double scale = noise_rel_ * rms(phantom);
            for (std::size_t i = 0; i < phantom.size(); ++i)
                phantom[i] += scale * key.with(0x707).with(i).normal();
        }
        double eps = eps_rel_ * l2_norm(phantom);
        return InverseProblem{op_, std::move(phantom), eps, tau_, mu_};
    }

    ProtocolConfig cfg_;
    int base_ = 9, bumps_ = 3;
    double eps_rel_ = 0.1, tau_ = 1.1, mu_ = 1e-8, tol0_ = 1e-3, noise_rel_ = 0.0;
    LambdaGrid lambda_;
    ForwardOperator op_ = ForwardOperator::identity();
    std::optional<Field> data_file_;
    std::vector<RefinementPolicy> policies_;
    std::vector<Recoding> recodings_;
};

class BarrierDriver final : public ProtocolDriver {
public:
    explicit BarrierDriver(const ProtocolConfig& cfg) : cfg_(cfg) {
        if (cfg.levels > 3)
            throw std::invalid_argument("barrier protocol supports at most 3 levels");
        ladders_ = {GridLadder::capacity_default(cfg.levels),
                    GridLadder::dyadic(json_int(cfg.extra, "dyadic_base", 9), cfg.levels)};
        for (const auto& name : cfg.recodings) recodings_.push_back(recoding_by_name(name));
        opts_.solve_tol = json_num(cfg.extra, "solve_tol", 1e-10);
        const json& e = cfg.extra;
        mode_ = e.contains("mode") ? e.at("mode").get<std::string>() : "mixed";
        phi_star_ = json_num(e, "phi_star", 0.5);
        if (e.contains("env_file")) env_file_ = read_field_binary(e.at("env_file").get<std::string>());
        if (mode_ != "mixed" && mode_ != "calibrated")
            throw std::invalid_argument("barrier mode must be mixed or calibrated");
    }

    int policy_count() const override { return static_cast<int>(ladders_.size()); }
    int level_count() const override { return cfg_.levels; }
    int recoding_count() const override { return static_cast<int>(recodings_.size()); }

    Field output(int member, int policy, int level) override {
        int n = ladders_[policy].resolutions[level - 1];
        Grid g = level_grid(n);
        double e = obstacle_energy(g, spec(member).mask(g), opts_);
        return make_field(make_grid({1}, 1.0, Topology::Free), std::vector<double>{e});
    }

    double recoding_gap(int member, int recoding, int level) override {
        int n = ladders_[0].resolutions[level - 1];
        Grid g = level_grid(n);
        auto mask = spec(member).mask(g);
        Field mf = make_field(g);
        for (std::size_t i = 0; i < mask.size(); ++i) mf[i] = mask[i] ? 1.0 : 0.0;
        Field rf = apply_recoding(recodings_[recoding], mf);
        std::vector<std::uint8_t> rmask(rf.size());
        for (std::size_t i = 0; i < rf.size(); ++i) rmask[i] = rf[i] >= 0.5 ? 1 : 0;
        double e = obstacle_energy(g, mask, opts_);
        double er = obstacle_energy(rf.grid, rmask, opts_);
        return std::abs(er - e) / (1.0 + std::abs(e));
    }

private:
    static Grid level_grid(int n) {
        return make_grid({n, n}, 1.0 / (n + 1), Topology::Free);
    }

    BarrierSpec spec(int member) const {
        RngKey key = RngKey(cfg_.seed).with(0xba44).with(member);
        if (mode_ == "calibrated") {
            // smooth seeded coverage field thresholded at the calibrated level
            Field env = env_file_ ? *env_file_ : seeded_env(key);
            PolicyFamily fam = make_family(
                {dyadic_policy("cal", env.grid.dims, ResampleScheme::Bilinear, 3, 0.5)});
            std::vector<double> ladder;
            for (int j = 0; j <= 256; ++j) ladder.push_back(j / 256.0);
            double theta = calibrate_theta(env, phi_star_, fam, ladder).theta;
            return BarrierSpec::env_threshold(std::move(env), theta);
        }
        if (key.with(0).coin()) {
            return BarrierSpec::point(
                {0.3 + 0.4 * key.with(1).uniform(), 0.3 + 0.4 * key.with(2).uniform()});
        }
        return BarrierSpec::segment(0, 0.3 + 0.4 * key.with(3).uniform());
    }

    static Field seeded_env(const RngKey& key) {
        int n = 17;
        double cx = 0.3 + 0.4 * key.with(1).uniform();
        double cy = 0.3 + 0.4 * key.with(2).uniform();
        Field env = make_field(make_grid({n, n}, 1.0 / (n - 1), Topology::Free));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double x = i / (n - 1.0), y = j / (n - 1.0);
                env.at({i, j}) = 1.0 / (1.0 + 8.0 * ((x - cx) * (x - cx) + (y - cy) * (y - cy)));
            }
        }
        return env;
    }

    ProtocolConfig cfg_;
    std::string mode_ = "mixed";
    double phi_star_ = 0.5;
    std::optional<Field> env_file_;
    std::vector<GridLadder> ladders_;
    std::vector<Recoding> recodings_;
    CapacityOptions opts_;
};

class IsingDriver final : public ProtocolDriver {
public:
    explicit IsingDriver(const ProtocolConfig& cfg) : cfg_(cfg) {
        const json& e = cfg.extra;
        base_ = json_int(e, "base", 12);
        steps_ = json_int(e, "steps", 12);
        core_fraction_ = json_num(e, "core_fraction", 0.5);
        topology_ = (e.contains("topology") && e.at("topology") == "periodic")
                        ? Topology::Periodic
                        : Topology::Free;
        aspect_ = json_int(e, "slab_aspect", 2);
        coupling_ = nearest_neighbor_coupling(2, json_num(e, "J", 1.0), json_num(e, "h", 0.0));
        std::string rule = e.contains("rule") ? e.at("rule").get<std::string>() : "plus";
        rule_ = rule == "minus"  ? TieBreakRule{TieBreakKind::Minus, 0}
                : rule == "keep" ? TieBreakRule{TieBreakKind::Keep, 0}
                : rule == "flip" ? TieBreakRule{TieBreakKind::Flip, 0}
                                 : TieBreakRule{TieBreakKind::Plus, 0};
        for (const auto& name : cfg.recodings) recodings_.push_back(recoding_by_name(name));
        halfw_ = static_cast<int>(std::floor(core_fraction_ * base_ / 2.0));
    }

    int policy_count() const override { return 2; }  // square and slab shapes
    int level_count() const override { return cfg_.levels; }
    int recoding_count() const override { return static_cast<int>(recodings_.size()); }

    Field output(int member, int policy, int level) override {
        SpinConfig final = evolved(member, policy, level);
        return core_field(final);
    }

    double recoding_gap(int member, int recoding, int level) override {
        int s = base_ << (level - 1);
        Grid box = make_grid({s, s}, 1.0, topology_);
        SpinConfig sigma0 = seeded_config(box, member_seed(member));
        const Recoding& r = recodings_[recoding];

        SpinConfig evolved_then = run(sigma0);
        Field a = apply_recoding(r, core_field(evolved_then));

        Field full0 = spins_to_field(sigma0);
        Field rec0 = apply_recoding(r, full0);
        SpinConfig sigma_r = field_to_spins(rec0);
        Field b = core_field(run(sigma_r));
        return normalized_distance(a, b);
    }

private:
    std::uint64_t member_seed(int member) const {
        return hash_combine(splitmix64(cfg_.seed), static_cast<std::uint64_t>(member) + 0x151);
    }

    SpinConfig run(SpinConfig s) const {
        for (int t = 0; t < steps_; ++t) s = step(s, coupling_, rule_, t);
        return s;
    }

    SpinConfig evolved(int member, int policy, int level) {
        int s = base_ << (level - 1);
        std::vector<int> dims =
            policy == 0 ? std::vector<int>{s, s} : std::vector<int>{s, aspect_ * s};
        Grid box = make_grid(dims, 1.0, topology_);
        return run(seeded_config(box, member_seed(member)));
    }

    Field core_field(const SpinConfig& s) const {
        int side = 2 * halfw_ + 1;
        Field out = make_field(make_grid({side, side}, 1.0, Topology::Free));
        for (int i = -halfw_; i <= halfw_; ++i) {
            for (int j = -halfw_; j <= halfw_; ++j) {
                std::vector<int> site = {i + s.box.dims[0] / 2, j + s.box.dims[1] / 2};
                out.at({i + halfw_, j + halfw_}) = s.at(site);
            }
        }
        return out;
    }

    static Field spins_to_field(const SpinConfig& s) {
        Field f = make_field(s.box);
        for (std::size_t i = 0; i < s.spins.size(); ++i) f[i] = s.spins[i];
        return f;
    }

    static SpinConfig field_to_spins(const Field& f) {
        std::vector<std::int8_t> spins(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) spins[i] = f[i] >= 0.0 ? +1 : -1;
        return make_spin_config(f.grid, std::move(spins));
    }

    ProtocolConfig cfg_;
    int base_ = 12, steps_ = 12, halfw_ = 3, aspect_ = 2;
    Topology topology_ = Topology::Free;
    double core_fraction_ = 0.5;
    CouplingSpec coupling_;
    TieBreakRule rule_;
    std::vector<Recoding> recodings_;
};

class PointerDriver final : public ProtocolDriver {
public:
    explicit PointerDriver(const ProtocolConfig& cfg) : cfg_(cfg) {
        const json& e = cfg.extra;
        g_ = json_num(e, "g", 0.7);
        omega_e_ = json_num(e, "omega_e", 1.3);
        horizon_ = json_num(e, "horizon", 6.0);
        rho_p_ = json_num(e, "rho_s_p", 0.8);
        samples_[0] = json_int(e, "samples0", 8);
        samples_[1] = json_int(e, "samples1", 12);
        std::string preset = e.contains("preset") ? e.at("preset").get<std::string>() : "dephasing";
        if (preset == "dephasing") {
            hamiltonian_ = dephasing_hamiltonian(g_);
            dim_e_ = 2;
        } else if (preset == "spin-boson-truncated") {
            // qubit coupled to a truncated oscillator through its number
            // operator: pure dephasing with a many-level environment
            dim_e_ = std::min(json_int(e, "dim_e", 8), HilbertSpec::kDimCap / 2);
            CMatrix number = CMatrix::Zero(dim_e_, dim_e_);
            for (int k = 0; k < dim_e_; ++k) number(k, k) = k;
            hamiltonian_ = g_ * kron(pauli_z(), number) +
                           omega_e_ * kron(CMatrix::Identity(2, 2), number);
        } else if (preset == "custom") {
            hamiltonian_ = read_complex_matrix(e.at("hamiltonian_file").get<std::string>());
            dim_e_ = static_cast<int>(hamiltonian_.rows()) / 2;
        } else {
            throw std::invalid_argument("unknown pointer preset: " + preset);
        }
        rho_s0_ = CMatrix::Zero(2, 2);
        rho_s0_(0, 0) = rho_p_;
        rho_s0_(1, 1) = 1.0 - rho_p_;
        if (e.contains("rho_s_file"))
            rho_s0_ = read_complex_matrix(e.at("rho_s_file").get<std::string>());
        CMatrix had(2, 2);
        had << 1, 1, 1, -1;
        had /= std::sqrt(2.0);
        menu_ = make_menu({CMatrix::Identity(2, 2), had}, {"Z", "X"});
        for (const auto& name : cfg.recodings) encodings_.push_back(encoding_by_name(name));
    }

    int policy_count() const override { return 2; }
    int level_count() const override { return cfg_.levels; }
    int recoding_count() const override { return static_cast<int>(encodings_.size()); }

    Field output(int member, int policy, int level) override {
        return phi_vector(rho_env(member), hamiltonian_, policy, level);
    }

    double recoding_gap(int member, int recoding, int level) override {
        CMatrix re = rho_env(member);
        Field a = phi_vector(re, hamiltonian_, 0, level);
        const EnvEncoding& enc = encodings_[recoding];
        CMatrix re2 = enc.unitary * re * enc.unitary.adjoint();
        CMatrix lift = kron(CMatrix::Identity(2, 2), enc.unitary);
        CMatrix h2 = lift * hamiltonian_ * lift.adjoint();
        Field b = phi_vector(re2, h2, 0, level);
        return normalized_distance(a, b);
    }

private:
    EnvEncoding encoding_by_name(const std::string& name) const {
        if (name == "identity") return {"identity", CMatrix::Identity(dim_e_, dim_e_)};
        if (name == "swapE") {
            // reverse the environment level order
            CMatrix u = CMatrix::Zero(dim_e_, dim_e_);
            for (int k = 0; k < dim_e_; ++k) u(k, dim_e_ - 1 - k) = 1.0;
            return {"swapE", u};
        }
        if (name == "phaseE") {
            CMatrix u = CMatrix::Identity(dim_e_, dim_e_);
            for (int k = 0; k < dim_e_; ++k) u(k, k) = std::polar(1.0, 0.25 * M_PI * k);
            return {"phaseE", u};
        }
        throw std::invalid_argument("unknown environment encoding: " + name);
    }

    CMatrix rho_env(int member) const {
        RngKey key = RngKey(cfg_.seed).with(0xe17).with(member);
        double beta = 0.25 + 2.25 * key.uniform();
        if (dim_e_ == 2) return thermal_state(omega_e_ * pauli_z(), beta);
        CMatrix number = CMatrix::Zero(dim_e_, dim_e_);
        for (int k = 0; k < dim_e_; ++k) number(k, k) = k;
        return thermal_state(omega_e_ * number, beta);
    }

    Field phi_vector(const CMatrix& rho_e, const CMatrix& h, int policy, int level) {
        int intervals = samples_[policy] << (level - 1);
        TimeGridQuadrature quad = TimeGridQuadrature::trapezoid(horizon_, intervals);
        std::vector<double> values;
        for (const auto& basis : menu_.bases)
            values.push_back(decoherence_functional(basis, rho_e, h, rho_s0_, quad));
        return make_field(
            make_grid({static_cast<int>(values.size())}, 1.0, Topology::Free), values);
    }

    ProtocolConfig cfg_;
    double g_ = 0.7, omega_e_ = 1.3, horizon_ = 6.0, rho_p_ = 0.8;
    int samples_[2] = {8, 12};
    int dim_e_ = 2;
    CMatrix hamiltonian_, rho_s0_;
    BasisMenu menu_;
    std::vector<EnvEncoding> encodings_;
};

class HorizonDriver final : public ProtocolDriver {
public:
    explicit HorizonDriver(const ProtocolConfig& cfg) : cfg_(cfg) {
        const json& e = cfg.extra;
        model_ = constant_potential_model(json_num(e, "kappa", 0.4), json_num(e, "V", 1.0),
                                          json_num(e, "span", 8.0));
        base_res_ = json_int(e, "base_res", 24);
        bool characteristic = e.contains("scheme") && e.at("scheme") == "characteristic";
        spec_.scheme = characteristic ? Scheme::Characteristic : Scheme::Leapfrog;
        spec_.cfl = characteristic ? 1.0 : json_num(e, "cfl", 0.8);
        if (e.contains("pulse")) {
            const json& p = e.at("pulse");
            fixed_pulse_ = rightward_pulse(json_num(p, "x0", 0.3), json_num(p, "width", 0.1),
                                           json_num(p, "amplitude", 1.0));
        }
        fam_ = make_family({extraction_policy("win-wide", base_res_, 0.5, cfg.levels),
                            extraction_policy("win-narrow", base_res_, 0.25, cfg.levels)});
        ut_.q_grid = {1e-3, 1e-2, 0.1, 1.0};
    }

    int policy_count() const override { return static_cast<int>(fam_.policies.size()); }
    int level_count() const override { return cfg_.levels; }
    int recoding_count() const override { return 1; }  // x reflection

    Field output(int member, int policy, int level) override {
        const auto& cands = candidates(member, level, false);
        const auto& tr = cands[policy].trace;
        return make_field(make_grid({static_cast<int>(tr.size())}, model_.x_length / tr.size(),
                                    Topology::Periodic),
                          tr);
    }

    double recoding_gap(int member, int /*recoding*/, int level) override {
        const auto& plain = candidates(member, level, false)[0].trace;
        const auto& refl = candidates(member, level, true)[0].trace;
        // reflected pipeline output pulled back through the reflection
        std::size_t n = refl.size();
        std::vector<double> back(n);
        for (std::size_t i = 0; i < n; ++i) back[i] = refl[(n - i) % n];
        Grid g = make_grid({static_cast<int>(n)}, model_.x_length / n, Topology::Periodic);
        return normalized_distance(make_field(g, std::vector<double>(plain)),
                                   make_field(g, std::move(back)));
    }

private:
    CauchyDatum datum(int member, bool reflected) const {
        CauchyDatum d;
        if (fixed_pulse_) {
            d = *fixed_pulse_;
        } else {
            RngKey key = RngKey(cfg_.seed).with(0x40f).with(member);
            double x0 = 0.2 + 0.5 * key.with(0).uniform();
            double width = 0.06 + 0.06 * key.with(1).uniform();
            double amp = 0.5 + key.with(2).uniform();
            d = rightward_pulse(x0, width, amp);
        }
        if (!reflected) return d;
        double L = model_.x_length;
        return CauchyDatum{[d, L](double x) { return d.phi0(L - x); },
                           [d, L](double x) { return d.phi1(L - x); }};
    }

    const std::vector<TraceCandidate>& candidates(int member, int level, bool reflected) {
        auto key = std::make_tuple(member, level, reflected);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            int res = fam_.policies[0].stage(level).resolution[0];
            it = cache_
                     .emplace(key, extract_traces(model_, datum(member, reflected), fam_, spec_,
                                                  res))
                     .first;
        }
        return it->second;
    }

    ProtocolConfig cfg_;
    InteriorModel model_;
    int base_res_ = 24;
    std::optional<CauchyDatum> fixed_pulse_;
    PipelineSpec spec_;
    PolicyFamily fam_;
    UtConfig ut_;
    std::map<std::tuple<int, int, bool>, std::vector<TraceCandidate>> cache_;
};

}  // namespace

std::unique_ptr<ProtocolDriver> make_driver(const ProtocolConfig& cfg) {
    switch (cfg.protocol) {
        case Protocol::Imaging: return std::make_unique<ImagingDriver>(cfg);
        case Protocol::Barrier: return std::make_unique<BarrierDriver>(cfg);
        case Protocol::Ising: return std::make_unique<IsingDriver>(cfg);
        case Protocol::Pointer: return std::make_unique<PointerDriver>(cfg);
        case Protocol::Horizon: return std::make_unique<HorizonDriver>(cfg);
    }
    throw std::invalid_argument("unknown protocol");
}

namespace {

// distance with resampling when the stage grids differ
double leveled_distance(const Field& coarse, const Field& fine) {
    if (coarse.grid.same_shape(fine.grid)) return normalized_distance(coarse, fine);
    Field lifted = resample(coarse, fine.grid.dims, ResampleScheme::Bilinear);
    return normalized_distance(lifted, fine);
}

}  // namespace

std::vector<double> ssi_curve(ProtocolDriver& d, const std::vector<int>& members) {
    std::vector<double> out;
    for (int n = 1; n + 1 <= d.level_count(); ++n) {
        double acc = 0.0;
        for (int m : members) {
            double worst = 0.0;
            for (int p = 0; p < d.policy_count(); ++p)
                worst = std::max(worst, leveled_distance(d.output(m, p, n), d.output(m, p, n + 1)));
            acc += worst;
        }
        out.push_back(members.empty() ? 0.0 : acc / members.size());
    }
    return out;
}

std::vector<double> sc_curve(ProtocolDriver& d, const std::vector<int>& members) {
    std::vector<double> out;
    for (int n = 1; n <= d.level_count(); ++n) {
        double acc = 0.0;
        for (int m : members) {
            double worst = 0.0;
            for (int r = 0; r < d.recoding_count(); ++r)
                worst = std::max(worst, d.recoding_gap(m, r, n));
            acc += worst;
        }
        out.push_back(members.empty() ? 0.0 : acc / members.size());
    }
    return out;
}

StabilityReport run_protocol(const ProtocolConfig& cfg) {
    std::unique_ptr<ProtocolDriver> driver = make_driver(cfg);
    StabilityReport rep;
    rep.protocol = protocol_name(cfg.protocol);
    rep.config_hash = cfg.hash();
    rep.seed = cfg.seed;

    std::vector<int> survivors;
    for (int m = 0; m < cfg.ensemble_size; ++m) {
        MemberDiagnostics diag{m, true, ""};
        try {
            // touch every (policy, level) output and every recoding gap once;
            // drivers memoize or recompute deterministically
            for (int p = 0; p < driver->policy_count(); ++p)
                for (int n = 1; n <= driver->level_count(); ++n) driver->output(m, p, n);
            for (int r = 0; r < driver->recoding_count(); ++r)
                for (int n = 1; n <= driver->level_count(); ++n) driver->recoding_gap(m, r, n);
            survivors.push_back(m);
        } catch (const std::exception& ex) {
            diag.ok = false;
            diag.error = ex.what();
        }
        rep.diagnostics.push_back(std::move(diag));
    }
    rep.survivors = static_cast<int>(survivors.size());
    if (rep.survivors < cfg.quorum)
        throw QuorumFailure("survivors below quorum: " + std::to_string(rep.survivors));

    rep.ssi = ssi_curve(*driver, survivors);
    rep.sc = sc_curve(*driver, survivors);
    rep.verdict = rep.ssi.size() >= 2 ? verdict(rep.ssi, cfg.thresholds)
                                      : verdict(rep.sc, cfg.thresholds);
    return rep;
}

json StabilityReport::to_json() const {
    json j;
    j["protocol"] = protocol;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["ssi"] = ssi;
    j["sc"] = sc;
    j["verdict"] = verdict_name(verdict);
    j["survivors"] = survivors;
    json diags = json::array();
    for (const auto& d : diagnostics)
        diags.push_back({{"member", d.member}, {"ok", d.ok}, {"error", d.error}});
    j["diagnostics"] = diags;
    return j;
}

void write_report(const StabilityReport& report, const ProtocolConfig& cfg,
                  const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "report.json");
        os << report.to_json().dump(2) << "\n";
    }
    auto write_curve = [&](const std::string& name, const std::vector<double>& curve, int first) {
        std::ofstream os(fs::path(dir) / name);
        os << "level,value\n";
        char buf[64];
        for (std::size_t i = 0; i < curve.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g\n", static_cast<int>(i) + first, curve[i]);
            os << buf;
        }
    };
    write_curve("ssi.csv", report.ssi, 1);
    write_curve("sc.csv", report.sc, 1);
    {
        // wall-clock metadata kept out of the reproducible report
        std::time_t now = std::time(nullptr);
        char stamp[64];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        json meta;
        meta["timestamp"] = stamp;
        meta["config"] = cfg.canonical_json();
        std::ofstream os(fs::path(dir) / "meta.json");
        os << meta.dump(2) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Invariant selection

SelectionReport invariant_selection(const LabeledFibers& fibers,
                                    const std::map<std::string, double>& cost,
                                    const std::vector<GroupAction>& group) {
    SelectionReport rep;
    // find label -> fiber id for the induced fiber permutation
    std::map<std::string, std::string> owner;
    for (const auto& [fid, labels] : fibers.fibers) {
        if (labels.empty()) throw std::invalid_argument("invariant_selection: empty fiber");
        for (const auto& l : labels) owner[l] = fid;
    }
    auto pick = [&](const std::vector<std::string>& labels) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& l : labels) best = std::min(best, cost.at(l));
        std::vector<std::string> argmin;
        for (const auto& l : labels)
            if (cost.at(l) == best) argmin.push_back(l);
        std::sort(argmin.begin(), argmin.end());
        return argmin;
    };
    for (const auto& [fid, labels] : fibers.fibers) {
        auto argmin = pick(labels);
        rep.selector[fid] = argmin.front();
        if (argmin.size() > 1) rep.multiplicity_fibers.push_back(fid);
    }
    for (const auto& action : group) {
        for (const auto& [fid, labels] : fibers.fibers) {
            // image fiber: where the mapped labels live
            const std::string& mapped_first = action.label_map.at(labels.front());
            const std::string& image_fid = owner.at(mapped_first);
            const auto& image_labels = fibers.fibers.at(image_fid);
            // the action must map the fiber onto the image fiber
            std::vector<std::string> mapped;
            for (const auto& l : labels) mapped.push_back(action.label_map.at(l));
            std::sort(mapped.begin(), mapped.end());
            std::vector<std::string> image_sorted = image_labels;
            std::sort(image_sorted.begin(), image_sorted.end());
            if (mapped != image_sorted)
                throw std::invalid_argument("group action does not map fibers to fibers");
            if (action.label_map.at(rep.selector.at(fid)) != rep.selector.at(image_fid)) {
                rep.equivariant = false;
                rep.violations.push_back(action.name + ":" + fid);
            }
        }
    }
    return rep;
}

}  // namespace dplab
