#include "dplab/ising.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dplab/rng.hpp"

namespace dplab {

namespace {

// Centre-relative coordinate, the shared frame across box shapes.
inline std::int64_t centered(int coord, int dim) { return coord - dim / 2; }

std::uint64_t site_key(const SpinConfig& s, const std::vector<int>& c) {
    std::uint64_t k = 0x9d39247e33776d41ULL;
    for (int a = 0; a < s.box.naxes(); ++a)
        k = hash_combine(k, static_cast<std::uint64_t>(centered(c[a], s.box.dims[a]) + (1 << 20)));
    return k;
}

std::int8_t tie_value(const TieBreakRule& rule, const SpinConfig& s, const std::vector<int>& c,
                      std::int64_t step_index) {
    switch (rule.kind) {
        case TieBreakKind::Plus:
            return +1;
        case TieBreakKind::Minus:
            return -1;
        case TieBreakKind::Keep:
            return s.at(c);
        case TieBreakKind::Flip:
            return static_cast<std::int8_t>(-s.at(c));
        case TieBreakKind::Parity: {
            std::int64_t sum = 0;
            for (int a = 0; a < s.box.naxes(); ++a) sum += centered(c[a], s.box.dims[a]);
            return ((sum % 2) + 2) % 2 == 0 ? +1 : -1;
        }
        case TieBreakKind::SeededRandom: {
            std::uint64_t k = hash_combine(hash_combine(splitmix64(rule.seed), site_key(s, c)),
                                           static_cast<std::uint64_t>(step_index));
            return (splitmix64(k) & 1ULL) ? +1 : -1;
        }
    }
    return +1;
}

std::uint64_t config_hash(const SpinConfig& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int8_t v : s.spins) h = (h ^ static_cast<std::uint8_t>(v)) * 0x100000001b3ULL;
    return h;
}

}  // namespace

SpinConfig make_spin_config(Grid box, std::vector<std::int8_t> spins) {
    if (box.naxes() < 2 || box.naxes() > 3)
        throw std::invalid_argument("spin config must be 2D or 3D");
    if (spins.size() != box.size()) throw std::invalid_argument("spin count mismatch");
    for (std::int8_t v : spins)
        if (v != 1 && v != -1) throw std::invalid_argument("spins must be +1 or -1");
    return SpinConfig{std::move(box), std::move(spins)};
}

SpinConfig uniform_config(Grid box, std::int8_t value) {
    std::vector<std::int8_t> spins(box.size(), value);
    return make_spin_config(std::move(box), std::move(spins));
}

SpinConfig seeded_config(Grid box, std::uint64_t seed) {
    std::vector<std::int8_t> spins(box.size());
    SpinConfig tmp{box, {}};
    for (std::size_t i = 0; i < box.size(); ++i) {
        std::vector<int> c = box.coord(i);
        std::uint64_t k = hash_combine(splitmix64(seed), site_key(tmp, c));
        spins[i] = (splitmix64(k) & 1ULL) ? +1 : -1;
    }
    return make_spin_config(std::move(box), std::move(spins));
}

CouplingSpec nearest_neighbor_coupling(int dimension, double J, double h) {
    if (J < 0.0) throw std::invalid_argument("ferromagnetic couplings require J >= 0");
    CouplingSpec c;
    c.field_h = h;
    for (int a = 0; a < dimension; ++a) {
        std::vector<int> off(dimension, 0);
        off[a] = 1;
        c.neighbors.push_back({off, J});
        off[a] = -1;
        c.neighbors.push_back({off, J});
    }
    return c;
}

double local_field(const SpinConfig& s, const CouplingSpec& c, const std::vector<int>& site) {
    const Grid& g = s.box;
    if (static_cast<int>(site.size()) != g.naxes())
        throw std::invalid_argument("site dimensionality mismatch");
    for (int a = 0; a < g.naxes(); ++a)
        if (site[a] < 0 || site[a] >= g.dims[a])
            throw std::invalid_argument("site out of range");
    double l = c.field_h;
    std::vector<int> nb(site.size());
    for (const auto& [off, J] : c.neighbors) {
        bool inside = true;
        for (int a = 0; a < g.naxes(); ++a) {
            int x = site[a] + off[a];
            if (g.topology[a] == Topology::Periodic) {
                x = ((x % g.dims[a]) + g.dims[a]) % g.dims[a];
            } else if (x < 0 || x >= g.dims[a]) {
                inside = false;
                break;
            }
            nb[a] = x;
        }
        if (inside) l += J * s.at(nb);
    }
    return l;
}

SpinConfig step(const SpinConfig& s, const CouplingSpec& c, const TieBreakRule& rule,
                std::int64_t step_index) {
    SpinConfig out = s;
    for (std::size_t i = 0; i < s.spins.size(); ++i) {
        std::vector<int> site = s.box.coord(i);
        double l = local_field(s, c, site);
        if (l > 0.0)
            out.spins[i] = +1;
        else if (l < 0.0)
            out.spins[i] = -1;
        else
            out.spins[i] = tie_value(rule, s, site, step_index);
    }
    return out;
}

EvolveResult evolve(SpinConfig s, const CouplingSpec& c, const TieBreakRule& rule, int max_steps) {
    if (max_steps < 0) throw std::invalid_argument("evolve: steps must be >= 0");
    EvolveResult res{s, 0, CycleKind::None, -1, {}};
    auto mag = [](const SpinConfig& cfg) {
        double m = 0.0;
        for (auto v : cfg.spins) m += v;
        return m / static_cast<double>(cfg.spins.size());
    };
    res.magnetization.push_back(mag(s));
    std::uint64_t h_prev2 = 0, h_prev = config_hash(s);
    SpinConfig prev2 = s, prev = s;
    bool have_prev2 = false;
    for (int t = 0; t < max_steps; ++t) {
        SpinConfig next = step(prev, c, rule, t);
        std::uint64_t h_next = config_hash(next);
        res.steps_taken = t + 1;
        res.magnetization.push_back(mag(next));
        if (h_next == h_prev && next.spins == prev.spins) {
            res.cycle = CycleKind::FixedPoint;
            res.detected_at = t;
            res.final = std::move(next);
            return res;
        }
        if (have_prev2 && h_next == h_prev2 && next.spins == prev2.spins) {
            res.cycle = CycleKind::TwoCycle;
            res.detected_at = t;
            res.final = std::move(next);
            return res;
        }
        prev2 = std::move(prev);
        h_prev2 = h_prev;
        have_prev2 = true;
        prev = std::move(next);
        h_prev = h_next;
    }
    res.final = std::move(prev);
    return res;
}

ShapeAgreement shape_agreement(std::uint64_t init_seed, const std::vector<std::vector<int>>& shapes,
                               const CouplingSpec& c, const TieBreakRule& rule, int steps,
                               double core_fraction) {
    if (shapes.empty()) throw std::invalid_argument("shape_agreement: no shapes");
    const int na = static_cast<int>(shapes.front().size());
    std::vector<int> min_dims = shapes.front();
    for (const auto& sh : shapes) {
        if (static_cast<int>(sh.size()) != na)
            throw std::invalid_argument("shape_agreement: mixed dimensionality");
        for (int a = 0; a < na; ++a) min_dims[a] = std::min(min_dims[a], sh[a]);
    }
    // core: centre-relative box of half-width floor(f * min_dim / 2)
    std::vector<int> halfw(na);
    int core_count = 1;
    for (int a = 0; a < na; ++a) {
        halfw[a] = static_cast<int>(std::floor(core_fraction * min_dims[a] / 2.0));
        core_count *= 2 * halfw[a] + 1;
    }
    if (core_count <= 0) throw std::invalid_argument("shape_agreement: empty common core");

    std::vector<SpinConfig> configs;
    for (const auto& sh : shapes) {
        Grid box = make_grid(sh, 1.0, Topology::Free);
        configs.push_back(seeded_config(std::move(box), init_seed));
    }

    // distance (in sites) from the core hull to the nearest boundary of the
    // smallest box: boundary influence travels at one site per step
    int window = min_dims[0];
    for (int a = 0; a < na; ++a) {
        int lo = min_dims[a] / 2 - halfw[a];
        int hi = (min_dims[a] - 1 - min_dims[a] / 2) - halfw[a];
        window = std::min(window, std::min(lo, hi));
    }

    ShapeAgreement out;
    out.core_sites = core_count;
    out.validity_window = std::max(window, 0);

    auto core_disagreement = [&]() {
        int mismatches = 0;
        std::vector<int> rel(na, -1);
        for (int a = 0; a < na; ++a) rel[a] = -halfw[a];
        for (int k = 0; k < core_count; ++k) {
            std::int8_t v0 = 0;
            bool differ = false;
            for (std::size_t s = 0; s < configs.size(); ++s) {
                std::vector<int> site(na);
                for (int a = 0; a < na; ++a)
                    site[a] = rel[a] + configs[s].box.dims[a] / 2;
                std::int8_t v = configs[s].at(site);
                if (s == 0)
                    v0 = v;
                else if (v != v0)
                    differ = true;
            }
            if (differ) ++mismatches;
            for (int a = na - 1; a >= 0; --a) {
                if (++rel[a] <= halfw[a]) break;
                rel[a] = -halfw[a];
            }
        }
        return static_cast<double>(mismatches) / core_count;
    };

    out.disagreement.push_back(core_disagreement());
    for (int t = 0; t < steps; ++t) {
        for (auto& cfg : configs) cfg = step(cfg, c, rule, t);
        out.disagreement.push_back(core_disagreement());
    }
    return out;
}

}  // namespace dplab
