#include "dplab/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dplab/errors.hpp"

namespace dplab {

namespace {

// Bilinear value of a node-convention field at a point in [0,1]^d.
double interp_at(const Field& f, const std::vector<double>& x) {
    const Grid& g = f.grid;
    int na = g.naxes();
    std::vector<int> i0(na), i1(na);
    std::vector<double> w(na);
    for (int a = 0; a < na; ++a) {
        int n = g.dims[a];
        if (n == 1) {
            i0[a] = i1[a] = 0;
            w[a] = 0.0;
            continue;
        }
        double s = std::clamp(x[a], 0.0, 1.0) * (n - 1);
        int k = std::min(static_cast<int>(std::floor(s)), n - 2);
        i0[a] = k;
        i1[a] = k + 1;
        w[a] = s - k;
    }
    double acc = 0.0;
    int corners = 1 << na;
    std::vector<int> c(na);
    for (int m = 0; m < corners; ++m) {
        double wt = 1.0;
        for (int a = 0; a < na; ++a) {
            bool hi = (m >> a) & 1;
            c[a] = hi ? i1[a] : i0[a];
            wt *= hi ? w[a] : 1.0 - w[a];
        }
        if (wt != 0.0) acc += wt * f.at(c);
    }
    return acc;
}

// Node position of index i on an n-node interior grid: (i+1) * h, h = 1/(n+1).
double node_x(int i, int n) { return (i + 1) / static_cast<double>(n + 1); }

std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& mask, const Grid& g,
                                 int cells) {
    if (cells <= 0) return mask;
    std::vector<std::uint8_t> out(mask.size(), 0);
    int na = g.naxes();
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        std::vector<int> c = g.coord(i);
        // box dilation
        std::vector<int> lo(na), hi(na);
        std::size_t count = 1;
        for (int a = 0; a < na; ++a) {
            lo[a] = std::max(0, c[a] - cells);
            hi[a] = std::min(g.dims[a] - 1, c[a] + cells);
            count *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
        }
        std::vector<int> cur = lo;
        for (std::size_t k = 0; k < count; ++k) {
            out[g.index(cur)] = 1;
            for (int a = na - 1; a >= 0; --a) {
                if (++cur[a] <= hi[a]) break;
                cur[a] = lo[a];
            }
        }
    }
    return out;
}

struct ObstacleResult {
    double energy = 0.0;
    int sweeps = 0;
};

// Projected SOR for min sum_edges (du)^2 subject to u >= 1 on the mask,
// homogeneous Dirichlet ghost ring. Any grid dimension count; the ghost
// ring contributes zero-valued neighbours.
ObstacleResult solve_obstacle(const Grid& g, const std::vector<std::uint8_t>& mask,
                              const CapacityOptions& opts) {
    const std::size_t n = g.size();
    const int na = g.naxes();
    bool any = false;
    for (auto m : mask)
        if (m) { any = true; break; }
    double h = 1.0 / (g.dims[0] + 1);
    double scale = std::pow(h, na - 2);
    if (!any) return {0.0, 0};

    // flat neighbour table; -1 marks a ghost (value 0)
    std::vector<std::size_t> stride(na, 1);
    for (int a = na - 2; a >= 0; --a)
        stride[a] = stride[a + 1] * static_cast<std::size_t>(g.dims[a + 1]);
    std::vector<std::int64_t> nb(n * static_cast<std::size_t>(2 * na));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<int> c = g.coord(i);
        for (int a = 0; a < na; ++a) {
            nb[i * 2 * na + 2 * a] =
                c[a] > 0 ? static_cast<std::int64_t>(i - stride[a]) : -1;
            nb[i * 2 * na + 2 * a + 1] =
                c[a] + 1 < g.dims[a] ? static_cast<std::int64_t>(i + stride[a]) : -1;
        }
    }

    std::vector<double> u(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) u[i] = 1.0;

    const double omega = 2.0 / (1.0 + std::sin(M_PI * h));
    const double inv_deg = 1.0 / (2.0 * na);
    int sweep = 0;
    for (; sweep < opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const std::int64_t* nbi = &nb[i * 2 * na];
            for (int k = 0; k < 2 * na; ++k)
                if (nbi[k] >= 0) s += u[static_cast<std::size_t>(nbi[k])];
            double gs = s * inv_deg;
            double next = u[i] + omega * (gs - u[i]);
            if (mask[i]) next = std::max(next, 1.0);
            max_change = std::max(max_change, std::abs(next - u[i]));
            u[i] = next;
        }
        if (max_change <= opts.solve_tol) break;
    }
    if (sweep >= opts.max_sweeps)
        throw SolverFailure("obstacle solver did not converge", 0.0);

    // Dirichlet energy over all lattice edges including ghost edges.
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t* nbi = &nb[i * 2 * na];
        for (int a = 0; a < na; ++a) {
            // forward edge (covers all interior edges once) plus both ghost edges
            double right = nbi[2 * a + 1] >= 0 ? u[static_cast<std::size_t>(nbi[2 * a + 1])] : 0.0;
            double d = right - u[i];
            e += d * d;
            if (nbi[2 * a] < 0) e += u[i] * u[i];  // left ghost edge
        }
    }
    return {e * scale, sweep + 1};
}

}  // namespace

// ---------------------------------------------------------------------------
// BarrierSpec

BarrierSpec BarrierSpec::env_threshold(Field env, double theta) {
    BarrierSpec b;
    std::ostringstream os;
    os << "env>=" << theta;
    b.describe_ = os.str();
    b.mask_fn_ = [env = std::move(env), theta](const Grid& g) {
        std::vector<std::uint8_t> m(g.size(), 0);
        int na = g.naxes();
        std::vector<double> x(na);
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::vector<int> c = g.coord(i);
            for (int a = 0; a < na; ++a) x[a] = node_x(c[a], g.dims[a]);
            m[i] = interp_at(env, x) >= theta ? 1 : 0;
        }
        return m;
    };
    return b;
}

BarrierSpec BarrierSpec::point(std::vector<double> position) {
    BarrierSpec b;
    b.describe_ = "point";
    b.mask_fn_ = [position = std::move(position)](const Grid& g) {
        std::vector<std::uint8_t> m(g.size(), 0);
        std::vector<int> c(g.naxes());
        for (int a = 0; a < g.naxes(); ++a) {
            int n = g.dims[a];
            int i = static_cast<int>(std::lround(position[a] * (n + 1) - 1.0));
            c[a] = std::clamp(i, 0, n - 1);
        }
        m[g.index(c)] = 1;
        return m;
    };
    return b;
}

BarrierSpec BarrierSpec::segment(int along_axis, double offset, double from, double to) {
    BarrierSpec b;
    b.describe_ = "segment";
    b.mask_fn_ = [along_axis, offset, from, to](const Grid& g) {
        std::vector<std::uint8_t> m(g.size(), 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::vector<int> c = g.coord(i);
            bool on = true;
            for (int a = 0; a < g.naxes(); ++a) {
                int n = g.dims[a];
                if (a == along_axis) {
                    double x = node_x(c[a], n);
                    if (x < from || x > to) on = false;
                    continue;
                }
                int want = std::clamp(static_cast<int>(std::lround(offset * (n + 1) - 1.0)), 0,
                                      n - 1);
                if (c[a] != want) on = false;
            }
            if (on) m[i] = 1;
        }
        return m;
    };
    return b;
}

BarrierSpec BarrierSpec::empty() {
    BarrierSpec b;
    b.describe_ = "empty";
    b.mask_fn_ = [](const Grid& g) { return std::vector<std::uint8_t>(g.size(), 0); };
    return b;
}

std::vector<std::uint8_t> BarrierSpec::mask(const Grid& g) const { return mask_fn_(g); }

// ---------------------------------------------------------------------------
// Capacity

GridLadder GridLadder::capacity_default(int k_max) {
    // resolution exponents grow geometrically (see header)
    static const int exps[] = {3, 5, 8, 13, 21};
    GridLadder l;
    for (int k = 0; k < k_max && k < 5; ++k) l.resolutions.push_back((1 << exps[k]) + 1);
    return l;
}

GridLadder GridLadder::dyadic(int base, int k_max) {
    GridLadder l;
    int n = base;
    for (int k = 0; k < k_max; ++k) {
        l.resolutions.push_back(n);
        n = 2 * n + 1;
    }
    return l;
}

double obstacle_energy(const Grid& g, const std::vector<std::uint8_t>& mask,
                       const CapacityOptions& opts) {
    if (mask.size() != g.size()) throw std::invalid_argument("obstacle_energy: mask size mismatch");
    auto dilated = dilate(mask, g, opts.dilation_cells);
    return solve_obstacle(g, dilated, opts).energy;
}

CapacityEstimate capacity(const BarrierSpec& spec, const GridLadder& ladder, int k_max,
                          const CapacityOptions& opts) {
    if (k_max < 1 || k_max > static_cast<int>(ladder.resolutions.size()))
        throw std::invalid_argument("capacity: k_max out of ladder range");
    CapacityEstimate est;
    for (int k = 0; k < k_max; ++k) {
        int n = ladder.resolutions[k];
        Grid g = make_grid(std::vector<int>(2, n), 1.0 / (n + 1), Topology::Free);
        est.levels.push_back({n, obstacle_energy(g, spec.mask(g), opts)});
    }

    const auto& lv = est.levels;
    double last = lv.back().energy;
    if (last <= opts.floor) {
        est.verdict = CapacityVerdict::Zero;
        return est;
    }
    bool decays = lv.size() >= 2;
    for (std::size_t k = 0; k + 1 < lv.size(); ++k) {
        if (!(lv[k].energy >= opts.decay_factor * lv[k + 1].energy)) decays = false;
    }
    if (decays) {
        est.verdict = CapacityVerdict::Zero;
    } else if (lv.size() >= 2) {
        double a = lv[lv.size() - 2].energy, b = lv.back().energy;
        double hi = std::max(a, b), lo = std::min(a, b);
        if (hi - lo <= opts.plateau_band * hi && lo > opts.floor)
            est.verdict = CapacityVerdict::Positive;
        else
            est.verdict = CapacityVerdict::Inconclusive;
    }
    return est;
}

std::pair<bool, CapacityEstimate> markov_unique(const BarrierSpec& spec, const GridLadder& ladder,
                                                int k_max, const CapacityOptions& opts) {
    CapacityEstimate est = capacity(spec, ladder, k_max, opts);
    if (est.verdict == CapacityVerdict::Inconclusive)
        throw InconclusiveVerdict("capacity trend inconclusive for " + spec.describe());
    return {est.verdict == CapacityVerdict::Zero, est};
}

// ---------------------------------------------------------------------------
// Theta calibration

double coverage_fraction(const Field& env, double theta, const RefinementPolicy& policy,
                         int level) {
    Field refined = refine(env, policy, level);
    std::size_t count = 0;
    for (double v : refined.values)
        if (v >= theta) ++count;
    return static_cast<double>(count) / static_cast<double>(refined.size());
}

bool theta_qualifies(const Field& env, double theta, double phi_star, const PolicyFamily& fam) {
    for (const auto& p : fam.policies) {
        for (int n = p.stabilization_index; n <= p.max_level; ++n) {
            double tol = p.stage(n).tolerance;
            if (std::abs(coverage_fraction(env, theta, p, n) - phi_star) > tol) return false;
        }
    }
    return true;
}

ThetaCalibration calibrate_theta(const Field& env, double phi_star, const PolicyFamily& fam,
                                 const std::vector<double>& theta_ladder) {
    if (!(phi_star > 0.0 && phi_star < 1.0))
        throw std::invalid_argument("calibrate_theta: phi_star must lie in (0,1)");
    if (theta_ladder.empty()) throw std::invalid_argument("calibrate_theta: empty ladder");
    for (std::size_t j = 0; j < theta_ladder.size(); ++j) {
        if (theta_qualifies(env, theta_ladder[j], phi_star, fam))
            return {theta_ladder[j], static_cast<int>(j)};
    }
    throw CalibrationFailure("no ladder theta meets the coverage tolerance schedule");
}

UniquenessFrequency uniqueness_frequency(const std::vector<BarrierSpec>& ensemble,
                                         const std::vector<CoarseGrainScheme>& schemes,
                                         int k_max) {
    if (ensemble.empty()) throw std::invalid_argument("uniqueness_frequency: empty ensemble");
    UniquenessFrequency out;
    for (const auto& [id, ladder, opts] : schemes) {
        int unique = 0, inconclusive = 0;
        for (const auto& spec : ensemble) {
            try {
                if (markov_unique(spec, ladder, k_max, opts).first) ++unique;
            } catch (const InconclusiveVerdict&) {
                ++inconclusive;
            }
        }
        int decided = static_cast<int>(ensemble.size()) - inconclusive;
        out.scheme_ids.push_back(id);
        out.fraction.push_back(decided > 0 ? static_cast<double>(unique) / decided : 0.0);
        out.inconclusive.push_back(inconclusive);
    }
    for (std::size_t i = 0; i < out.fraction.size(); ++i)
        for (std::size_t j = i + 1; j < out.fraction.size(); ++j)
            out.drift = std::max(out.drift, std::abs(out.fraction[i] - out.fraction[j]));
    return out;
}

// ---------------------------------------------------------------------------
// Coercivity

double dirichlet_laplacian_lambda_min(int n_per_axis, int naxes) {
    double h = 1.0 / (n_per_axis + 1);
    double s = std::sin(M_PI * h / 2.0);
    return naxes * 4.0 * s * s / (h * h);
}

CoercivityReport coercivity_check(const CoefficientField& coef,
                                  const std::vector<Recoding>& recodings,
                                  const std::vector<int>& levels, double tol) {
    if (!(coef.base + std::min(coef.contrast, 0.0) > 0.0))
        throw std::invalid_argument("coercivity_check: coefficient not uniformly elliptic");
    const int na = coef.indicator.grid.naxes();

    auto rayleigh_extremes = [&](const Field& indicator, int n) {
        Grid g = make_grid(std::vector<int>(na, n), 1.0 / (n + 1), Topology::Free);
        Field chi = resample(indicator, g.dims, ResampleScheme::Nearest);
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            v[i] = coef.base + coef.contrast * chi[i];
        double h = 1.0 / (n + 1);
        double escale = std::pow(h, na - 2), mscale = std::pow(h, na);

        std::vector<std::size_t> stride(na, 1);
        for (int a = na - 2; a >= 0; --a)
            stride[a] = stride[a + 1] * static_cast<std::size_t>(g.dims[a + 1]);

        int kmax = std::min(8, n);
        int modes = 1;
        for (int a = 0; a < na; ++a) modes *= kmax;
        double fl = 0.0, ce = 0.0;
        bool first = true;
        std::vector<double> u(g.size());
        for (int m = 0; m < modes; ++m) {
            std::vector<int> kv(na);
            int rem = m;
            for (int a = na - 1; a >= 0; --a) {
                kv[a] = rem % kmax + 1;
                rem /= kmax;
            }
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::vector<int> c = g.coord(i);
                double val = 1.0;
                for (int a = 0; a < na; ++a)
                    val *= std::sin(kv[a] * M_PI * (c[a] + 1) * h);
                u[i] = val;
            }
            double energy = 0.0, mass = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::vector<int> c = g.coord(i);
                mass += u[i] * u[i];
                for (int a = 0; a < na; ++a) {
                    if (c[a] + 1 < g.dims[a]) {
                        double ve = 0.5 * (v[i] + v[i + stride[a]]);
                        double d = u[i + stride[a]] - u[i];
                        energy += ve * d * d;
                    } else {
                        energy += v[i] * u[i] * u[i];  // right ghost edge
                    }
                    if (c[a] == 0) energy += v[i] * u[i] * u[i];  // left ghost edge
                }
            }
            double q = (energy * escale) / (mass * mscale);
            if (first || q < fl) fl = first ? q : std::min(fl, q);
            ce = first ? q : std::max(ce, q);
            first = false;
        }
        return std::pair<double, double>{fl, ce};
    };

    CoercivityReport rep;
    for (int n : levels) {
        double ref_floor = 0.0;
        bool have_ref = false;
        double spread = 0.0;
        for (const auto& r : recodings) {
            Field chi = apply_recoding(r, coef.indicator);
            auto [fl, ce] = rayleigh_extremes(chi, n);
            rep.entries.push_back({r.name, n, fl, ce});
            if (!have_ref) {
                ref_floor = fl;
                have_ref = true;
            } else {
                spread = std::max(spread, std::abs(fl - ref_floor));
            }
        }
        rep.max_floor_spread = std::max(rep.max_floor_spread, spread);
        if (spread > tol * (1.0 + std::abs(ref_floor))) rep.stable = false;
    }
    return rep;
}

}  // namespace dplab
