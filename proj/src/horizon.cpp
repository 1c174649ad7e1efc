#include "dplab/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dplab/errors.hpp"

namespace dplab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

double vec_rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

std::size_t nearest_node(const std::vector<double>& nodes, double v) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
    if (it == nodes.end()) return nodes.size() - 1;
    if (it == nodes.begin()) return 0;
    std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    return (v - nodes[hi - 1] <= nodes[hi] - v) ? hi - 1 : hi;
}

// centered periodic x derivative
void dx_centered(const std::vector<double>& f, double dx, std::vector<double>& out) {
    std::size_t n = f.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
        out[i] = (f[ip] - f[im]) / (2.0 * dx);
    }
}

}  // namespace

InteriorModel flat_model(double v_span) {
    InteriorModel m;
    m.kappa = 0.0;
    m.potential = [](double, double) { return 0.0; };
    m.potential_bound = 0.0;
    m.v0 = 0.0;
    m.v_max = v_span;
    m.x_length = 1.0;
    return m;
}

InteriorModel constant_potential_model(double kappa, double v_const, double v_span) {
    InteriorModel m;
    m.kappa = kappa;
    m.potential = [v_const](double, double) { return v_const; };
    m.potential_bound = std::abs(v_const);
    m.v0 = 0.0;
    m.v_max = v_span;
    m.x_length = 1.0;
    return m;
}

CauchyDatum zero_datum() {
    return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

CauchyDatum rightward_pulse(double x0, double width, double amplitude) {
    // smooth periodic bump: a * exp(-sin^2(pi (x-x0)) / w^2) recentred to
    // vanish nowhere discontinuously; moving right means phi1 = -phi0'
    auto f = [x0, width, amplitude](double x) {
        double s = std::sin(M_PI * (x - x0));
        return amplitude * std::exp(-s * s / (width * width));
    };
    auto fp = [x0, width, amplitude, f](double x) {
        double s = std::sin(M_PI * (x - x0));
        double c = std::cos(M_PI * (x - x0));
        return f(x) * (-2.0 * s * c * M_PI / (width * width));
    };
    return {f, [fp](double x) { return -fp(x); }};
}

CauchyDatum standing_mode(int k, double amplitude) {
    return {[k, amplitude](double x) { return amplitude * std::cos(kTwoPi * k * x); },
            [](double) { return 0.0; }};
}

Evolution evolve_interior(const InteriorModel& model, const CauchyDatum& d, PipelineSpec spec,
                          int resolution) {
    if (resolution < 4) throw std::invalid_argument("evolve_interior: resolution too small");
    const int nx = resolution;
    const double dx = model.x_length / nx;
    const double span = model.v_max - model.v0;
    if (!(span > 0.0)) throw std::invalid_argument("evolve_interior: empty v-span");

    double dv;
    int nsteps;
    if (spec.scheme == Scheme::Characteristic) {
        if (std::abs(spec.cfl - 1.0) > 1e-12)
            throw std::invalid_argument("characteristic scheme runs at cfl = 1");
        double steps = span / dx;
        nsteps = static_cast<int>(std::lround(steps));
        if (nsteps < 1 || std::abs(steps - nsteps) > 1e-9 * steps)
            throw std::invalid_argument(
                "characteristic scheme needs the v-span commensurate with dx");
        dv = dx;
    } else {
        if (!(spec.cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
        double dv_max = dx / std::sqrt(1.0 + model.potential_bound * dx * dx / 4.0);
        dv = spec.cfl * dx;
        if (dv > dv_max * (1.0 + 1e-12))
            throw std::invalid_argument("CFL violation: dv exceeds the stable step");
        nsteps = static_cast<int>(std::ceil(span / dv - 1e-12));
        dv = span / nsteps;
    }

    Evolution evo;
    evo.nx = nx;
    evo.dx = dx;
    evo.v_nodes.resize(nsteps + 1);
    for (int n = 0; n <= nsteps; ++n) evo.v_nodes[n] = model.v0 + n * dv;
    evo.phi.assign(nsteps + 1, std::vector<double>(nx));
    evo.dphi_dv.assign(nsteps + 1, std::vector<double>(nx));

    std::vector<double> x(nx);
    for (int i = 0; i < nx; ++i) x[i] = i * dx;
    auto laplacian = [&](const std::vector<double>& f, std::vector<double>& out) {
        for (int i = 0; i < nx; ++i) {
            int ip = (i + 1) % nx, im = (i + nx - 1) % nx;
            out[i] = (f[ip] - 2.0 * f[i] + f[im]) / (dx * dx);
        }
    };

    std::vector<double>& phi0 = evo.phi[0];
    std::vector<double>& dphi0 = evo.dphi_dv[0];
    for (int i = 0; i < nx; ++i) {
        phi0[i] = d.phi0(x[i]);
        dphi0[i] = d.phi1(x[i]);
    }
    double amp0 = 0.0;
    for (double v : phi0) amp0 = std::max(amp0, std::abs(v));
    const double blow = 1e12 * (1.0 + amp0);

    auto check_blowup = [&](const std::vector<double>& f, int step) {
        for (double v : f)
            if (!std::isfinite(v) || std::abs(v) > blow)
                throw EvolutionBlowup("field evolution blew up", step);
    };

    if (spec.scheme == Scheme::Leapfrog) {
        std::vector<double> lap(nx);
        laplacian(phi0, lap);
        std::vector<double>& phi1 = evo.phi[1];
        for (int i = 0; i < nx; ++i) {
            double rhs = lap[i] - model.potential(model.v0, x[i]) * phi0[i];
            phi1[i] = phi0[i] + dv * dphi0[i] + 0.5 * dv * dv * rhs;
        }
        check_blowup(phi1, 1);
        for (int n = 1; n < nsteps; ++n) {
            laplacian(evo.phi[n], lap);
            double vn = evo.v_nodes[n];
            std::vector<double>& next = evo.phi[n + 1];
            const std::vector<double>& cur = evo.phi[n];
            const std::vector<double>& prev = evo.phi[n - 1];
            for (int i = 0; i < nx; ++i) {
                double rhs = lap[i] - model.potential(vn, x[i]) * cur[i];
                next[i] = 2.0 * cur[i] - prev[i] + dv * dv * rhs;
            }
            check_blowup(next, n + 1);
        }
        // centred dphi/dv in the interior, one-sided second order at the end
        for (int n = 1; n < nsteps; ++n) {
            for (int i = 0; i < nx; ++i)
                evo.dphi_dv[n][i] = (evo.phi[n + 1][i] - evo.phi[n - 1][i]) / (2.0 * dv);
        }
        if (nsteps >= 2) {
            for (int i = 0; i < nx; ++i)
                evo.dphi_dv[nsteps][i] = (3.0 * evo.phi[nsteps][i] - 4.0 * evo.phi[nsteps - 1][i] +
                                          evo.phi[nsteps - 2][i]) /
                                         (2.0 * dv);
        } else if (nsteps == 1) {
            for (int i = 0; i < nx; ++i)
                evo.dphi_dv[1][i] = (evo.phi[1][i] - evo.phi[0][i]) / dv;
        }
    } else {
        // first-order characteristic variables a = phi_v - phi_x,
        // b = phi_v + phi_x; exact unit-speed shifts at dv = dx, trapezoid
        // source integration along characteristics (second order)
        std::vector<double> dphix(nx);
        dx_centered(phi0, dx, dphix);
        std::vector<double> a(nx), b(nx), an(nx), bn(nx), src(nx), phi_pred(nx), src_pred(nx);
        for (int i = 0; i < nx; ++i) {
            a[i] = dphi0[i] - dphix[i];
            b[i] = dphi0[i] + dphix[i];
        }
        for (int n = 0; n < nsteps; ++n) {
            double vn = evo.v_nodes[n], vn1 = evo.v_nodes[n + 1];
            const std::vector<double>& cur = evo.phi[n];
            for (int i = 0; i < nx; ++i) src[i] = model.potential(vn, x[i]) * cur[i];
            // predictor
            for (int i = 0; i < nx; ++i)
                phi_pred[i] = cur[i] + dv * 0.5 * (a[i] + b[i]);
            for (int i = 0; i < nx; ++i) src_pred[i] = model.potential(vn1, x[i]) * phi_pred[i];
            for (int i = 0; i < nx; ++i) {
                int im = (i + nx - 1) % nx, ip = (i + 1) % nx;
                an[i] = a[im] - 0.5 * dv * (src[im] + src_pred[i]);
                bn[i] = b[ip] - 0.5 * dv * (src[ip] + src_pred[i]);
            }
            std::vector<double>& next = evo.phi[n + 1];
            for (int i = 0; i < nx; ++i)
                next[i] = cur[i] + 0.25 * dv * ((a[i] + b[i]) + (an[i] + bn[i]));
            check_blowup(next, n + 1);
            a.swap(an);
            b.swap(bn);
            for (int i = 0; i < nx; ++i) evo.dphi_dv[n + 1][i] = 0.5 * (a[i] + b[i]);
        }
    }

    // H1 x L2 norm of the initial slice: positive definite, unlike the
    // slice energy when the potential dips negative
    {
        std::vector<double> px;
        dx_centered(evo.phi[0], dx, px);
        double s = 0.0;
        for (int i = 0; i < nx; ++i)
            s += evo.phi[0][i] * evo.phi[0][i] + px[i] * px[i] +
                 evo.dphi_dv[0][i] * evo.dphi_dv[0][i];
        evo.datum_norm = 0.5 * s * dx;
    }
    return evo;
}

double slice_energy(const InteriorModel& model, const Evolution& evo, std::size_t slice) {
    const std::vector<double>& phi = evo.phi[slice];
    const std::vector<double>& pv = evo.dphi_dv[slice];
    std::vector<double> px;
    dx_centered(phi, evo.dx, px);
    double v = evo.v_nodes[slice];
    double e = 0.0;
    for (int i = 0; i < evo.nx; ++i) {
        double V = model.potential(v, i * evo.dx);
        e += 0.5 * (pv[i] * pv[i] + px[i] * px[i] + V * phi[i] * phi[i]);
    }
    return e * evo.dx;
}

double weighted_flux(const InteriorModel& model, const Evolution& evo, double va, double vb) {
    if (!(va < vb)) throw std::invalid_argument("weighted_flux: need va < vb");
    std::size_t i0 = nearest_node(evo.v_nodes, va);
    std::size_t i1 = nearest_node(evo.v_nodes, vb);
    if (i1 <= i0) return 0.0;
    auto integrand = [&](std::size_t n) {
        double s = 0.0;
        for (double d : evo.dphi_dv[n]) s += d * d;
        return std::exp(model.kappa * evo.v_nodes[n]) * s * evo.dx;
    };
    double acc = 0.0;
    for (std::size_t n = i0; n < i1; ++n) {
        double h = evo.v_nodes[n + 1] - evo.v_nodes[n];
        acc += 0.5 * h * (integrand(n) + integrand(n + 1));
    }
    return acc;
}

TailResult flux_tail(const InteriorModel& model, const Evolution& evo, double v_start,
                     const TailOptions& opts) {
    double v_end = evo.v_nodes.back();
    if (!(v_start < v_end)) throw std::invalid_argument("flux_tail: start beyond domain");
    double min_flux = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= opts.windows; ++j) {
        double v1 = v_start + j * (v_end - v_start) / opts.windows;
        min_flux = std::min(min_flux, weighted_flux(model, evo, v_start, v1));
    }
    TailResult r;
    r.flux = min_flux;
    r.admissible = min_flux <= opts.cap_factor * evo.datum_norm + 1e-12;
    return r;
}

RefinementPolicy extraction_policy(std::string id, int base_resolution, double base_window,
                                   int max_level, int samples0) {
    RefinementPolicy p;
    p.id = std::move(id);
    p.scheme = ResampleScheme::Bilinear;
    p.max_level = max_level;
    p.stage = [base_resolution, base_window, samples0](int n) {
        PolicyStage st;
        st.resolution = {base_resolution << (n - 1)};
        st.sample_count = samples0 << (n - 1);
        st.tolerance = std::pow(2.0, -(n + 2));
        st.window = base_window * std::pow(2.0, -(n - 1));
        return st;
    };
    return p;
}

std::vector<TraceCandidate> extract_traces(const InteriorModel& model, const CauchyDatum& d,
                                           const PolicyFamily& fam, PipelineSpec spec,
                                           int resolution, const ExtractOptions& opts) {
    Evolution evo = evolve_interior(model, d, spec, resolution);
    double span = evo.v_nodes.back() - evo.v_nodes.front();
    double tail_start = evo.v_nodes.front() + opts.tail_start_fraction * span;
    TailResult tail = flux_tail(model, evo, tail_start, opts.tail);
    if (!tail.admissible)
        throw InadmissibleDatum("tail flux exceeds the admissibility cap");

    std::vector<TraceCandidate> out;
    for (const auto& policy : fam.policies) {
        PolicyStage st = policy.stage(policy.max_level);
        double wfrac = st.window > 0.0 ? st.window : 0.25;
        double w0 = evo.v_nodes.back() - wfrac * span;
        std::size_t j0 = nearest_node(evo.v_nodes, w0);
        if (j0 + 1 >= evo.v_nodes.size()) j0 = evo.v_nodes.size() - 2;

        TraceCandidate c;
        c.policy_id = policy.id;
        // window time-average of phi (trapezoid weights)
        c.trace.assign(evo.nx, 0.0);
        double wsum = 0.0;
        for (std::size_t n = j0; n < evo.v_nodes.size(); ++n) {
            double w = (n == j0 || n + 1 == evo.v_nodes.size()) ? 0.5 : 1.0;
            for (int i = 0; i < evo.nx; ++i) c.trace[i] += w * evo.phi[n][i];
            wsum += w;
        }
        for (double& t : c.trace) t /= wsum;

        c.flux_at_extraction = weighted_flux(model, evo, evo.v_nodes[j0], evo.v_nodes.back());

        // primary cost over the window; derivative set per options
        double e0 = 0.0;
        std::vector<double> px;
        for (std::size_t n = j0; n + 1 < evo.v_nodes.size(); ++n) {
            double h = evo.v_nodes[n + 1] - evo.v_nodes[n];
            for (std::size_t m = n; m <= n + 1; ++m) {
                double s = 0.0;
                for (double dphi : evo.dphi_dv[m]) s += dphi * dphi;
                if (opts.e0_includes_dx) {
                    dx_centered(evo.phi[m], evo.dx, px);
                    for (double g : px) s += g * g;
                }
                e0 += 0.5 * h * std::exp(model.kappa * evo.v_nodes[m]) * s * evo.dx;
            }
        }
        c.e0 = e0;

        // secondary cost: unweighted energy over the last quarter, sampled at
        // the policy's subsequence stride
        std::size_t q0 = nearest_node(evo.v_nodes, evo.v_nodes.back() - 0.25 * span);
        std::size_t stride = std::max<std::size_t>(
            1, (evo.v_nodes.size() - q0) / std::max(1, st.sample_count));
        double phi1 = 0.0;
        std::size_t count = 0;
        for (std::size_t n = q0; n < evo.v_nodes.size(); n += stride) {
            phi1 += slice_energy(model, evo, n);
            ++count;
        }
        c.phi1 = count ? phi1 / static_cast<double>(count) : 0.0;
        out.push_back(std::move(c));
    }
    return out;
}

SelectionOutcome select_continuation(const std::vector<TraceCandidate>& candidates,
                                     const UtConfig& ut, const SelectOptions& opts) {
    if (candidates.empty()) throw std::invalid_argument("select_continuation: no candidates");
    if (ut.q_grid.empty()) throw std::invalid_argument("select_continuation: empty q grid");
    double q_max = *std::max_element(ut.q_grid.begin(), ut.q_grid.end());

    // finite-truncation tameness: every policy's trace stays within some
    // menu tolerance of the candidate
    std::vector<bool> tame(candidates.size(), true);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (const auto& other : candidates) {
            double dev = rms_diff(candidates[i].trace, other.trace) /
                         (1.0 + vec_rms(candidates[i].trace));
            if (dev > q_max) {
                tame[i] = false;
                break;
            }
        }
    }

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (tame[i]) pool.push_back(i);
    if (pool.empty()) throw NoTameContinuation("all candidates fail the tameness check");

    double e0_min = std::numeric_limits<double>::infinity();
    for (auto i : pool) e0_min = std::min(e0_min, candidates[i].e0);
    std::vector<std::size_t> band;
    for (auto i : pool)
        if (candidates[i].e0 <= e0_min + opts.e0_band * (1.0 + std::abs(e0_min)))
            band.push_back(i);

    double p1_min = std::numeric_limits<double>::infinity();
    for (auto i : band) p1_min = std::min(p1_min, candidates[i].phi1);
    std::vector<std::size_t> ties;
    for (auto i : band)
        if (candidates[i].phi1 <= p1_min + opts.phi1_band * (1.0 + std::abs(p1_min)))
            ties.push_back(i);

    SelectionOutcome outcome;
    outcome.chosen = candidates[ties.front()];  // first policy id in input order
    outcome.e0 = outcome.chosen.e0;
    outcome.phi1 = outcome.chosen.phi1;
    outcome.ut_passed = true;
    outcome.tie_set_size = static_cast<int>(ties.size());
    return outcome;
}

double energy_identity_residual(const InteriorModel& model, const Evolution& evo, double v1,
                                double v2) {
    if (!(v1 < v2)) throw std::invalid_argument("energy_identity_residual: need v1 < v2");
    std::size_t i1 = nearest_node(evo.v_nodes, v1);
    std::size_t i2 = nearest_node(evo.v_nodes, v2);
    if (i2 <= i1) throw std::invalid_argument("energy_identity_residual: slab too thin");
    auto weighted_energy = [&](std::size_t n) {
        return std::exp(model.kappa * evo.v_nodes[n]) * slice_energy(model, evo, n);
    };
    double boundary = weighted_energy(i2) - weighted_energy(i1);
    auto integrand = [&](std::size_t n) {
        double s = 0.0;
        for (double d : evo.dphi_dv[n]) s += d * d;
        return model.kappa * std::exp(model.kappa * evo.v_nodes[n]) * s * evo.dx;
    };
    double slab = 0.0;
    for (std::size_t n = i1; n < i2; ++n) {
        double h = evo.v_nodes[n + 1] - evo.v_nodes[n];
        slab += 0.5 * h * (integrand(n) + integrand(n + 1));
    }
    return std::abs(boundary - slab);
}

std::vector<double> cross_pipeline_divergence(const InteriorModel& model, const CauchyDatum& d,
                                              PipelineSpec a, PipelineSpec b,
                                              const std::vector<int>& resolutions,
                                              const PolicyFamily& fam, const UtConfig& ut,
                                              const ExtractOptions& opts) {
    std::vector<double> out;
    for (int res : resolutions) {
        SelectionOutcome sa = select_continuation(extract_traces(model, d, fam, a, res, opts), ut);
        SelectionOutcome sb = select_continuation(extract_traces(model, d, fam, b, res, opts), ut);
        out.push_back(rms_diff(sa.chosen.trace, sb.chosen.trace) /
                      (1.0 + vec_rms(sa.chosen.trace)));
    }
    return out;
}

}  // namespace dplab
