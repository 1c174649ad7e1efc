#include "dplab/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dplab {

namespace {

// Per-axis sample position of index i in [0,1) (Periodic) or [0,1] (Free).
// Node convention for interpolating schemes: Free axes place samples at
// i/(n-1) (a single node sits at 0), Periodic at i/n.
double node_pos(int i, int n, Topology t) {
    if (t == Topology::Periodic) return static_cast<double>(i) / n;
    return n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
}

struct AxisWeight {
    int i0, i1;
    double w1;  // value = (1-w1)*f[i0] + w1*f[i1]
};

AxisWeight bilinear_axis(double x, int n, Topology t) {
    if (t == Topology::Periodic) {
        double s = x * n;
        int i0 = static_cast<int>(std::floor(s));
        double w = s - i0;
        int a = ((i0 % n) + n) % n;
        int b = (a + 1) % n;
        return {a, b, w};
    }
    if (n == 1) return {0, 0, 0.0};
    double s = x * (n - 1);
    int i0 = static_cast<int>(std::floor(s));
    if (i0 < 0) i0 = 0;
    if (i0 > n - 2) i0 = n - 2;
    return {i0, i0 + 1, s - i0};
}

int nearest_axis(double x, int n, Topology t) {
    if (t == Topology::Periodic) {
        int i = static_cast<int>(std::floor(x * n + 0.5));
        return ((i % n) + n) % n;
    }
    if (n == 1) return 0;
    int i = static_cast<int>(std::floor(x * (n - 1) + 0.5));
    return std::clamp(i, 0, n - 1);
}

// Overlap weights of destination cell j (of m) against source cells (of n)
// when both partition [0,1).
void conservative_axis(int j, int m, int n, std::vector<std::pair<int, double>>& out) {
    out.clear();
    double lo = static_cast<double>(j) / m;
    double hi = static_cast<double>(j + 1) / m;
    int s0 = static_cast<int>(std::floor(lo * n));
    int s1 = static_cast<int>(std::ceil(hi * n)) - 1;
    s1 = std::min(s1, n - 1);
    for (int s = s0; s <= s1; ++s) {
        double clo = static_cast<double>(s) / n;
        double chi = static_cast<double>(s + 1) / n;
        double ov = std::min(hi, chi) - std::max(lo, clo);
        if (ov > 0) out.push_back({s, ov * m});  // weights sum to 1 per dst cell
    }
}

}  // namespace

Field resample(const Field& f, const std::vector<int>& new_dims, ResampleScheme scheme) {
    const Grid& g = f.grid;
    int na = g.naxes();
    if (static_cast<int>(new_dims.size()) != na)
        throw std::invalid_argument("resample: axis count mismatch");
    if (new_dims == g.dims) return f;

    std::vector<double> sp(na);
    for (int a = 0; a < na; ++a) {
        if (new_dims[a] < 1) throw std::invalid_argument("resample: dims must be >= 1");
        // keep the physical extent: node convention for Free, cell for Periodic
        double extent = (g.topology[a] == Topology::Periodic)
                            ? g.spacing[a] * g.dims[a]
                            : g.spacing[a] * std::max(1, g.dims[a] - 1);
        int denom = (g.topology[a] == Topology::Periodic) ? new_dims[a]
                                                          : std::max(1, new_dims[a] - 1);
        sp[a] = extent / denom;
    }
    Field out = make_field(make_grid(new_dims, sp, g.topology));

    if (scheme == ResampleScheme::ConservativeAverage) {
        // separable overlap averaging, axis by axis
        Field cur = f;
        for (int a = 0; a < na; ++a) {
            if (new_dims[a] == cur.grid.dims[a]) continue;
            std::vector<int> dims = cur.grid.dims;
            dims[a] = new_dims[a];
            std::vector<double> csp = cur.grid.spacing;
            csp[a] = sp[a];
            Field next = make_field(make_grid(dims, csp, g.topology));
            std::vector<std::pair<int, double>> w;
            for (std::size_t i = 0; i < next.size(); ++i) {
                std::vector<int> c = next.grid.coord(i);
                conservative_axis(c[a], dims[a], cur.grid.dims[a], w);
                double s = 0.0;
                std::vector<int> src = c;
                for (auto& [si, wi] : w) {
                    src[a] = si;
                    s += wi * cur.at(src);
                }
                next[i] = s;
            }
            cur = std::move(next);
        }
        out.values = std::move(cur.values);
        return out;
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<int> c = out.grid.coord(i);
        if (scheme == ResampleScheme::Nearest) {
            std::vector<int> src(na);
            for (int a = 0; a < na; ++a) {
                double x = node_pos(c[a], new_dims[a], g.topology[a]);
                src[a] = nearest_axis(x, g.dims[a], g.topology[a]);
            }
            out[i] = f.at(src);
        } else {
            // separable bilinear: accumulate over the 2^na corner stencil
            std::vector<AxisWeight> aw(na);
            for (int a = 0; a < na; ++a) {
                double x = node_pos(c[a], new_dims[a], g.topology[a]);
                aw[a] = bilinear_axis(x, g.dims[a], g.topology[a]);
            }
            double acc = 0.0;
            int corners = 1 << na;
            std::vector<int> src(na);
            for (int m = 0; m < corners; ++m) {
                double w = 1.0;
                for (int a = 0; a < na; ++a) {
                    bool hi = (m >> a) & 1;
                    src[a] = hi ? aw[a].i1 : aw[a].i0;
                    w *= hi ? aw[a].w1 : (1.0 - aw[a].w1);
                }
                if (w != 0.0) acc += w * f.at(src);
            }
            out[i] = acc;
        }
    }
    return out;
}

Field refine(const Field& f, const RefinementPolicy& p, int level) {
    if (level < 1 || level > p.max_level)
        throw std::invalid_argument("refine: level out of range for policy " + p.id);
    PolicyStage st = p.stage(level);
    return resample(f, st.resolution, p.scheme);
}

RefinementPolicy dyadic_policy(std::string id, std::vector<int> base_dims,
                               ResampleScheme scheme, int max_level, double tol0,
                               int samples0, double growth) {
    RefinementPolicy p;
    p.id = std::move(id);
    p.scheme = scheme;
    p.max_level = max_level;
    p.stage = [base_dims, tol0, samples0, growth](int n) {
        PolicyStage st;
        double f = std::pow(growth, n - 1);
        st.resolution.resize(base_dims.size());
        for (std::size_t a = 0; a < base_dims.size(); ++a)
            st.resolution[a] = static_cast<int>(std::lround(base_dims[a] * f));
        st.sample_count = static_cast<int>(std::lround(samples0 * f));
        st.tolerance = tol0 * std::pow(4.0, -(n - 1));
        return st;
    };
    return p;
}

PolicyFamily make_family(std::vector<RefinementPolicy> policies) {
    if (policies.empty()) throw std::invalid_argument("policy family must be non-empty");
    int ml = policies.front().max_level;
    for (const auto& p : policies) {
        if (p.max_level != ml)
            throw std::invalid_argument("all policies in a family share max_level");
    }
    return PolicyFamily{std::move(policies), ml};
}

bool policy_well_formed(const RefinementPolicy& p) {
    for (int n = 1; n < p.max_level; ++n) {
        PolicyStage a = p.stage(n), b = p.stage(n + 1);
        if (a.resolution.size() != b.resolution.size()) return false;
        bool grew = false;
        for (std::size_t i = 0; i < a.resolution.size(); ++i) {
            if (b.resolution[i] < a.resolution[i]) return false;
            if (b.resolution[i] > a.resolution[i]) grew = true;
        }
        if (!grew) return false;
        if (!(b.tolerance < a.tolerance)) return false;
    }
    return true;
}

}  // namespace dplab
