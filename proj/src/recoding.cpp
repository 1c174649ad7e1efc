#include "dplab/recoding.hpp"

#include <sstream>
#include <stdexcept>

namespace dplab {

namespace {

Field permute_axes(const Field& f, const std::vector<int>& perm) {
    const Grid& g = f.grid;
    int n = g.naxes();
    std::vector<int> dims(n);
    std::vector<double> sp(n);
    std::vector<Topology> tp(n);
    for (int a = 0; a < n; ++a) {
        dims[a] = g.dims[perm[a]];
        sp[a] = g.spacing[perm[a]];
        tp[a] = g.topology[perm[a]];
    }
    Field out = make_field(make_grid(dims, sp, tp));
    std::vector<int> src(n);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<int> dst = out.grid.coord(i);
        for (int a = 0; a < n; ++a) src[perm[a]] = dst[a];
        out[i] = f.at(src);
    }
    return out;
}

Field reflect_axis(const Field& f, int axis) {
    Field out = make_field(f.grid);
    int d = f.grid.dims[axis];
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<int> c = out.grid.coord(i);
        c[axis] = d - 1 - c[axis];
        out[i] = f.at(c);
    }
    return out;
}

// 90-degree rotation of a square 2D field: (i, j) -> (j, n-1-i).
Field rotate_quarter(const Field& f) {
    if (f.grid.naxes() != 2) throw std::invalid_argument("rotation requires a 2D field");
    if (f.grid.dims[0] != f.grid.dims[1])
        throw std::invalid_argument("90-degree rotation requires a square grid");
    int n = f.grid.dims[0];
    Field out = make_field(f.grid);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.at({j, n - 1 - i}) = f.at({i, j});
    return out;
}

Field replicate(const Field& f, int factor) {
    const Grid& g = f.grid;
    int n = g.naxes();
    std::vector<int> dims(n);
    std::vector<double> sp(n);
    for (int a = 0; a < n; ++a) {
        dims[a] = g.dims[a] * factor;
        sp[a] = g.spacing[a] / factor;
    }
    Field out = make_field(make_grid(dims, sp, g.topology));
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<int> c = out.grid.coord(i);
        for (int a = 0; a < n; ++a) c[a] /= factor;
        out[i] = f.at(c);
    }
    return out;
}

Field block_mean(const Field& f, int factor) {
    const Grid& g = f.grid;
    int n = g.naxes();
    std::vector<int> dims(n);
    std::vector<double> sp(n);
    for (int a = 0; a < n; ++a) {
        if (g.dims[a] % factor != 0)
            throw std::invalid_argument("block mean requires dims divisible by factor");
        dims[a] = g.dims[a] / factor;
        sp[a] = g.spacing[a] * factor;
    }
    Field out = make_field(make_grid(dims, sp, g.topology));
    std::size_t block = 1;
    for (int a = 0; a < n; ++a) block *= static_cast<std::size_t>(factor);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<int> base = out.grid.coord(i);
        double s = 0.0;
        // enumerate the factor^n source block
        std::vector<int> off(n, 0);
        for (std::size_t b = 0; b < block; ++b) {
            std::size_t rem = b;
            std::vector<int> c(n);
            for (int a = n - 1; a >= 0; --a) {
                c[a] = base[a] * factor + static_cast<int>(rem % factor);
                rem /= factor;
            }
            s += f.at(c);
        }
        out[i] = s / static_cast<double>(block);
    }
    return out;
}

}  // namespace

Field apply_recoding(const Recoding& r, const Field& f) { return r.forward(f); }
Field apply_inverse(const Recoding& r, const Field& f) { return r.inverse(f); }

Recoding identity_recoding() {
    auto id = [](const Field& f) { return f; };
    return Recoding{"identity", RecodingKind::Permutation, id, id, id, id};
}

Recoding axis_reflection(int axis) {
    auto fn = [axis](const Field& f) {
        if (axis < 0 || axis >= f.grid.naxes())
            throw std::invalid_argument("reflection axis out of range");
        return reflect_axis(f, axis);
    };
    return Recoding{"reflect" + std::to_string(axis), RecodingKind::Reflection, fn, fn, fn, fn};
}

Recoding rotation90(int quarter_turns) {
    int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return identity_recoding();
    auto rot = [](const Field& f, int turns) {
        Field out = f;
        for (int t = 0; t < turns; ++t) out = rotate_quarter(out);
        return out;
    };
    auto fwd = [rot, q](const Field& f) { return rot(f, q); };
    auto inv = [rot, q](const Field& f) { return rot(f, 4 - q); };
    return Recoding{"rot" + std::to_string(90 * q), RecodingKind::Rotation, fwd, inv, fwd, inv};
}

Recoding transpose_recoding() {
    auto fn = [](const Field& f) {
        if (f.grid.naxes() != 2) throw std::invalid_argument("transpose requires a 2D field");
        return permute_axes(f, {1, 0});
    };
    return Recoding{"transpose", RecodingKind::Permutation, fn, fn, fn, fn};
}

Recoding upsample_recoding(int factor) {
    if (factor < 2) throw std::invalid_argument("upsample factor must be >= 2");
    auto fwd = [factor](const Field& f) { return replicate(f, factor); };
    auto inv = [factor](const Field& f) { return block_mean(f, factor); };
    return Recoding{"upsample" + std::to_string(factor), RecodingKind::Resample, fwd, inv, fwd, inv};
}

Recoding value_rescale(double a, double b) {
    if (a == 0.0) throw std::invalid_argument("value rescale requires a != 0");
    auto fwd = [a, b](const Field& f) {
        Field out = f;
        for (double& v : out.values) v = a * v + b;
        return out;
    };
    auto inv = [a, b](const Field& f) {
        Field out = f;
        for (double& v : out.values) v = (v - b) / a;
        return out;
    };
    std::ostringstream name;
    name << "rescale:" << a << ":" << b;
    return Recoding{name.str(), RecodingKind::ValueRescale, fwd, inv, fwd, inv};
}

Recoding recoding_by_name(const std::string& name) {
    if (name == "identity") return identity_recoding();
    if (name == "reflect0") return axis_reflection(0);
    if (name == "reflect1") return axis_reflection(1);
    if (name == "rot90") return rotation90(1);
    if (name == "rot180") return rotation90(2);
    if (name == "rot270") return rotation90(3);
    if (name == "transpose") return transpose_recoding();
    if (name == "flipsign") return value_rescale(-1.0, 0.0);
    if (name.rfind("rescale:", 0) == 0) {
        std::istringstream is(name.substr(8));
        double a = 1.0, b = 0.0;
        char sep = 0;
        if (!(is >> a)) throw std::invalid_argument("bad rescale spec: " + name);
        if (is >> sep >> b && sep != ':') throw std::invalid_argument("bad rescale spec: " + name);
        return value_rescale(a, b);
    }
    if (name.rfind("upsample:", 0) == 0) {
        int k = std::stoi(name.substr(9));
        return upsample_recoding(k);
    }
    throw std::invalid_argument("unknown recoding: " + name);
}

}  // namespace dplab
