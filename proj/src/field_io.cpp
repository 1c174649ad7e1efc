#include "dplab/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace dplab {

namespace {

static_assert(std::endian::native == std::endian::little,
              "field binary I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("field binary: truncated stream");
    return v;
}

}  // namespace

void write_field_binary(const Field& f, std::ostream& os) {
    os.write("DPLF", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(f.grid.naxes()));
    for (int a = 0; a < f.grid.naxes(); ++a) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.dims[a]));
        put<double>(os, f.grid.spacing[a]);
        put<std::uint8_t>(os, f.grid.topology[a] == Topology::Periodic ? 1 : 0);
    }
    for (double v : f.values) put<double>(os, v);
}

Field read_field_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DPLF", 4) != 0)
        throw std::runtime_error("field binary: bad magic");
    auto version = get<std::uint8_t>(is);
    if (version != 1) throw std::runtime_error("field binary: unsupported version");
    int na = get<std::uint8_t>(is);
    if (na < 1 || na > 3) throw std::runtime_error("field binary: bad axis count");
    std::vector<int> dims(na);
    std::vector<double> sp(na);
    std::vector<Topology> tp(na);
    for (int a = 0; a < na; ++a) {
        dims[a] = static_cast<int>(get<std::uint32_t>(is));
        sp[a] = get<double>(is);
        tp[a] = get<std::uint8_t>(is) ? Topology::Periodic : Topology::Free;
    }
    Grid g = make_grid(dims, sp, tp);
    std::vector<double> vals(g.size());
    for (double& v : vals) v = get<double>(is);
    return make_field(std::move(g), std::move(vals));
}

void write_field_binary(const Field& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_field_binary(f, os);
}

Field read_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return read_field_binary(is);
}

void write_field_csv(const Field& f, std::ostream& os) {
    os << "# dims=";
    for (int a = 0; a < f.grid.naxes(); ++a) os << (a ? "x" : "") << f.grid.dims[a];
    os << " spacing=";
    os << std::setprecision(17);
    for (int a = 0; a < f.grid.naxes(); ++a) os << (a ? "x" : "") << f.grid.spacing[a];
    os << " topology=";
    for (int a = 0; a < f.grid.naxes(); ++a)
        os << (f.grid.topology[a] == Topology::Periodic ? 'p' : 'f');
    os << "\n";
    std::size_t row = f.grid.naxes() == 1 ? f.size()
                                          : f.size() / static_cast<std::size_t>(f.grid.dims[0]);
    for (std::size_t i = 0; i < f.size(); ++i) {
        os << f.values[i];
        os << ((i % row == row - 1) ? '\n' : ',');
    }
}

Field read_field_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# dims=", 0) != 0)
        throw std::runtime_error("field csv: missing header");
    auto section = [&](const std::string& key) {
        auto pos = header.find(key + "=");
        if (pos == std::string::npos) throw std::runtime_error("field csv: missing " + key);
        pos += key.size() + 1;
        auto end = header.find(' ', pos);
        return header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    };
    auto split_x = [](const std::string& s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        // split on 'x' only when it separates numeric tokens
        while (true) {
            auto pos = s.find('x', start);
            if (pos == std::string::npos) {
                out.push_back(s.substr(start));
                break;
            }
            out.push_back(s.substr(start, pos - start));
            start = pos + 1;
        }
        return out;
    };
    std::vector<int> dims;
    for (auto& t : split_x(section("dims"))) dims.push_back(std::stoi(t));
    std::vector<double> sp;
    for (auto& t : split_x(section("spacing"))) sp.push_back(std::stod(t));
    std::vector<Topology> tp;
    for (char c : section("topology"))
        tp.push_back(c == 'p' ? Topology::Periodic : Topology::Free);
    Grid g = make_grid(dims, sp, tp);
    std::vector<double> vals;
    vals.reserve(g.size());
    std::string cell;
    while (is >> std::ws, std::getline(is, cell)) {
        std::istringstream row(cell);
        std::string tok;
        while (std::getline(row, tok, ',')) {
            if (!tok.empty()) vals.push_back(std::stod(tok));
        }
    }
    return make_field(std::move(g), std::move(vals));
}

void write_field_csv(const Field& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << std::setprecision(17);
    write_field_csv(f, os);
}

Field read_field_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return read_field_csv(is);
}

}  // namespace dplab
