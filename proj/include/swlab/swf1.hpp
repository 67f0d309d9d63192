#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swlab/grid.hpp"

namespace swlab {

// SWF1 field container format.  ASCII header:
//   SWF1
//   kind grid2|grid3
//   dims nx ny [nz]
//   h <%.17g>
//   center <%.17g> <%.17g>
//   components <count>
//   encoding f64le
//   data
// followed by raw little-endian doubles, row-major node order with components
// interleaved.  Round-trips are bit-exact.

struct Swf1Error : std::runtime_error {
    explicit Swf1Error(const std::string& msg) : std::runtime_error("SWF1: " + msg) {}
};

struct FieldBundle2 {
    Grid2 grid;
    int components;
    std::vector<double> data;  // node-major, components interleaved
};

struct FieldBundle3 {
    Grid3 grid;
    int components;
    std::vector<double> data;
};

namespace swf1_detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_payload(std::ostream& os, const std::vector<double>& data) {
    static_assert(std::endian::native == std::endian::little,
                  "SWF1 writer assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
}

inline std::string next_line(std::istream& is, const char* what) {
    std::string line;
    if (!std::getline(is, line)) throw Swf1Error(std::string("truncated header, expected ") + what);
    return line;
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

struct Header {
    bool is3d = false;
    int nx = 0, ny = 0, nz = 0;
    double h = 0.0;
    complexd center;
    int components = 0;
};

inline Header read_header(std::istream& is) {
    Header hd;
    if (next_line(is, "magic") != "SWF1") throw Swf1Error("bad magic line (want \"SWF1\")");
    {
        auto t = tokens(next_line(is, "kind"));
        if (t.size() != 2 || t[0] != "kind" || (t[1] != "grid2" && t[1] != "grid3"))
            throw Swf1Error("bad kind line");
        hd.is3d = (t[1] == "grid3");
    }
    {
        auto t = tokens(next_line(is, "dims"));
        const std::size_t want = hd.is3d ? 4 : 3;
        if (t.size() != want || t[0] != "dims") throw Swf1Error("bad dims line");
        hd.nx = std::stoi(t[1]);
        hd.ny = std::stoi(t[2]);
        if (hd.is3d) hd.nz = std::stoi(t[3]);
    }
    {
        auto t = tokens(next_line(is, "h"));
        if (t.size() != 2 || t[0] != "h") throw Swf1Error("bad h line");
        hd.h = std::stod(t[1]);
    }
    {
        auto t = tokens(next_line(is, "center"));
        if (t.size() != 3 || t[0] != "center") throw Swf1Error("bad center line");
        hd.center = {std::stod(t[1]), std::stod(t[2])};
    }
    {
        auto t = tokens(next_line(is, "components"));
        if (t.size() != 2 || t[0] != "components") throw Swf1Error("bad components line");
        hd.components = std::stoi(t[1]);
        if (hd.components < 1) throw Swf1Error("component count must be positive");
    }
    if (next_line(is, "encoding") != "encoding f64le") throw Swf1Error("bad encoding line");
    if (next_line(is, "data") != "data") throw Swf1Error("bad data line");
    return hd;
}

inline std::vector<double> read_payload(std::istream& is, std::size_t count) {
    std::vector<double> data(count);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != count * sizeof(double))
        throw Swf1Error("truncated payload");
    return data;
}

}  // namespace swf1_detail

inline void write_swf1(std::ostream& os, const FieldBundle2& b) {
    using swf1_detail::fmt17;
    os << "SWF1\n"
       << "kind grid2\n"
       << "dims " << b.grid.nx() << ' ' << b.grid.ny() << '\n'
       << "h " << fmt17(b.grid.h()) << '\n'
       << "center " << fmt17(b.grid.center().real()) << ' ' << fmt17(b.grid.center().imag())
       << '\n'
       << "components " << b.components << '\n'
       << "encoding f64le\n"
       << "data\n";
    swf1_detail::write_payload(os, b.data);
}

inline void write_swf1(std::ostream& os, const FieldBundle3& b) {
    using swf1_detail::fmt17;
    os << "SWF1\n"
       << "kind grid3\n"
       << "dims " << b.grid.nx() << ' ' << b.grid.ny() << ' ' << b.grid.nz() << '\n'
       << "h " << fmt17(b.grid.h()) << '\n'
       << "center " << fmt17(b.grid.center().real()) << ' ' << fmt17(b.grid.center().imag())
       << '\n'
       << "components " << b.components << '\n'
       << "encoding f64le\n"
       << "data\n";
    swf1_detail::write_payload(os, b.data);
}

template <typename Bundle>
void write_swf1_file(const std::string& path, const Bundle& b) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Swf1Error("cannot open for writing: " + path);
    write_swf1(os, b);
    if (!os) throw Swf1Error("write failure: " + path);
}

inline bool swf1_is_3d(std::istream& is) {
    const auto pos = is.tellg();
    auto hd = swf1_detail::read_header(is);
    is.seekg(pos);
    return hd.is3d;
}

inline FieldBundle2 read_swf1_2d(std::istream& is) {
    auto hd = swf1_detail::read_header(is);
    if (hd.is3d) throw Swf1Error("expected grid2 file, found grid3");
    Grid2 g(hd.nx, hd.ny, hd.h, hd.center);
    auto data = swf1_detail::read_payload(is, g.size() * hd.components);
    return {g, hd.components, std::move(data)};
}

inline FieldBundle3 read_swf1_3d(std::istream& is) {
    auto hd = swf1_detail::read_header(is);
    if (!hd.is3d) throw Swf1Error("expected grid3 file, found grid2");
    Grid3 g(hd.nx, hd.ny, hd.nz, hd.h, hd.center);
    auto data = swf1_detail::read_payload(is, g.size() * hd.components);
    return {g, hd.components, std::move(data)};
}

inline FieldBundle2 read_swf1_2d_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Swf1Error("cannot open: " + path);
    return read_swf1_2d(is);
}

inline FieldBundle3 read_swf1_3d_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Swf1Error("cannot open: " + path);
    return read_swf1_3d(is);
}

}  // namespace swlab
