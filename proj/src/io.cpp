#include "qcens/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "qcens/errors.hpp"

namespace qcens::io {

using nlohmann::json;

namespace {

json grid_to_json(const Grid& g) {
    json axes = json::array();
    for (const Axis& a : g.axes()) {
        axes.push_back({{"name", a.name},
                        {"min", a.min},
                        {"max", a.max},
                        {"points", a.points},
                        {"boundary", a.boundary == Boundary::periodic ? "periodic" : "clamped"}});
    }
    return axes;
}

Grid grid_from_json(const json& axes) {
    std::vector<Axis> out;
    for (const auto& a : axes) {
        Boundary b = a.at("boundary").get<std::string>() == "clamped" ? Boundary::clamped
                                                                      : Boundary::periodic;
        out.push_back(Axis{a.at("name").get<std::string>(), a.at("min").get<double>(),
                           a.at("max").get<double>(), a.at("points").get<int>(), b});
    }
    return Grid(out);
}

}  // namespace

std::string field_to_json(const RealField& f, const std::string& label) {
    json j{{"schema_version", schema_version},
           {"kind", "real"},
           {"label", label},
           {"axes", grid_to_json(f.grid)},
           {"values", f.values}};
    return j.dump();
}

std::string field_to_json(const ComplexField& f, const std::string& label) {
    json values = json::array();
    for (const auto& v : f.values) values.push_back({v.real(), v.imag()});
    json j{{"schema_version", schema_version},
           {"kind", "complex"},
           {"label", label},
           {"axes", grid_to_json(f.grid)},
           {"values", std::move(values)}};
    return j.dump();
}

RealField real_field_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("kind").get<std::string>() != "real") throw ConfigError("snapshot is not a real field");
    RealField f(grid_from_json(j.at("axes")));
    const auto& vals = j.at("values");
    if (vals.size() != f.size()) throw ConfigError("snapshot value count mismatch");
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = vals[i].get<double>();
    return f;
}

ComplexField complex_field_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("kind").get<std::string>() != "complex")
        throw ConfigError("snapshot is not a complex field");
    ComplexField f(grid_from_json(j.at("axes")));
    const auto& vals = j.at("values");
    if (vals.size() != f.size()) throw ConfigError("snapshot value count mismatch");
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = {vals[i][0].get<double>(), vals[i][1].get<double>()};
    return f;
}

std::string format_double(double v) {
    // shortest form that round-trips exactly
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

namespace {
template <class T, class WriteValue>
void csv_impl(const Field<T>& f, std::ostream& os, const char* value_header, WriteValue&& wv) {
    for (const Axis& a : f.grid.axes()) os << a.name << ",";
    os << value_header << "\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (int a = 0; a < f.grid.rank(); ++a) os << format_double(f.grid.coord(i, a)) << ",";
        wv(os, f[i]);
        os << "\n";
    }
}
}  // namespace

void field_to_csv(const RealField& f, std::ostream& os) {
    csv_impl(f, os, "value", [](std::ostream& o, double v) { o << format_double(v); });
}

void field_to_csv(const ComplexField& f, std::ostream& os) {
    csv_impl(f, os, "re,im", [](std::ostream& o, const std::complex<double>& v) {
        o << format_double(v.real()) << "," << format_double(v.imag());
    });
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for writing: " + path);
    os << content;
    if (!os) throw Error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace qcens::io
