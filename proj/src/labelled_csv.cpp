#include "sbr/labelled_csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "sbr/errors.hpp"

namespace sbr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    return out;
}

double parse_real(std::string_view s, std::size_t lineno, const char* col) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(lineno, std::string("bad value in column ") + col);
    return v;
}

int parse_bit(std::string_view s, std::size_t lineno, const char* col) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw ParseError(lineno, std::string("column ") + col + " must be 0 or 1");
}

}  // namespace

LabelledTable read_labelled_csv(std::istream& in) {
    LabelledTable t;
    std::string line;
    std::size_t lineno = 0;
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t cx = npos, cu = npos, cs = npos, cr = npos, width = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const auto f = fields(sv);
        if (!have_header) {
            for (std::size_t i = 0; i < f.size(); ++i) {
                if (f[i] == "x") cx = i;
                else if (f[i] == "u") cu = i;
                else if (f[i] == "s") cs = i;
                else if (f[i] == "x_repaired") cr = i;
            }
            for (auto [c, name] : {std::pair{cx, "x"}, std::pair{cu, "u"}, std::pair{cs, "s"}})
                if (c == npos) throw SchemaError(std::string("labelled CSV has no '") + name + "' column");
            width = f.size();
            have_header = true;
            if (cr != npos) t.repaired.emplace();
            continue;
        }
        if (f.size() != width) throw ParseError(lineno, "expected " + std::to_string(width) + " fields");
        t.rows.push_back({parse_real(f[cx], lineno, "x"), parse_bit(f[cu], lineno, "u"), parse_bit(f[cs], lineno, "s")});
        if (cr != npos) t.repaired->push_back(parse_real(f[cr], lineno, "x_repaired"));
    }
    if (!have_header) throw SchemaError("labelled CSV has no header row");
    return t;
}

LabelledTable read_labelled_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_labelled_csv(in);
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

void write_labelled_csv(std::ostream& out, const std::vector<LabelledDatum>& rows, const std::vector<double>* repaired,
                        const std::vector<std::string>& comments) {
    if (repaired && repaired->size() != rows.size()) throw InternalError("repaired column length mismatch");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << (repaired ? "x,u,s,x_repaired\n" : "x,u,s\n");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << format_double(rows[i].x) << ',' << rows[i].u << ',' << rows[i].s;
        if (repaired) out << ',' << format_double((*repaired)[i]);
        out << '\n';
    }
}

}  // namespace sbr
