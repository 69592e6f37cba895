/*
Copyright 2026 The Karte Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "../error.hpp"
#include "../text/charvocab.hpp"
#include "../text/utf8.hpp"

namespace karte {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
    fail(ErrorCode::Format, "trace line " + std::to_string(line_no) + ": " + what);
}

std::size_t parse_count(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        bad_line(line_no, "expected a non-negative integer, got '" + s + "'");
    }
}

bool valid_label(const std::string& label) {
    if (label == "<end>" || label == "<pad>" || label == "<start>" || label == "<unk>") return true;
    if (label.size() < 6 || label.rfind("U+", 0) != 0) return false;
    return label.find_first_not_of("0123456789ABCDEF", 2) == std::string::npos;
}

} // namespace

std::string token_label(char32_t cp) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
    return buf;
}

void AttentionTrace::validate(double tol) const {
    if (tokens.size() != weights.size())
        fail(ErrorCode::State, "trace: " + std::to_string(tokens.size()) + " tokens for " +
                                   std::to_string(weights.size()) + " steps");
    for (std::size_t t = 0; t < weights.size(); ++t) {
        if (weights[t].size() != positions())
            fail(ErrorCode::State, "trace: row " + std::to_string(t) + " has " + std::to_string(weights[t].size()) +
                                       " weights, expected " + std::to_string(positions()));
        double sum = 0.0;
        for (double w : weights[t]) {
            if (!(w >= 0.0)) fail(ErrorCode::State, "trace: negative or NaN weight in row " + std::to_string(t));
            sum += w;
        }
        if (std::abs(sum - 1.0) > tol)
            fail(ErrorCode::State, "trace: row " + std::to_string(t) + " sums to " + std::to_string(sum));
    }
}

std::string format_trace(const AttentionTrace& trace) {
    trace.validate();
    std::ostringstream os;
    os << "karte-trace 1\n"
       << "steps\t" << trace.steps() << '\n'
       << "positions\t" << trace.positions() << '\n'
       << "grid\t" << trace.grid_h << '\t' << trace.grid_w << '\n'
       << "tokens";
    for (const auto& t : trace.tokens) os << '\t' << t;
    os << '\n';
    char buf[40];
    for (const auto& row : trace.weights) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            if (i) os << '\t';
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

AttentionTrace parse_trace(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto next = [&](const char* what) -> std::string {
        if (!std::getline(in, line)) bad_line(line_no + 1, std::string("missing ") + what);
        ++line_no;
        return line;
    };

    if (next("header") != "karte-trace 1") bad_line(line_no, "bad header");
    auto f = split_tabs(next("steps"));
    if (f.size() != 2 || f[0] != "steps") bad_line(line_no, "expected steps<TAB>T");
    const std::size_t steps = parse_count(f[1], line_no);
    f = split_tabs(next("positions"));
    if (f.size() != 2 || f[0] != "positions") bad_line(line_no, "expected positions<TAB>L");
    const std::size_t positions = parse_count(f[1], line_no);
    f = split_tabs(next("grid"));
    if (f.size() != 3 || f[0] != "grid") bad_line(line_no, "expected grid<TAB>h<TAB>w");
    AttentionTrace trace;
    trace.grid_h = parse_count(f[1], line_no);
    trace.grid_w = parse_count(f[2], line_no);
    if (trace.grid_h * trace.grid_w != positions) bad_line(line_no, "grid dims do not multiply to L");
    f = split_tabs(next("tokens"));
    if (f.empty() || f[0] != "tokens" || f.size() != steps + 1) bad_line(line_no, "expected tokens line with T labels");
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (!valid_label(f[i])) bad_line(line_no, "bad token label '" + f[i] + "'");
        trace.tokens.push_back(f[i]);
    }
    for (std::size_t t = 0; t < steps; ++t) {
        f = split_tabs(next("weight row"));
        if (f.size() != positions) bad_line(line_no, "expected " + std::to_string(positions) + " weights");
        std::vector<double> row(positions);
        double sum = 0.0;
        for (std::size_t i = 0; i < positions; ++i) {
            char* end = nullptr;
            row[i] = std::strtod(f[i].c_str(), &end);
            if (f[i].empty() || *end != '\0' || !std::isfinite(row[i]) || row[i] < 0.0)
                bad_line(line_no, "bad weight '" + f[i] + "'");
            sum += row[i];
        }
        if (std::abs(sum - 1.0) > 1e-6)
            fail(ErrorCode::State, "trace line " + std::to_string(line_no) + ": row sums to " + std::to_string(sum) +
                                       ", violating the unit-sum invariant");
        trace.weights.push_back(std::move(row));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty()) bad_line(line_no, "unexpected trailing content");
    }
    return trace;
}

void write_trace(const AttentionTrace& trace, const std::filesystem::path& path) {
    const auto text = format_trace(trace);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write trace: " + path.string());
    out << text;
}

AttentionTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open trace: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_trace(text);
}

} // namespace karte
