#include "garchx/io.hpp"

#include "garchx/errors.hpp"
#include "garchx/model.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace garchx::io {

KeyValues read_key_values(std::istream& in) {
    CLI::ConfigINI parser;
    KeyValues out;
    for (const auto& item : parser.from_config(in)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        std::string value;
        for (std::size_t i = 0; i < item.inputs.size(); ++i) {
            if (i) value += ",";
            value += item.inputs[i];
        }
        out[item.fullname()] = value;
    }
    return out;
}

KeyValues read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file: " + path);
    return read_key_values(in);
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw DomainError("config key '" + key + "' is not a number: " + it->second);
    }
}

long long get_int(const KeyValues& kv, const std::string& key, long long fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw DomainError("config key '" + key + "' is not an integer: " + it->second);
    }
}

std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

std::vector<double> linear_grid(double start, double step, double stop) {
    if (!(step > 0.0) || stop < start) throw DomainError("linear_grid: need step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i) {
        // round to 12 significant decimals so 0.1 * 3 prints and compares as 0.3
        g[i] = std::round((start + step * static_cast<double>(i)) * 1e12) / 1e12;
    }
    return g;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::string cleaned = text;
    for (char& c : cleaned) {
        if (c == ',' || c == '[' || c == ']' || c == '"') c = ' ';
    }
    std::istringstream in(cleaned);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        const auto c1 = tok.find(':');
        try {
            if (c1 != std::string::npos) {
                const auto c2 = tok.find(':', c1 + 1);
                if (c2 == std::string::npos) throw std::invalid_argument(tok);
                const double a = std::stod(tok.substr(0, c1));
                const double s = std::stod(tok.substr(c1 + 1, c2 - c1 - 1));
                const double b = std::stod(tok.substr(c2 + 1));
                for (double v : linear_grid(a, s, b)) out.push_back(v);
            } else {
                out.push_back(std::stod(tok));
            }
        } catch (const DomainError&) {
            throw;
        } catch (const std::exception&) {
            throw DomainError("cannot parse number list entry: " + tok);
        }
    }
    return out;
}

std::vector<double> get_doubles(const KeyValues& kv, const std::string& key,
                                const std::vector<double>& fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    return parse_doubles(it->second);
}

}  // namespace garchx::io

namespace garchx::model {

void write_csv(std::ostream& out, const Dataset& data) {
    out << "t,y,x\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << 0 << ',' << data.y0 << ',' << data.x0 << '\n';
    for (std::size_t t = 0; t < data.size(); ++t) {
        out << (t + 1) << ',' << data.y[t] << ',' << data.x[t] << '\n';
    }
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("read_csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,y,x") throw DomainError("read_csv: expected header 't,y,x', got '" + line + "'");
    Dataset d;
    bool have_pre = false;
    long long expected = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string ts, ys, xs;
        if (!std::getline(row, ts, ',') || !std::getline(row, ys, ',') || !std::getline(row, xs)) {
            throw DomainError("read_csv: malformed row '" + line + "'");
        }
        long long t = 0;
        double y = 0.0, x = 0.0;
        try {
            t = std::stoll(ts);
            y = std::stod(ys);
            x = std::stod(xs);
        } catch (const std::exception&) {
            throw DomainError("read_csv: malformed row '" + line + "'");
        }
        if (expected < 0) {
            expected = t;
            if (t != 0 && t != 1) throw DomainError("read_csv: rows must start at t = 0 or 1");
        }
        if (t != expected) throw DomainError("read_csv: rows must be consecutive in t");
        ++expected;
        if (t == 0) {
            d.y0 = y;
            d.x0 = x;
            have_pre = true;
        } else {
            d.y.push_back(y);
            d.x.push_back(x);
        }
    }
    (void)have_pre;  // without a t = 0 row the presample defaults to zero starts
    d.validate();
    return d;
}

TrueConfig read_true_config(std::istream& in) {
    const auto kv = io::read_key_values(in);
    TrueConfig c;
    c.theta.beta1 = io::get_double(kv, "beta1", 0.0);
    c.theta.beta2 = io::get_double(kv, "beta2", 0.0);
    c.theta.zeta = io::get_double(kv, "zeta", 1.0);
    c.theta.pi = io::get_double(kv, "pi", 0.0);
    c.varphi = io::get_double(kv, "varphi", 0.0);
    c.kappa = io::get_double(kv, "kappa", 0.0);
    c.validate();
    return c;
}

void write_true_config(std::ostream& out, const TrueConfig& c) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "beta1 = " << c.theta.beta1 << '\n'
        << "beta2 = " << c.theta.beta2 << '\n'
        << "zeta = " << c.theta.zeta << '\n'
        << "pi = " << c.theta.pi << '\n'
        << "varphi = " << c.varphi << '\n'
        << "kappa = " << c.kappa << '\n';
}

}  // namespace garchx::model
