#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergolab {

// Input problems: a config file or JSON payload that cannot be used as given.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

// Structural problems with data passed between modules (bad table, empty batch, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error("data error: " + msg) {}
};

// A numeric argument outside its documented domain.
struct ParamError : std::invalid_argument {
    explicit ParamError(const std::string& msg) : std::invalid_argument("parameter error: " + msg) {}
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ParamError(msg);
}

// Evaluate sum_k c[k] x^k by Horner's rule.
inline double polyval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

// Coefficients of d/dx of a polynomial in ascending order.
inline std::vector<double> polyder(const std::vector<double>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> d(c.size() - 1);
    for (size_t k = 1; k < c.size(); ++k) d[k - 1] = double(k) * c[k];
    return d;
}

// Composite Simpson on a uniform grid; n must be odd (even number of cells).
template <class F>
double simpson(F&& f, double a, double b, int n) {
    if (n < 3) throw ParamError("simpson: need at least 3 nodes");
    if (n % 2 == 0) ++n;
    const double h = (b - a) / (n - 1);
    double s = f(a) + f(b);
    for (int i = 1; i + 1 < n; ++i) s += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Trapezoid cumulative integral of tabulated values; out[0] = 0.
inline std::vector<double> cumtrapz(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("cumtrapz: bad table");
    std::vector<double> out(x.size(), 0.0);
    for (size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return out;
}

struct MeanVar {
    long n = 0;
    double mean = 0.0, m2 = 0.0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / double(n);
        m2 += d * (v - mean);
    }
    double var() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double se() const { return n > 1 ? std::sqrt(var() / double(n)) : 0.0; }
};

inline std::vector<double> linspace(double a, double b, int n) {
    require(n >= 2, "linspace: n >= 2");
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * double(i) / double(n - 1);
    v.back() = b;
    return v;
}

}  // namespace ergolab
