#pragma once

// Reference computations for tests and benchmarks. Nothing here calls into the
// production semigroup or solver code.

#include "poscert/error.hpp"
#include "poscert/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace poscert::oracle {

class OracleDivergence : public Error {
public:
    OracleDivergence(const std::string& what, double t) : Error(what), time_(t) {}
    const char* kind() const noexcept override { return "oracle_divergence"; }
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Row-major dense square matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix from(const GeneratorMatrix& g) {
        DenseMatrix m(g.dimension());
        for (const auto& t : g.triplets()) m(t.row, t.col) += t.value;
        return m;
    }

    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        DenseMatrix m(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i].at(j);
        return m;
    }

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    friend DenseMatrix operator*(const DenseMatrix& x, const DenseMatrix& y) {
        DenseMatrix z(x.n_);
        for (std::size_t i = 0; i < x.n_; ++i)
            for (std::size_t k = 0; k < x.n_; ++k) {
                const double xik = x(i, k);
                if (xik == 0.0) continue;
                for (std::size_t j = 0; j < x.n_; ++j) z(i, j) += xik * y(k, j);
            }
        return z;
    }

    friend DenseMatrix operator+(DenseMatrix x, const DenseMatrix& y) {
        for (std::size_t k = 0; k < x.a_.size(); ++k) x.a_[k] += y.a_[k];
        return x;
    }

    friend DenseMatrix operator-(DenseMatrix x, const DenseMatrix& y) {
        for (std::size_t k = 0; k < x.a_.size(); ++k) x.a_[k] -= y.a_[k];
        return x;
    }

    friend DenseMatrix operator*(double s, DenseMatrix x) {
        for (double& v : x.a_) v *= s;
        return x;
    }

    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
            out[i] = s;
        }
        return out;
    }

    double norm1() const {
        double best = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    double max_abs() const {
        double best = 0.0;
        for (double v : a_) best = std::max(best, std::abs(v));
        return best;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// Solves P X = Q by Gaussian elimination with partial pivoting.
inline DenseMatrix solve(DenseMatrix p, DenseMatrix q) {
    const std::size_t n = p.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(p(r, col)) > std::abs(p(piv, col))) piv = r;
        if (p(piv, col) == 0.0) throw OracleDivergence("dense solve: singular Pade denominator", 0.0);
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(p(col, j), p(piv, j));
                std::swap(q(col, j), q(piv, j));
            }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = p(r, col) / p(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) p(r, j) -= f * p(col, j);
            for (std::size_t j = 0; j < n; ++j) q(r, j) -= f * q(col, j);
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = q(c, j);
            for (std::size_t k = c + 1; k < n; ++k) s -= p(c, k) * q(k, j);
            q(c, j) = s / p(c, c);
        }
    }
    return q;
}

inline constexpr std::size_t kDenseExpmMaxDim = 500;

/// Matrix exponential by scaling and squaring around a [13/13] Pade
/// approximant (Higham 2005 coefficients and theta_13).
inline DenseMatrix dense_expm(const DenseMatrix& a) {
    const std::size_t n = a.size();
    if (n > kDenseExpmMaxDim) throw DomainError("dense_expm refuses dimensions above 500");
    constexpr std::array<double, 14> b{64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                       1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                       670442572800.0,      33522128640.0,       1323241920.0,
                                       40840800.0,          960960.0,            16380.0,
                                       182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double nrm = a.norm1();
    int s = 0;
    if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    const DenseMatrix x = std::ldexp(1.0, -s) * a;
    const DenseMatrix id = DenseMatrix::identity(n);
    const DenseMatrix x2 = x * x, x4 = x2 * x2, x6 = x4 * x2;

    const DenseMatrix u_inner = b[13] * x6 + b[11] * x4 + b[9] * x2;
    const DenseMatrix u = x * (x6 * u_inner + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
    const DenseMatrix v_inner = b[12] * x6 + b[10] * x4 + b[8] * x2;
    const DenseMatrix v = x6 * v_inner + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    DenseMatrix r = solve(v - u, v + u);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

inline DenseMatrix dense_expm(const GeneratorMatrix& a) { return dense_expm(DenseMatrix::from(a)); }

using State = std::vector<double>;

/// Classical four-stage explicit Runge-Kutta. Returns the states at
/// t = 0, step, 2 step, ..., with a final partial step landing on `horizon`.
template <class Rhs>
std::vector<State> rk4_solve(Rhs&& rhs, State y0, double step, double horizon) {
    if (!(step > 0.0)) throw DomainError("rk4 step must be positive");
    std::vector<State> out{y0};
    const std::size_t n = y0.size();
    State y = std::move(y0), k1, k2, k3, k4, tmp(n);
    double t = 0.0;
    while (t < horizon - 1e-12 * std::max(1.0, horizon)) {
        const double h = std::min(step, horizon - t);
        k1 = rhs(y, t);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        k2 = rhs(tmp, t + 0.5 * h);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        k3 = rhs(tmp, t + 0.5 * h);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        k4 = rhs(tmp, t + h);
        for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;
        for (double v : y)
            if (!std::isfinite(v)) throw OracleDivergence("rk4 state became non-finite", t);
        out.push_back(y);
    }
    return out;
}

/// Same as rk4_solve but only the final state.
template <class Rhs>
State rk4_final(Rhs&& rhs, State y0, double step, double horizon) {
    auto path = rk4_solve(std::forward<Rhs>(rhs), std::move(y0), step, horizon);
    return path.back();
}

// Closed forms.

/// y' = g - mu y
inline double linear_relax(double g, double mu, double y0, double t) {
    return g / mu + (y0 - g / mu) * std::exp(-mu * t);
}

/// y' = r y (1 - y / K)
inline double logistic(double r, double k, double y0, double t) {
    return k / (1.0 + (k / y0 - 1.0) * std::exp(-r * t));
}

/// y' = y^2
inline double blow_up_square(double y0, double t) {
    if (t >= 1.0 / y0) throw DomainError("blow_up_square: t is at or beyond the blow-up time");
    return 1.0 / (1.0 / y0 - t);
}

}  // namespace poscert::oracle
