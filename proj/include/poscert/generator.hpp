#pragma once

#include "poscert/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace poscert {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Square sparse matrix (CSR) standing in for the generator A.
/// Immutable after construction; duplicate triplets are summed and explicit
/// zeros dropped. The Metzler flag is computed exactly on the stored entries.
class GeneratorMatrix {
public:
    GeneratorMatrix() = default;

    GeneratorMatrix(std::size_t dim, std::vector<Triplet> triplets) : dim_(dim) {
        for (const auto& t : triplets) {
            if (t.row >= dim || t.col >= dim) throw StructuralError("generator entry outside the matrix");
            if (!std::isfinite(t.value)) throw StructuralError("generator entry is not finite");
        }
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        row_ptr_.assign(dim + 1, 0);
        for (std::size_t k = 0; k < triplets.size();) {
            const std::size_t r = triplets[k].row, c = triplets[k].col;
            double v = 0.0;
            while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) v += triplets[k++].value;
            if (v == 0.0) continue;
            cols_.push_back(c);
            values_.push_back(v);
            ++row_ptr_[r + 1];
        }
        for (std::size_t r = 0; r < dim; ++r) row_ptr_[r + 1] += row_ptr_[r];
        metzler_ = true;
        std::vector<double> diag(dim, 0.0);
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                if (cols_[k] == r)
                    diag[r] = values_[k];
                else if (values_[k] < 0.0)
                    metzler_ = false;
            }
        // s = max(0, -min diag) makes A + sI entrywise nonnegative when A is Metzler.
        for (double d : diag) shift_ = std::max(shift_, -d);
        std::vector<double> colsum(dim, 0.0);
        for (std::size_t r = 0; r < dim; ++r) {
            colsum[r] += std::abs(diag[r] + shift_);
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                if (cols_[k] != r) colsum[cols_[k]] += std::abs(values_[k]);
        }
        for (double c : colsum) shifted_norm1_ = std::max(shifted_norm1_, c);
    }

    static GeneratorMatrix zero(std::size_t dim) { return GeneratorMatrix(dim, {}); }

    static GeneratorMatrix from_dense(const std::vector<std::vector<double>>& rows) {
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size()) throw StructuralError("generator must be square");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                if (rows[i][j] != 0.0) t.push_back({i, j, rows[i][j]});
        }
        return GeneratorMatrix(rows.size(), std::move(t));
    }

    std::size_t dimension() const { return dim_; }
    std::size_t nonzeros() const { return values_.size(); }
    bool metzler_verified() const { return metzler_; }
    /// s = max(0, -min_i A_ii)
    double uniformization_shift() const { return shift_; }
    /// ||A + sI||_1
    double shifted_norm1() const { return shifted_norm1_; }

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> cols() const { return cols_; }
    std::span<const double> values() const { return values_; }

    double at(std::size_t r, std::size_t c) const {
        for (std::size_t k = row_ptr_.at(r); k < row_ptr_[r + 1]; ++k)
            if (cols_[k] == c) return values_[k];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(dim_, 0.0);
        for (std::size_t r = 0; r < dim_; ++r) d[r] = at(r, r);
        return d;
    }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t r = 0; r < dim_; ++r) {
            double s = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[cols_[k]];
            y[r] = s;
        }
    }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> out;
        out.reserve(values_.size());
        for (std::size_t r = 0; r < dim_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, cols_[k], values_[k]});
        return out;
    }

    /// Returns A + shift * I.
    GeneratorMatrix shifted(double shift) const {
        auto t = triplets();
        for (std::size_t r = 0; r < dim_; ++r) t.push_back({r, r, shift});
        return GeneratorMatrix(dim_, std::move(t));
    }

private:
    std::size_t dim_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
    bool metzler_ = true;
    double shift_ = 0.0;
    double shifted_norm1_ = 0.0;
};

/// True iff every stored off-diagonal entry is nonnegative (no tolerance).
inline bool is_metzler(const GeneratorMatrix& a) { return a.metzler_verified(); }

// MatrixMarket coordinate format, real general, 1-based indices.

inline void write_matrix_market(std::ostream& os, const GeneratorMatrix& a) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.dimension() << ' ' << a.dimension() << ' ' << a.nonzeros() << '\n';
    char buf[64];
    for (const auto& t : a.triplets()) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t.value);
        os << t.row + 1 << ' ' << t.col + 1 << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
    }
}

inline GeneratorMatrix read_matrix_market(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw StructuralError("MatrixMarket: missing banner");
    if (line.find("coordinate") == std::string::npos || line.find("real") == std::string::npos)
        throw StructuralError("MatrixMarket: only 'coordinate real' matrices are supported");
    while (std::getline(is, line) && (line.empty() || line[0] == '%')) {}
    std::istringstream head(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(head >> rows >> cols >> nnz) || rows != cols) throw StructuralError("MatrixMarket: bad size line");
    std::vector<Triplet> t;
    t.reserve(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        std::size_t r = 0, c = 0;
        double v = 0.0;
        if (!(is >> r >> c >> v) || r == 0 || c == 0) throw StructuralError("MatrixMarket: truncated entry list");
        t.push_back({r - 1, c - 1, v});
    }
    return GeneratorMatrix(rows, std::move(t));
}

}  // namespace poscert
