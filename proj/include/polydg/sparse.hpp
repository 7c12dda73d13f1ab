#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polydg/errors.hpp"

namespace polydg {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    Complex value;
};

/// Square complex matrix in compressed-row storage with sorted, unique columns per row.
class SparseComplexMatrix {
public:
    SparseComplexMatrix() = default;
    explicit SparseComplexMatrix(std::size_t n) : n_(n), row_ptr_(n + 1, 0) {}

    /// Duplicate entries are summed.
    static SparseComplexMatrix from_triplets(std::size_t n, std::span<const Triplet> entries)
    {
        SparseComplexMatrix m(n);
        for (const Triplet& t : entries) {
            if (t.row >= n || t.col >= n)
                throw InvalidParameter("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                       ") outside a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
            ++m.row_ptr_[t.row + 1];
        }
        for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
        std::vector<std::size_t> cols(entries.size());
        std::vector<Complex> vals(entries.size());
        std::vector<std::size_t> next(m.row_ptr_.begin(), m.row_ptr_.end() - 1);
        for (const Triplet& t : entries) {
            cols[next[t.row]] = t.col;
            vals[next[t.row]] = t.value;
            ++next[t.row];
        }
        // sort each row by column (stable, so duplicates sum in input order) and merge
        std::vector<std::size_t> new_ptr(n + 1, 0);
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = m.row_ptr_[i], hi = m.row_ptr_[i + 1];
            order.resize(hi - lo);
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = lo + k;
            std::stable_sort(order.begin(), order.end(), [&cols](std::size_t a, std::size_t b) { return cols[a] < cols[b]; });
            for (std::size_t k : order) {
                if (m.cols_.size() > new_ptr[i] && m.cols_.back() == cols[k]) {
                    m.vals_.back() += vals[k];
                } else {
                    m.cols_.push_back(cols[k]);
                    m.vals_.push_back(vals[k]);
                }
            }
            new_ptr[i + 1] = m.cols_.size();
        }
        m.row_ptr_ = std::move(new_ptr);
        return m;
    }

    std::size_t size() const { return n_; }
    std::size_t nonzeros() const { return vals_.size(); }

    const std::vector<std::size_t>& row_offsets() const { return row_ptr_; }
    const std::vector<std::size_t>& column_indices() const { return cols_; }
    const std::vector<Complex>& values() const { return vals_; }
    std::vector<Complex>& values() { return vals_; }

    /// Entry (i, j), zero when not stored.
    Complex at(std::size_t i, std::size_t j) const
    {
        const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        const auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return {};
        return vals_[static_cast<std::size_t>(it - cols_.begin())];
    }

    void multiply(const ComplexVector& x, ComplexVector& y) const
    {
        y.resize(static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            Complex s{};
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[static_cast<Eigen::Index>(cols_[k])];
            y[static_cast<Eigen::Index>(i)] = s;
        }
    }

    ComplexVector operator*(const ComplexVector& x) const
    {
        ComplexVector y;
        multiply(x, y);
        return y;
    }

    Eigen::MatrixXcd to_dense() const
    {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols_[k])) += vals_[k];
        return d;
    }

    /// max |A_ij - conj(A_ji)|
    double hermitian_defect() const { return defect(true); }
    /// max |A_ij - A_ji|
    double symmetry_defect() const { return defect(false); }

    double max_abs() const
    {
        double m = 0.0;
        for (const Complex& v : vals_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Coordinate text format: a "% n nnz" header, then one "row col (re,im)" line per entry.
    void write_triplets(std::ostream& out) const
    {
        out << "% " << n_ << ' ' << nonzeros() << '\n' << std::setprecision(17);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                out << i << ' ' << cols_[k] << " (" << vals_[k].real() << ',' << vals_[k].imag() << ")\n";
    }

    /// this += c * B, where the pattern of B must be contained in the pattern of this.
    void add_scaled(const SparseComplexMatrix& B, Complex c)
    {
        if (B.size() != n_) throw InvalidParameter("add_scaled: dimension mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t k = row_ptr_[i];
            for (std::size_t kb = B.row_ptr_[i]; kb < B.row_ptr_[i + 1]; ++kb) {
                while (k < row_ptr_[i + 1] && cols_[k] < B.cols_[kb]) ++k;
                if (k == row_ptr_[i + 1] || cols_[k] != B.cols_[kb])
                    throw InvalidParameter("add_scaled: entry (" + std::to_string(i) + "," + std::to_string(B.cols_[kb]) +
                                           ") outside the target pattern");
                vals_[k] += c * B.vals_[kb];
            }
        }
    }

private:
    double defect(bool conjugate) const
    {
        double d = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                const Complex t = at(cols_[k], i);
                d = std::max(d, std::abs(vals_[k] - (conjugate ? std::conj(t) : t)));
            }
        return d;
    }

    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<Complex> vals_;
};

/// sum_m coeffs[m] * mats[m], merged row by row over the union of the sparsity patterns.
inline SparseComplexMatrix linear_combination(std::span<const Complex> coeffs,
                                              std::span<const SparseComplexMatrix* const> mats)
{
    if (coeffs.size() != mats.size() || mats.empty())
        throw InvalidParameter("linear_combination needs one coefficient per matrix");
    const std::size_t n = mats[0]->size();
    for (const auto* m : mats)
        if (m->size() != n) throw InvalidParameter("linear_combination: dimension mismatch");
    std::vector<Triplet> entries;
    std::size_t total = 0;
    for (const auto* m : mats) total += m->nonzeros();
    entries.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < mats.size(); ++m) {
            const auto& A = *mats[m];
            for (std::size_t k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k)
                entries.push_back({i, A.column_indices()[k], coeffs[m] * A.values()[k]});
        }
    return SparseComplexMatrix::from_triplets(n, entries);
}

inline SparseComplexMatrix linear_combination(std::initializer_list<Complex> coeffs,
                                              std::initializer_list<const SparseComplexMatrix*> mats)
{
    return linear_combination(std::span<const Complex>(coeffs.begin(), coeffs.size()),
                              std::span<const SparseComplexMatrix* const>(mats.begin(), mats.size()));
}

} // namespace polydg
