#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "polydg/sparse.hpp"

namespace polydg {

/// block_jacobi inverts per-cell diagonal blocks; ilu0 is an incomplete LU without fill;
/// lu is a complete sparse LU, intended to be built once from a frozen matrix and reused
/// while the system matrix drifts (the weighted mass changes every step).
enum class PreconditionerKind { block_jacobi, ilu0, lu };

inline PreconditionerKind parse_preconditioner(const std::string& s)
{
    if (s == "block_jacobi") return PreconditionerKind::block_jacobi;
    if (s == "ilu0") return PreconditionerKind::ilu0;
    if (s == "lu") return PreconditionerKind::lu;
    throw InvalidParameter("unknown preconditioner '" + s + "' (use block_jacobi, ilu0 or lu)");
}

inline std::string to_string(PreconditionerKind k)
{
    return k == PreconditionerKind::block_jacobi ? "block_jacobi" : k == PreconditionerKind::ilu0 ? "ilu0" : "lu";
}

struct SolverOptions {
    PreconditionerKind preconditioner = PreconditionerKind::lu;
    double tol = 1e-10;        ///< relative residual ||A x - b|| / ||b||
    int max_iters = 2000;      ///< total inner iterations over all restarts
    int restart = 60;
    std::size_t block_size = 1; ///< block-Jacobi block size (DoFs per cell)
    bool dense = false;         ///< bypass the iterative method with a dense LU
};

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, SolveReport report) : std::runtime_error(what), report_(report) {}
    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

struct SolveResult {
    ComplexVector x;
    SolveReport report;
};

/// z = P^{-1} r for some approximation P of the system matrix.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual void apply(const ComplexVector& r, ComplexVector& z) const = 0;
};

/// Inverts the diagonal blocks [s*b, min(n, s*(b+1))) of a sparse matrix.
class BlockJacobi : public Preconditioner {
public:
    BlockJacobi(const SparseComplexMatrix& A, std::size_t block_size) : block_(std::max<std::size_t>(block_size, 1))
    {
        const std::size_t n = A.size();
        for (std::size_t start = 0; start < n; start += block_) {
            const std::size_t len = std::min(block_, n - start);
            Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(len));
            for (std::size_t i = start; i < start + len; ++i)
                for (std::size_t k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k) {
                    const std::size_t j = A.column_indices()[k];
                    if (j >= start && j < start + len)
                        d(static_cast<Eigen::Index>(i - start), static_cast<Eigen::Index>(j - start)) = A.values()[k];
                }
            inverses_.push_back(d.fullPivLu().isInvertible() ? Eigen::MatrixXcd(d.inverse())
                                                              : Eigen::MatrixXcd::Identity(d.rows(), d.cols()));
        }
    }

    void apply(const ComplexVector& r, ComplexVector& z) const override
    {
        z.resize(r.size());
        std::size_t start = 0;
        for (const auto& inv : inverses_) {
            const auto len = inv.rows();
            z.segment(static_cast<Eigen::Index>(start), len).noalias() = inv * r.segment(static_cast<Eigen::Index>(start), len);
            start += static_cast<std::size_t>(len);
        }
    }

private:
    std::size_t block_;
    std::vector<Eigen::MatrixXcd> inverses_;
};

/// Incomplete LU factorization with the sparsity pattern of A (no fill-in).
class ILU0 : public Preconditioner {
public:
    explicit ILU0(const SparseComplexMatrix& A)
        : n_(A.size()), ptr_(A.row_offsets()), cols_(A.column_indices()), vals_(A.values()), diag_(n_)
    {
        std::vector<std::ptrdiff_t> pos(n_, -1);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k) pos[cols_[k]] = static_cast<std::ptrdiff_t>(k);
            if (pos[i] < 0) throw InvalidParameter("ILU0: missing diagonal entry in row " + std::to_string(i));
            for (std::size_t k = ptr_[i]; k < ptr_[i + 1] && cols_[k] < i; ++k) {
                const std::size_t r = cols_[k];
                vals_[k] /= vals_[diag_[r]];
                for (std::size_t m = diag_[r] + 1; m < ptr_[r + 1]; ++m) {
                    const std::ptrdiff_t p = pos[cols_[m]];
                    if (p >= 0) vals_[static_cast<std::size_t>(p)] -= vals_[k] * vals_[m];
                }
            }
            diag_[i] = static_cast<std::size_t>(pos[i]);
            if (vals_[diag_[i]] == Complex{}) vals_[diag_[i]] = 1.0;
            for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k) pos[cols_[k]] = -1;
        }
    }

    void apply(const ComplexVector& r, ComplexVector& z) const override
    {
        z = r;
        for (std::size_t i = 0; i < n_; ++i) {
            Complex s = z[static_cast<Eigen::Index>(i)];
            for (std::size_t k = ptr_[i]; k < diag_[i]; ++k) s -= vals_[k] * z[static_cast<Eigen::Index>(cols_[k])];
            z[static_cast<Eigen::Index>(i)] = s;
        }
        for (std::size_t i = n_; i-- > 0;) {
            Complex s = z[static_cast<Eigen::Index>(i)];
            for (std::size_t k = diag_[i] + 1; k < ptr_[i + 1]; ++k) s -= vals_[k] * z[static_cast<Eigen::Index>(cols_[k])];
            z[static_cast<Eigen::Index>(i)] = s / vals_[diag_[i]];
        }
    }

private:
    std::size_t n_;
    std::vector<std::size_t> ptr_;
    std::vector<std::size_t> cols_;
    std::vector<Complex> vals_;
    std::vector<std::size_t> diag_;
};

/// Sparse LU (Eigen, COLAMD ordering) of a fixed matrix.
class SparseLUPreconditioner : public Preconditioner {
public:
    explicit SparseLUPreconditioner(const SparseComplexMatrix& A)
    {
        std::vector<Eigen::Triplet<Complex>> t;
        t.reserve(A.nonzeros());
        for (std::size_t i = 0; i < A.size(); ++i)
            for (std::size_t k = A.row_offsets()[i]; k < A.row_offsets()[i + 1]; ++k)
                t.emplace_back(static_cast<int>(i), static_cast<int>(A.column_indices()[k]), A.values()[k]);
        Eigen::SparseMatrix<Complex> S(static_cast<Eigen::Index>(A.size()), static_cast<Eigen::Index>(A.size()));
        S.setFromTriplets(t.begin(), t.end());
        S.makeCompressed();
        lu_.analyzePattern(S);
        lu_.factorize(S);
        if (lu_.info() != Eigen::Success) throw InvalidParameter("sparse LU preconditioner: matrix is singular");
    }

    void apply(const ComplexVector& r, ComplexVector& z) const override { z = lu_.solve(r); }

private:
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu_;
};

inline std::unique_ptr<Preconditioner> make_preconditioner(const SparseComplexMatrix& A, const SolverOptions& opt)
{
    switch (opt.preconditioner) {
    case PreconditionerKind::ilu0: return std::make_unique<ILU0>(A);
    case PreconditionerKind::lu: return std::make_unique<SparseLUPreconditioner>(A);
    case PreconditionerKind::block_jacobi: break;
    }
    return std::make_unique<BlockJacobi>(A, opt.block_size);
}

/// Dense LU solve; the reference path for small systems.
inline SolveResult solve_dense(const SparseComplexMatrix& A, const ComplexVector& b)
{
    SolveResult res;
    res.x = A.to_dense().partialPivLu().solve(b);
    const double bn = b.norm();
    res.report.iterations = 1;
    res.report.relative_residual = bn > 0.0 ? (A * res.x - b).norm() / bn : (A * res.x).norm();
    res.report.converged = true;
    return res;
}

/// Restarted GMRES with right preconditioning for general complex systems. When no
/// preconditioner is passed one is built from A according to opt. The returned residual
/// is recomputed from the final iterate. Throws SolverError when the tolerance is not
/// met within max_iters.
inline SolveResult solve(const SparseComplexMatrix& A, const ComplexVector& b, const SolverOptions& opt = {},
                         const ComplexVector* initial_guess = nullptr, const Preconditioner* precond = nullptr)
{
    const auto n = static_cast<Eigen::Index>(A.size());
    if (b.size() != n) throw InvalidParameter("solve: right-hand side length does not match the matrix");
    if (opt.dense) return solve_dense(A, b);

    SolveResult res;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x = ComplexVector::Zero(n);
        res.report = {0, 0.0, true};
        return res;
    }
    res.x = initial_guess ? *initial_guess : ComplexVector::Zero(n);
    std::unique_ptr<Preconditioner> owned;
    if (!precond) {
        owned = make_preconditioner(A, opt);
        precond = owned.get();
    }
    const auto precondition = [precond](const ComplexVector& in, ComplexVector& out) { precond->apply(in, out); };
    const int m = std::max(1, opt.restart);

    ComplexVector r = b - A * res.x;
    double beta = r.norm();
    int iters = 0;
    std::vector<ComplexVector> V(static_cast<std::size_t>(m + 1));
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<double> cs(static_cast<std::size_t>(m));
    std::vector<Complex> sn(static_cast<std::size_t>(m));
    ComplexVector g(m + 1), z, w;

    while (beta / bnorm > opt.tol && iters < opt.max_iters) {
        V[0] = r / beta;
        g.setZero();
        g[0] = beta;
        H.setZero();
        int j = 0;
        for (; j < m && iters < opt.max_iters; ++j) {
            ++iters;
            precondition(V[static_cast<std::size_t>(j)], z);
            A.multiply(z, w);
            for (int i = 0; i <= j; ++i) {
                const Complex hij = V[static_cast<std::size_t>(i)].dot(w); // conjugates the left factor
                H(i, j) = hij;
                w -= hij * V[static_cast<std::size_t>(i)];
            }
            const double hn = w.norm();
            H(j + 1, j) = hn;
            if (hn > 0.0) V[static_cast<std::size_t>(j + 1)] = w / hn;
            for (int i = 0; i < j; ++i) {
                const Complex a = H(i, j), bb = H(i + 1, j);
                H(i, j) = cs[static_cast<std::size_t>(i)] * a + sn[static_cast<std::size_t>(i)] * bb;
                H(i + 1, j) = -std::conj(sn[static_cast<std::size_t>(i)]) * a + cs[static_cast<std::size_t>(i)] * bb;
            }
            const Complex a = H(j, j), bb = H(j + 1, j);
            const double denom = std::sqrt(std::norm(a) + std::norm(bb));
            if (std::abs(a) == 0.0) {
                cs[static_cast<std::size_t>(j)] = 0.0;
                sn[static_cast<std::size_t>(j)] = 1.0;
            } else {
                cs[static_cast<std::size_t>(j)] = std::abs(a) / denom;
                sn[static_cast<std::size_t>(j)] = (a / std::abs(a)) * std::conj(bb) / denom;
            }
            H(j, j) = cs[static_cast<std::size_t>(j)] * a + sn[static_cast<std::size_t>(j)] * bb;
            H(j + 1, j) = 0.0;
            const Complex gj = g[j];
            g[j] = cs[static_cast<std::size_t>(j)] * gj;
            g[j + 1] = -std::conj(sn[static_cast<std::size_t>(j)]) * gj;
            if (std::abs(g[j + 1]) / bnorm <= opt.tol || hn == 0.0) {
                ++j;
                break;
            }
        }
        // back substitution for the least-squares coefficients
        ComplexVector y = ComplexVector::Zero(j);
        for (int i = j - 1; i >= 0; --i) {
            Complex s = g[i];
            for (int k = i + 1; k < j; ++k) s -= H(i, k) * y[k];
            y[i] = s / H(i, i);
        }
        ComplexVector update = ComplexVector::Zero(n);
        for (int i = 0; i < j; ++i) update += y[i] * V[static_cast<std::size_t>(i)];
        precondition(update, z);
        res.x += z;
        r = b - A * res.x;
        beta = r.norm();
    }
    res.report.iterations = iters;
    res.report.relative_residual = beta / bnorm;
    res.report.converged = res.report.relative_residual <= opt.tol;
    if (!res.report.converged)
    {
        std::ostringstream msg;
        msg << "GMRES did not reach relative residual " << opt.tol << " in " << iters << " iterations (residual "
            << res.report.relative_residual << ")";
        throw SolverError(msg.str(), res.report);
    }
    return res;
}

} // namespace polydg
