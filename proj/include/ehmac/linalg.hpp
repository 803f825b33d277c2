#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ehmac {

using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

/// Largest entrywise modulus of M - M^H.
template <class Derived>
typename Derived::RealScalar hermitian_defect(const Eigen::MatrixBase<Derived>& m)
{
    if (m.rows() != m.cols()) return std::numeric_limits<typename Derived::RealScalar>::infinity();
    if (m.size() == 0) return 0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <class Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, typename Derived::RealScalar tol = 1e-10)
{
    return hermitian_defect(m) <= tol;
}

template <class Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m, typename Derived::RealScalar tol = 1e-8)
{
    if (!is_hermitian(m, std::max<typename Derived::RealScalar>(tol, 1e-10))) return false;
    if (m.size() == 0) return true;
    using Plain = typename Derived::PlainObject;
    const Plain sym = (m + m.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Plain> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -tol;
}

/// Euclidean projection of v onto {x >= 0, sum x = total}.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
project_to_simplex(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar total)
{
    using S = typename Derived::Scalar;
    using Out = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    const Eigen::Index n = v.size();
    if (n == 0) return Out{};
    if (total <= S(0)) return Out::Zero(n);

    Out sorted = v;
    std::sort(sorted.data(), sorted.data() + n, std::greater<S>());
    S running = sorted[0];
    S shift = sorted[0] - total;  // the top entry is always in the support
    for (Eigen::Index j = 1; j < n; ++j) {
        running += sorted[j];
        const S candidate = (running - total) / S(j + 1);
        if (sorted[j] - candidate > S(0)) shift = candidate;
    }
    Out x = (v.array() - shift).cwiseMax(S(0)).matrix();
    // When |v| dwarfs `total` the subtraction above keeps only a few bits of x; pin the sum.
    const S sum = x.sum();
    if (sum > S(0)) {
        x *= total / sum;
    } else {
        Eigen::Index top = 0;
        v.maxCoeff(&top);
        x.setZero();
        x[top] = total;
    }
    return x;
}

/// Projection of a Hermitian matrix onto {Q >= 0, tr Q = total}.
template <class Derived>
typename Derived::PlainObject project_trace_psd(const Eigen::MatrixBase<Derived>& q,
                                                typename Derived::RealScalar total)
{
    using Plain = typename Derived::PlainObject;
    if (total <= 0) return Plain::Zero(q.rows(), q.cols());
    const Plain sym = (q + q.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Plain> eig(sym);
    const auto lambda = project_to_simplex(eig.eigenvalues(), total);
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Projection of a Hermitian matrix onto the PSD cone.
template <class Derived>
typename Derived::PlainObject project_psd(const Eigen::MatrixBase<Derived>& q)
{
    using Plain = typename Derived::PlainObject;
    const Plain sym = (q + q.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Plain> eig(sym);
    const auto lambda = eig.eigenvalues().cwiseMax(0).eval();
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint();
}

template <class Derived>
typename Derived::RealScalar max_eigenvalue(const Eigen::MatrixBase<Derived>& m)
{
    using Plain = typename Derived::PlainObject;
    const Plain sym = (m + m.adjoint()) / 2;
    Eigen::SelfAdjointEigenSolver<Plain> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

/// log2 det of a Hermitian positive-definite matrix through its Cholesky factor.
template <class Derived>
typename Derived::RealScalar log2_det_hpd(const Eigen::MatrixBase<Derived>& m)
{
    using R = typename Derived::RealScalar;
    Eigen::LLT<typename Derived::PlainObject> llt(m);
    R acc = 0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(std::real(l(i, i)));
    return R(2) * acc / std::numbers::ln2_v<R>;
}

/// Real Frobenius inner product Re tr(A^H B).
template <class A, class B>
typename A::RealScalar real_inner(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b)
{
    return (a.conjugate().cwiseProduct(b)).sum().real();
}

}  // namespace ehmac
