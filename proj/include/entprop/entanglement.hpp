#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entprop/spin_basis.hpp"

namespace entprop {

enum class EntropyBase { Two, E };

inline const char* to_string(EntropyBase b) { return b == EntropyBase::Two ? "2" : "e"; }

/// Reduced state of a subset A of the register. Row/column index s is the
/// compressed configuration of A: bit k of s is the k-th lowest site of A.
struct DensityMatrix {
    SiteSubset sites;
    Eigen::MatrixXcd elem;

    Eigen::Index dim() const { return elem.rows(); }
};

inline constexpr Real kEigenvalueCutoff = 1e-12;

namespace detail {

/// Register indices of every configuration of `mask`, in compressed order.
inline std::vector<std::uint64_t> expand_mask(std::uint64_t mask) {
    const int k = std::popcount(mask);
    std::vector<std::uint64_t> out(std::size_t{1} << k);
    for (std::uint64_t c = 0; c < out.size(); ++c) {
        out[c] = deposit_bits(c, mask);
    }
    return out;
}

/// psi reshaped to (configurations of A) x (configurations of the rest).
inline Eigen::MatrixXcd schmidt_matrix(const StateVector& v, SiteSubset a) {
    const int n = v.num_sites();
    const auto kept = expand_mask(a.mask());
    const auto env = expand_mask(a.complement(n).mask());
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(kept.size()),
                       static_cast<Eigen::Index>(env.size()));
    for (std::size_t e = 0; e < env.size(); ++e) {
        for (std::size_t s = 0; s < kept.size(); ++s) {
            m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(e)) = v[kept[s] | env[e]];
        }
    }
    return m;
}

inline void check_subset(SiteSubset a, int num_sites) {
    if (a.empty()) {
        throw std::invalid_argument("site subset is empty");
    }
    if (!a.fits(num_sites)) {
        throw std::out_of_range("site subset exceeds the register");
    }
}

inline Real entropy_from_spectrum(const Eigen::VectorXd& lambda, EntropyBase base) {
    Real s = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const Real l = lambda[i];
        if (l > kEigenvalueCutoff) {
            s -= l * std::log(l);
        }
    }
    s = std::max(s, 0.0);
    return base == EntropyBase::Two ? s / std::log(2.0) : s;
}

} // namespace detail

/// rho_A = Tr_{not A} |v><v|.
inline DensityMatrix reduced_density_matrix(const StateVector& v, SiteSubset a) {
    detail::check_subset(a, v.num_sites());
    const Eigen::MatrixXcd m = detail::schmidt_matrix(v, a);
    DensityMatrix rho{a, Eigen::MatrixXcd()};
    rho.elem.noalias() = m * m.adjoint();
    return rho;
}

/// Eigenvalues of rho after checking Hermiticity, unit trace and
/// positivity (to 1e-12, 1e-10 and -1e-12). Tiny negatives are clamped to 0.
inline Eigen::VectorXd density_spectrum(const DensityMatrix& rho) {
    const Real herm = (rho.elem - rho.elem.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-12) {
        throw std::invalid_argument("density matrix is not Hermitian (" + std::to_string(herm) + ")");
    }
    const Real tr = rho.elem.trace().real();
    if (std::abs(tr - 1.0) > 1e-10) {
        throw std::invalid_argument("density matrix trace is " + std::to_string(tr));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.elem, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("density matrix eigensolver did not converge");
    }
    Eigen::VectorXd lambda = es.eigenvalues();
    if (lambda.minCoeff() < -1e-12) {
        throw std::invalid_argument("density matrix has a negative eigenvalue " +
                                    std::to_string(lambda.minCoeff()));
    }
    return lambda.cwiseMax(0.0);
}

/// S = -Tr rho log rho, in bits or nats.
inline Real von_neumann_entropy(const DensityMatrix& rho, EntropyBase base = EntropyBase::Two) {
    return detail::entropy_from_spectrum(density_spectrum(rho), base);
}

/// S_2 = -log2 Tr rho^2, in bits.
inline Real renyi2_entropy(const DensityMatrix& rho) {
    const Eigen::VectorXd lambda = density_spectrum(rho);
    return -std::log2(lambda.squaredNorm());
}

/// Entropy of subset A of a pure state. Evaluated on whichever of A and its
/// complement is smaller; for a pure global state both give the same value.
inline Real entanglement_entropy(const StateVector& v, SiteSubset a,
                                 EntropyBase base = EntropyBase::Two) {
    detail::check_subset(a, v.num_sites());
    const SiteSubset rest = a.complement(v.num_sites());
    if (rest.empty()) {
        return 0.0;
    }
    const SiteSubset smaller = rest.size() < a.size() ? rest : a;
    return von_neumann_entropy(reduced_density_matrix(v, smaller), base);
}

/// I(A:B) = S(A) + S(B) - S(A u B). Returned unclamped; it may dip below zero
/// by rounding (bounded by 1e-9 in practice).
inline Real mutual_information(const StateVector& v, SiteSubset a, SiteSubset b,
                               EntropyBase base = EntropyBase::Two) {
    if (a.intersects(b)) {
        throw std::invalid_argument("mutual_information: subsets overlap");
    }
    return entanglement_entropy(v, a, base) + entanglement_entropy(v, b, base) -
           entanglement_entropy(v, a | b, base);
}

} // namespace entprop
