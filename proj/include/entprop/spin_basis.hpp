#pragma once

// Computational basis for a register of spin-1/2 sites.
//
// Site i is bit i of the basis index. A cleared bit is |0> = spin up
// (sigma^z = +1), a set bit is |1> = spin down (sigma^z = -1). Partial traces
// and magnetizations are therefore plain mask operations on the index.

#include <bit>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace entprop {

using Real = double;
using Complex = std::complex<double>;

/// Largest register a StateVector may hold (16 MiB of amplitudes).
inline constexpr int kMaxStateSites = 20;
/// Largest register a dense operator may hold (2^14 squared doubles = 2 GiB).
inline constexpr int kMaxDenseSites = 14;

/// Site label on a register. The attached spin of the propagation setup is
/// site 0 and the bulk chain occupies sites 1..N.
struct Site {
    int index = 0;

    constexpr Site() = default;
    constexpr explicit Site(int i) : index(i) {}

    constexpr std::uint64_t bit() const { return std::uint64_t{1} << index; }
    friend constexpr bool operator==(Site, Site) = default;
};

/// Set of sites on a register, stored as a bit mask.
class SiteSubset {
  public:
    constexpr SiteSubset() = default;
    constexpr explicit SiteSubset(std::uint64_t mask) : mask_(mask) {}
    SiteSubset(std::initializer_list<int> sites) {
        for (int s : sites) {
            if (s < 0 || s >= 64) {
                throw std::out_of_range("site index out of range");
            }
            mask_ |= std::uint64_t{1} << s;
        }
    }

    /// Sites first, first+1, ..., first+count-1.
    static SiteSubset block(int first, int count) {
        if (first < 0 || count < 0 || first + count > 64) {
            throw std::out_of_range("site block out of range");
        }
        const std::uint64_t ones =
            count == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << count) - 1;
        return SiteSubset(ones << first);
    }
    static SiteSubset all(int num_sites) { return block(0, num_sites); }

    constexpr std::uint64_t mask() const { return mask_; }
    constexpr int size() const { return std::popcount(mask_); }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr bool contains(Site s) const { return (mask_ & s.bit()) != 0; }
    constexpr bool intersects(SiteSubset o) const { return (mask_ & o.mask_) != 0; }
    constexpr bool fits(int num_sites) const {
        return num_sites >= 64 || (mask_ >> num_sites) == 0;
    }

    SiteSubset complement(int num_sites) const {
        return SiteSubset(all(num_sites).mask() & ~mask_);
    }
    constexpr SiteSubset operator|(SiteSubset o) const { return SiteSubset(mask_ | o.mask_); }
    friend constexpr bool operator==(SiteSubset, SiteSubset) = default;

    std::vector<int> sites() const {
        std::vector<int> out;
        for (std::uint64_t m = mask_; m != 0; m &= m - 1) {
            out.push_back(std::countr_zero(m));
        }
        return out;
    }

  private:
    std::uint64_t mask_ = 0;
};

/// Scatter the low popcount(mask) bits of `value` into the set positions of
/// `mask` (software pdep).
constexpr std::uint64_t deposit_bits(std::uint64_t value, std::uint64_t mask) {
    std::uint64_t out = 0;
    for (std::uint64_t m = mask; m != 0; m &= m - 1) {
        if (value & 1) {
            out |= m & (~m + 1);
        }
        value >>= 1;
    }
    return out;
}

/// Computational basis state as an L-bit integer.
struct BasisState {
    std::uint64_t bits = 0;
    friend constexpr bool operator==(BasisState, BasisState) = default;
};

/// Coupling constants of the open chain
///   H = -J sum s^z_i s^z_{i+1} - J' sum s^z_i s^z_{i+2} + sum (hz s^z_i + hx s^x_i).
struct ModelParams {
    Real J = 1.0;
    Real Jprime = 0.0;
    Real hz = 0.0;
    Real hx = 0.0;
    int num_sites = 1;

    /// Integrable transverse Ising chain; the transverse field is free.
    static ModelParams transverse_ising(int num_sites, Real hx) {
        return {1.0, 0.0, 0.0, hx, num_sites};
    }
    /// Nearest-neighbour chain with tilted field (non-integrable).
    static ModelParams chaotic_ising(int num_sites) {
        return {1.0, 0.0, 0.5, 1.05, num_sites};
    }
    /// Chaotic Ising chain plus a next-nearest-neighbour coupling.
    static ModelParams extended_chaotic_ising(int num_sites) {
        return {1.0, 0.8, 0.5, 1.05, num_sites};
    }

    void validate() const {
        if (num_sites < 1) {
            throw std::invalid_argument("model needs at least one site");
        }
        if (J != 0.0 && num_sites < 2) {
            throw std::invalid_argument("nearest-neighbour coupling needs L >= 2");
        }
        if (Jprime != 0.0 && num_sites < 3) {
            throw std::invalid_argument("next-nearest-neighbour coupling needs L >= 3");
        }
    }
};

inline void check_register_size(int num_sites, int limit) {
    if (num_sites < 1 || num_sites > limit) {
        throw std::invalid_argument("register size " + std::to_string(num_sites) +
                                    " outside [1, " + std::to_string(limit) + "]");
    }
}

/// Wave function over the 2^L computational basis.
class StateVector {
  public:
    StateVector() = default;
    explicit StateVector(int num_sites) : num_sites_(num_sites) {
        check_register_size(num_sites, kMaxStateSites);
        amp_ = Eigen::VectorXcd::Zero(Eigen::Index{1} << num_sites);
    }
    StateVector(int num_sites, Eigen::VectorXcd amplitudes)
        : num_sites_(num_sites), amp_(std::move(amplitudes)) {
        check_register_size(num_sites, kMaxStateSites);
        if (amp_.size() != (Eigen::Index{1} << num_sites)) {
            throw std::invalid_argument("amplitude count does not match 2^L");
        }
    }

    int num_sites() const { return num_sites_; }
    Eigen::Index dim() const { return amp_.size(); }
    const Eigen::VectorXcd& amplitudes() const { return amp_; }
    Eigen::VectorXcd& amplitudes() { return amp_; }
    Complex operator[](std::uint64_t i) const { return amp_[static_cast<Eigen::Index>(i)]; }
    Complex& operator[](std::uint64_t i) { return amp_[static_cast<Eigen::Index>(i)]; }
    Real norm() const { return amp_.norm(); }

  private:
    int num_sites_ = 0;
    Eigen::VectorXcd amp_;
};

/// Real symmetric operator on the 2^L basis (Hamiltonians, sigma^z/sigma^x
/// observables). All terms of the chain Hamiltonian are real in this basis.
class DenseOperator {
  public:
    DenseOperator() = default;
    explicit DenseOperator(int num_sites) : num_sites_(num_sites) {
        check_register_size(num_sites, kMaxDenseSites);
        const Eigen::Index dim = Eigen::Index{1} << num_sites;
        elem_ = Eigen::MatrixXd::Zero(dim, dim);
    }
    DenseOperator(int num_sites, Eigen::MatrixXd elements)
        : num_sites_(num_sites), elem_(std::move(elements)) {
        check_register_size(num_sites, kMaxDenseSites);
        const Eigen::Index dim = Eigen::Index{1} << num_sites;
        if (elem_.rows() != dim || elem_.cols() != dim) {
            throw std::invalid_argument("operator shape does not match 2^L");
        }
    }

    int num_sites() const { return num_sites_; }
    Eigen::Index dim() const { return elem_.rows(); }
    const Eigen::MatrixXd& elements() const { return elem_; }
    Eigen::MatrixXd& elements() { return elem_; }
    Real operator()(std::uint64_t row, std::uint64_t col) const {
        return elem_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    /// Largest |A_ij - A_ji|.
    Real asymmetry() const { return (elem_ - elem_.transpose()).cwiseAbs().maxCoeff(); }
    Real max_abs() const { return elem_.cwiseAbs().maxCoeff(); }

  private:
    int num_sites_ = 0;
    Eigen::MatrixXd elem_;
};

enum class Pauli { X, Y, Z };

namespace detail {

inline void check_site(Site s, int num_sites) {
    if (s.index < 0 || s.index >= num_sites) {
        throw std::out_of_range("site " + std::to_string(s.index) + " outside register of " +
                                std::to_string(num_sites) + " sites");
    }
}

inline Real z_sign(std::uint64_t bits, int site) {
    return ((bits >> site) & 1) ? -1.0 : 1.0;
}

/// Diagonal of the chain's Ising and longitudinal-field terms, placed on sites
/// offset..offset+N-1 of a register with `total_sites` sites.
inline Eigen::VectorXd ising_diagonal(const ModelParams& p, int offset, int total_sites) {
    const std::uint64_t dim = std::uint64_t{1} << total_sites;
    Eigen::VectorXd diag(static_cast<Eigen::Index>(dim));
    const int n = p.num_sites;
    for (std::uint64_t s = 0; s < dim; ++s) {
        Real e = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            e -= p.J * z_sign(s, offset + i) * z_sign(s, offset + i + 1);
        }
        for (int i = 0; i + 2 < n; ++i) {
            e -= p.Jprime * z_sign(s, offset + i) * z_sign(s, offset + i + 2);
        }
        for (int i = 0; i < n; ++i) {
            e += p.hz * z_sign(s, offset + i);
        }
        diag[static_cast<Eigen::Index>(s)] = e;
    }
    return diag;
}

/// Chain Hamiltonian acting on sites offset..offset+N-1 of a larger register,
/// identity elsewhere.
inline DenseOperator embedded_hamiltonian(const ModelParams& p, int offset, int total_sites) {
    p.validate();
    if (offset < 0 || offset + p.num_sites > total_sites) {
        throw std::invalid_argument("chain does not fit in the register");
    }
    DenseOperator h(total_sites);
    auto& m = h.elements();
    const Eigen::VectorXd diag = ising_diagonal(p, offset, total_sites);
    m.diagonal() = diag;
    if (p.hx != 0.0) {
        const std::uint64_t dim = std::uint64_t{1} << total_sites;
        for (std::uint64_t s = 0; s < dim; ++s) {
            for (int i = 0; i < p.num_sites; ++i) {
                const std::uint64_t f = s ^ (std::uint64_t{1} << (offset + i));
                m(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(s)) += p.hx;
            }
        }
    }
    return h;
}

} // namespace detail

/// Dense Hamiltonian of the open chain described by `p` on L = p.num_sites sites.
inline DenseOperator build_hamiltonian(const ModelParams& p) {
    return detail::embedded_hamiltonian(p, 0, p.num_sites);
}

/// sigma^axis_i |v>. Y carries the phase sigma^y = i sigma^x sigma^z.
inline StateVector apply_pauli(Pauli axis, Site i, const StateVector& v) {
    detail::check_site(i, v.num_sites());
    StateVector out(v.num_sites());
    const std::uint64_t dim = static_cast<std::uint64_t>(v.dim());
    const std::uint64_t b = i.bit();
    for (std::uint64_t s = 0; s < dim; ++s) {
        const Complex a = v[s];
        switch (axis) {
        case Pauli::X:
            out[s ^ b] = a;
            break;
        case Pauli::Z:
            out[s] = (s & b) ? -a : a;
            break;
        case Pauli::Y:
            // sigma^y|0> = i|1>, sigma^y|1> = -i|0>
            out[s ^ b] = (s & b) ? Complex{0, -1} * a : Complex{0, 1} * a;
            break;
        }
    }
    return out;
}

/// CNOT with the given control and target sites.
inline StateVector apply_cnot(Site control, Site target, const StateVector& v) {
    detail::check_site(control, v.num_sites());
    detail::check_site(target, v.num_sites());
    if (control == target) {
        throw std::invalid_argument("CNOT control and target must differ");
    }
    StateVector out(v.num_sites());
    const std::uint64_t dim = static_cast<std::uint64_t>(v.dim());
    for (std::uint64_t s = 0; s < dim; ++s) {
        out[(s & control.bit()) ? (s ^ target.bit()) : s] = v[s];
    }
    return out;
}

inline StateVector product_state(BasisState bits, int num_sites) {
    StateVector out(num_sites);
    if (num_sites < 64 && (bits.bits >> num_sites) != 0) {
        throw std::invalid_argument("basis state has bits beyond the register");
    }
    out[bits.bits] = 1.0;
    return out;
}

/// Alternating |0>|1>|0>|1>... with the first site up.
inline BasisState neel_bits(int num_sites) {
    std::uint64_t bits = 0;
    for (int i = 1; i < num_sites; i += 2) {
        bits |= std::uint64_t{1} << i;
    }
    return {bits};
}

inline StateVector neel_state(int num_sites) {
    return product_state(neel_bits(num_sites), num_sites);
}

/// Diagonal of sum_{i in sites} sigma^z_i.
inline Eigen::VectorXd sigma_z_sum_diagonal(int num_sites, SiteSubset sites) {
    check_register_size(num_sites, kMaxStateSites);
    if (!sites.fits(num_sites)) {
        throw std::out_of_range("site subset exceeds the register");
    }
    const std::uint64_t dim = std::uint64_t{1} << num_sites;
    Eigen::VectorXd d(static_cast<Eigen::Index>(dim));
    const int n = sites.size();
    for (std::uint64_t s = 0; s < dim; ++s) {
        d[static_cast<Eigen::Index>(s)] = n - 2 * std::popcount(s & sites.mask());
    }
    return d;
}

/// Single-site Pauli observable as a dense operator. Y is not real and is
/// rejected; use apply_pauli for it.
inline DenseOperator pauli_operator(Pauli axis, Site i, int num_sites) {
    detail::check_site(i, num_sites);
    DenseOperator op(num_sites);
    const std::uint64_t dim = static_cast<std::uint64_t>(op.dim());
    auto& m = op.elements();
    for (std::uint64_t s = 0; s < dim; ++s) {
        const auto c = static_cast<Eigen::Index>(s);
        if (axis == Pauli::Z) {
            m(c, c) = detail::z_sign(s, i.index);
        } else if (axis == Pauli::X) {
            m(static_cast<Eigen::Index>(s ^ i.bit()), c) = 1.0;
        } else {
            throw std::invalid_argument("sigma^y has no real dense representation");
        }
    }
    return op;
}

/// sum_{i in sites} sigma^z_i as a dense operator.
inline DenseOperator total_sz_operator(int num_sites, SiteSubset sites) {
    DenseOperator op(num_sites);
    op.elements().diagonal() = sigma_z_sum_diagonal(num_sites, sites);
    return op;
}

} // namespace entprop
