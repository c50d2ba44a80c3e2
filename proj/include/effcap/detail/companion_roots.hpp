#pragma once

// Polynomial roots via the companion matrix: balancing followed by the
// Francis double-shift QR iteration on the (already Hessenberg) matrix,
// eigenvalues only.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "effcap/errors.hpp"

namespace effcap::detail {

class SquareMatrix {
public:
    explicit SquareMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    std::vector<double> data_;
};

/// In-place balancing (norm equalization by powers of 2); preserves
/// eigenvalues exactly.
inline void balance(SquareMatrix& a) {
    const std::size_t n = a.size();
    const double radix = 2.0;
    const double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            }
            if (c != 0.0 && r != 0.0) {
                double g = r / radix;
                double f = 1.0;
                const double s = c + r;
                while (c < g) {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while (c > g) {
                    f /= radix;
                    c /= sqrdx;
                }
                if ((c + r) / f < 0.95 * s) {
                    done = false;
                    g = 1.0 / f;
                    for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                    for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real upper-Hessenberg matrix (destroys the input).
/// Classic hqr with exceptional shifts; throws NonConvergence past the
/// per-eigenvalue iteration cap.
inline std::vector<std::complex<double>> hessenberg_eigenvalues(SquareMatrix& a) {
    const int n = static_cast<int>(a.size());
    std::vector<std::complex<double>> roots;
    roots.reserve(static_cast<std::size_t>(n));

    auto at = [&](int i, int j) -> double& {
        return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(at(i, j));
    if (anorm == 0.0) anorm = 1.0;

    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l >= 1; --l) {
                const double s = std::abs(at(l - 1, l - 1)) + std::abs(at(l, l));
                const double scale = (s == 0.0) ? anorm : s;
                if (std::abs(at(l, l - 1)) <= 1e-300 + 1e-16 * scale) {
                    at(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = at(nn, nn);
            if (l == nn) { // one root found
                roots.emplace_back(x + t, 0.0);
                --nn;
            } else {
                double y = at(nn - 1, nn - 1);
                double w = at(nn, nn - 1) * at(nn - 1, nn);
                if (l == nn - 1) { // two roots found
                    double p = 0.5 * (y - x);
                    double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) { // real pair
                        z = p + (p >= 0.0 ? std::abs(z) : -std::abs(z));
                        roots.emplace_back(x + z, 0.0);
                        roots.emplace_back(z != 0.0 ? x - w / z : x + z, 0.0);
                    } else { // complex pair
                        roots.emplace_back(x + p, z);
                        roots.emplace_back(x + p, -z);
                    }
                    nn -= 2;
                } else { // no root yet; do a QR sweep
                    if (its == 60)
                        throw NonConvergence("Hessenberg QR did not converge");
                    double p = 0.0, q = 0.0, z = 0.0, r = 0.0, s = 0.0;
                    if (its == 10 || its == 20) { // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) at(i, i) -= x;
                        s = std::abs(at(nn, nn - 1)) + std::abs(at(nn - 1, nn - 2));
                        x = y = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m;
                    for (m = nn - 2; m >= l; --m) {
                        z = at(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / at(m + 1, m) + at(m, m + 1);
                        q = at(m + 1, m + 1) - z - r - s;
                        r = at(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(at(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(at(m - 1, m - 1)) +
                                                        std::abs(z) + std::abs(at(m + 1, m + 1)));
                        if (u <= 1e-16 * v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        at(i, i - 2) = 0.0;
                        if (i != m + 2) at(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = at(k, k - 1);
                            q = at(k + 1, k - 1);
                            r = (k != nn - 1) ? at(k + 2, k - 1) : 0.0;
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = std::sqrt(p * p + q * q + r * r);
                        if (p < 0.0) s = -s;
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) at(k, k - 1) = -at(k, k - 1);
                        } else {
                            at(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) { // row modification
                            p = at(k, j) + q * at(k + 1, j);
                            if (k != nn - 1) {
                                p += r * at(k + 2, j);
                                at(k + 2, j) -= p * z;
                            }
                            at(k + 1, j) -= p * y;
                            at(k, j) -= p * x;
                        }
                        const int mmin = (nn < k + 3) ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) { // column modification
                            p = x * at(i, k) + y * at(i, k + 1);
                            if (k != nn - 1) {
                                p += z * at(i, k + 2);
                                at(i, k + 2) -= p * r;
                            }
                            at(i, k + 1) -= p * q;
                            at(i, k) -= p;
                        }
                    }
                }
            }
        } while (nn >= 0 && l < nn); // note: l resolved inside
    }
    return roots;
}

/// Roots of z^K - c_1 z^{K-1} - ... - c_K = 0 as eigenvalues of the top-row
/// companion matrix.
inline std::vector<std::complex<double>> companion_roots(std::span<const double> c) {
    const std::size_t n = c.size();
    if (n == 0) return {};
    if (n == 1) return {std::complex<double>(c[0], 0.0)};
    SquareMatrix a(n);
    for (std::size_t j = 0; j < n; ++j) a(0, j) = c[j];
    for (std::size_t i = 1; i < n; ++i) a(i, i - 1) = 1.0;
    balance(a);
    return hessenberg_eigenvalues(a);
}

} // namespace effcap::detail
