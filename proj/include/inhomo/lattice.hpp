#pragma once

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace inhomo::lattice {

using IVec = std::vector<std::int64_t>;

inline __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

/// Rank of a set of integer vectors (fraction-free elimination in 128-bit).
inline int rank(const std::vector<IVec>& rows) {
    if (rows.empty()) return 0;
    const std::size_t m = rows.front().size();
    std::vector<std::vector<__int128>> a;
    for (const auto& r : rows) a.emplace_back(r.begin(), r.end());
    int rk = 0;
    for (std::size_t col = 0; col < m && rk < static_cast<int>(a.size()); ++col) {
        std::size_t piv = rk;
        while (piv < a.size() && a[piv][col] == 0) ++piv;
        if (piv == a.size()) continue;
        std::swap(a[rk], a[piv]);
        for (std::size_t r = rk + 1; r < a.size(); ++r) {
            if (a[r][col] == 0) continue;
            const __int128 p = a[rk][col], q = a[r][col];
            __int128 g = 0;
            for (std::size_t c = 0; c < m; ++c) {
                a[r][c] = a[r][c] * p - a[rk][c] * q;
                g = gcd128(g, a[r][c]);
            }
            if (g > 1)
                for (std::size_t c = 0; c < m; ++c) a[r][c] /= g;
        }
        ++rk;
    }
    return rk;
}

/// Exact determinant of a square integer matrix (Bareiss).
inline __int128 determinant(std::vector<IVec> rows) {
    const std::size_t n = rows.size();
    std::vector<std::vector<__int128>> a;
    for (const auto& r : rows) a.emplace_back(r.begin(), r.end());
    __int128 sign = 1, prev = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        while (piv < n && a[piv][k] == 0) ++piv;
        if (piv == n) return 0;
        if (piv != k) {
            std::swap(a[piv], a[k]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

/// LLL reduction (delta = 0.99) of the lattice spanned by the columns B e_j,
/// where B is given row-major as an (m x d) real matrix; returns the integer
/// coefficient vectors of the reduced basis.
inline std::vector<IVec> lll(const std::vector<std::vector<long double>>& B, long double delta = 0.99L) {
    const std::size_t m = B.size(), d = B.front().size();
    std::vector<std::vector<long double>> b(d, std::vector<long double>(m));
    std::vector<IVec> coef(d, IVec(d, 0));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < m; ++i) b[j][i] = B[i][j];
        coef[j][j] = 1;
    }
    auto dot = [&](const std::vector<long double>& x, const std::vector<long double>& y) {
        long double s = 0;
        for (std::size_t i = 0; i < m; ++i) s += x[i] * y[i];
        return s;
    };
    std::vector<std::vector<long double>> bs(d), mu(d, std::vector<long double>(d, 0));
    std::vector<long double> nb(d);
    auto gso = [&] {
        for (std::size_t i = 0; i < d; ++i) {
            bs[i] = b[i];
            for (std::size_t j = 0; j < i; ++j) {
                mu[i][j] = dot(b[i], bs[j]) / nb[j];
                for (std::size_t t = 0; t < m; ++t) bs[i][t] -= mu[i][j] * bs[j][t];
            }
            nb[i] = dot(bs[i], bs[i]);
        }
    };
    gso();
    std::size_t k = 1;
    int guard = 0;
    while (k < d && guard++ < 100000) {
        for (std::size_t j = k; j-- > 0;) {
            long double q = std::nearbyint(mu[k][j]);
            if (q != 0) {
                for (std::size_t t = 0; t < m; ++t) b[k][t] -= q * b[j][t];
                for (std::size_t t = 0; t < d; ++t) coef[k][t] -= static_cast<std::int64_t>(q) * coef[j][t];
                gso();
            }
        }
        if (nb[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * nb[k - 1]) {
            ++k;
        } else {
            std::swap(b[k], b[k - 1]);
            std::swap(coef[k], coef[k - 1]);
            gso();
            k = std::max<std::size_t>(k - 1, 1);
        }
    }
    return coef;
}

} // namespace inhomo::lattice
