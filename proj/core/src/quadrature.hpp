#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <vector>

namespace srs::detail {

/// Gauss-Legendre on [lo, hi], split at the given breakpoints (those outside the
/// interval are ignored). Exact for piecewise polynomials of degree < 40 between cuts.
template <typename F>
double integrate_pieces(F&& f, double lo, double hi, std::vector<double> cuts) {
    using boost::math::quadrature::gauss;
    if (!(hi > lo)) return 0.0;
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    double prev = lo;
    for (double c : cuts) {
        c = std::clamp(c, lo, hi);
        if (c > prev) {
            total += gauss<double, 20>::integrate(f, prev, c);
            prev = c;
        }
    }
    return total;
}

/// Adaptive Gauss-Kronrod on each piece, for integrands with square-root endpoint
/// behaviour (arc lengths of circle intersections).
template <typename F>
double integrate_pieces_adaptive(F&& f, double lo, double hi, std::vector<double> cuts, double tol = 1e-12) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(hi > lo)) return 0.0;
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    double prev = lo;
    for (double c : cuts) {
        c = std::clamp(c, lo, hi);
        if (c > prev) {
            total += gauss_kronrod<double, 21>::integrate(f, prev, c, 12, tol);
            prev = c;
        }
    }
    return total;
}

}  // namespace srs::detail
