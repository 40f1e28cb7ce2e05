#pragma once

#include "psdoflow/spectral.hpp"

#include <cmath>
#include <numbers>

namespace testing_support {

using psdoflow::Grid;
using psdoflow::RealField;
using psdoflow::SpectralField;

constexpr double pi = std::numbers::pi;

// Sample f(component, x) on the collocation points and transform.
template <typename F>
SpectralField sample(const Grid& g, F&& f) {
    RealField out(g);
    for (int j = 0; j < g.components(); ++j) {
        for (std::size_t p = 0; p < g.points(); ++p) {
            double x[3] = {};
            for (int a = 0; a < g.dim(); ++a) x[a] = g.coordinate(p, a);
            out(j, p) = f(j, x);
        }
    }
    return psdoflow::to_spectral(out);
}

inline double max_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.coeffs().size(); ++i) m = std::max(m, std::abs(a.coeffs()[i] - b.coeffs()[i]));
    return m;
}

inline std::size_t index1(const Grid& g, int k) {
    int f[1] = {k};
    return g.flat_index(f);
}

}  // namespace testing_support
