#ifndef SFDE_QUADRATURE_HPP
#define SFDE_QUADRATURE_HPP

#include <cmath>
#include <functional>

namespace sfde {

// Adaptive Simpson with absolute tolerance; plain recursion with a depth cap.
namespace detail {

template <typename F>
double simpson(F&& f, double a, double fa, double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adapt(F&& f, double a, double fa, double b, double fb, double m, double fm, double whole,
             double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, fa, m, fm, lm, flm);
    const double right = simpson(f, m, fm, b, fb, rm, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double integrate(F&& f, double a, double b, double tol = 1e-12, int max_depth = 48) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = detail::simpson(f, a, fa, b, fb, m, fm);
    return detail::adapt(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace sfde

#endif
