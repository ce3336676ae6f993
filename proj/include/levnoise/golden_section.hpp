#pragma once

#include <cmath>
#include <utility>

namespace levnoise {

/// Golden-section minimization of a unimodal function on [lo, hi].
///
/// `less(a, b)` orders evaluated values, so callers can minimize over a
/// lexicographic merit rather than a plain double. Stops when the bracket is
/// narrower than rel_tol * (|lo| + |hi|) / 2 + abs_tol or after max_iter
/// shrinks. Returns the best probed (x, value); the bracket endpoints
/// themselves are never evaluated.
template <typename F, typename Less>
auto golden_section_minimize(F&& f, double lo, double hi, double rel_tol, double abs_tol,
                             int max_iter, Less&& less) {
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  auto fc = f(c);
  auto fd = f(d);
  for (int i = 0; i < max_iter; ++i) {
    if (std::abs(b - a) <= rel_tol * 0.5 * (std::abs(a) + std::abs(b)) + abs_tol) break;
    if (less(fc, fd)) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return less(fc, fd) ? std::pair{c, fc} : std::pair{d, fd};
}

template <typename F>
std::pair<double, double> golden_section_minimize(F&& f, double lo, double hi,
                                                  double rel_tol = 1e-10, int max_iter = 200) {
  return golden_section_minimize(std::forward<F>(f), lo, hi, rel_tol, 0.0, max_iter,
                                 [](double x, double y) { return x < y; });
}

}  // namespace levnoise
