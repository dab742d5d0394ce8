/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <cmath>
#include <stdexcept>

namespace rcr {

template <typename Scalar>
struct GoldenSectionResult {
  Scalar x;
  Scalar value;
  int iterations;
  Scalar final_width;  ///< bracket width at termination
};

/// Minimize a unimodal function on [lo, hi] by golden-section search.
/// Shrinks the bracket until its width drops below `tol`, then returns the
/// best evaluated point.
template <typename Scalar, typename F>
GoldenSectionResult<Scalar> golden_section_minimize(F&& f, Scalar lo, Scalar hi,
                                                    Scalar tol) {
  if (!(lo < hi)) throw std::invalid_argument("golden section: lo must be < hi");
  if (!(tol > Scalar(0))) throw std::invalid_argument("golden section: tol must be > 0");

  const Scalar inv_phi = (std::sqrt(Scalar(5)) - 1) / 2;  // 0.618...
  Scalar a = lo, b = hi;
  Scalar x1 = b - inv_phi * (b - a);
  Scalar x2 = a + inv_phi * (b - a);
  Scalar f1 = f(x1), f2 = f(x2);
  int iterations = 0;
  while (b - a > tol && iterations < 200) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
    ++iterations;
  }
  GoldenSectionResult<Scalar> result;
  result.x = f1 <= f2 ? x1 : x2;
  result.value = f1 <= f2 ? f1 : f2;
  result.iterations = iterations;
  result.final_width = b - a;
  return result;
}

}  // namespace rcr
