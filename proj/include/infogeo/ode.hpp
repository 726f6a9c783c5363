#pragma once

// Embedded Dormand-Prince 5(4) Runge-Kutta step.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>

namespace infogeo {

template <std::size_t N>
using OdeState = std::array<double, N>;

struct DormandPrince {
  /// One step of size h from (t, y). Writes the 5th-order solution to y5 and
  /// the difference to the embedded 4th-order solution to err.
  template <std::size_t N, class F>
  static void step(F&& f, double t, const OdeState<N>& y, double h, OdeState<N>& y5, OdeState<N>& err) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeState<N> k1, k2, k3, k4, k5, k6, k7, tmp;
    auto combine = [&](std::initializer_list<std::pair<const OdeState<N>*, double>> terms) {
      for (std::size_t i = 0; i < N; ++i) {
        double s = y[i];
        for (const auto& [k, a] : terms) s += h * a * (*k)[i];
        tmp[i] = s;
      }
      return tmp;
    };
    k1 = f(t, y);
    k2 = f(t + c2 * h, combine({{&k1, a21}}));
    k3 = f(t + c3 * h, combine({{&k1, a31}, {&k2, a32}}));
    k4 = f(t + c4 * h, combine({{&k1, a41}, {&k2, a42}, {&k3, a43}}));
    k5 = f(t + c5 * h, combine({{&k1, a51}, {&k2, a52}, {&k3, a53}, {&k4, a54}}));
    k6 = f(t + h, combine({{&k1, a61}, {&k2, a62}, {&k3, a63}, {&k4, a64}, {&k5, a65}}));
    y5 = combine({{&k1, b1}, {&k3, b3}, {&k4, b4}, {&k5, b5}, {&k6, b6}});
    k7 = f(t + h, y5);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  }

  /// Scaled max-norm of the error estimate.
  template <std::size_t N>
  static double error_norm(const OdeState<N>& y, const OdeState<N>& y5, const OdeState<N>& err, double atol,
                           double rtol) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      m = std::max(m, std::abs(err[i]) / sc);
    }
    return m;
  }
};

}  // namespace infogeo
