#include "rate_kernel.hpp"

#include <cmath>

namespace nanonet::detail {

// Built with fast-math so the loop maps onto the vector exp. Lanes with tiny
// |x| take the series branch; their 0/0 from the general branch is discarded.
void rate_shapes(const double* __restrict x, double* __restrict out, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double ax = std::fabs(xi);
    // Clamped so no lane reaches the vector exp's scalar underflow fallback.
    const double y = ax > 700.0 ? 0.0 : std::exp(-std::fmin(ax, 700.0));
    const double num = xi > 0.0 ? ax * y : ax;
    const double general = num / (1.0 - y);
    const double series = 1.0 - 0.5 * xi + xi * xi / 12.0;
    out[i] = ax < 1e-5 ? series : general;
  }
}

}  // namespace nanonet::detail
