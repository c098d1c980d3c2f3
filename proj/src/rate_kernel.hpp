#pragma once

#include <cstddef>

namespace nanonet::detail {

/// out[i] = x[i] / (exp(x[i]) - 1), evaluated without overflow for any finite x.
void rate_shapes(const double* x, double* out, std::size_t n);

}  // namespace nanonet::detail
