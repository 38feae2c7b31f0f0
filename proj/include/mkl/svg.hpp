#pragma once

#include <string>

#include "mkl/harness.hpp"

namespace mkl {

/// Log-log scatter of median errors per method with the fitted slope line and
/// (when present) the predicted slope line. Hand-written SVG markup, no
/// dependencies.
std::string rate_plot_svg(const RateResult& result);

}  // namespace mkl
