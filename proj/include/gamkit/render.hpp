#pragma once

#include <string>

#include "gamkit/types.hpp"

namespace gamkit {

// Map a [0,1] grid through a perceptually uniform colormap to RGB in [0,1].
// Supported names: "viridis", "inferno".
Tensor3<double> colorize(const Matd& grid, const std::string& cmap);

// Blend the colorized map over the image: (1-alpha) * image + alpha * color.
// Single-channel images are broadcast to gray RGB first.
Tensor3<double> overlay(const Tensor3<double>& image, const Matd& grid,
                        const std::string& cmap, double alpha);

}  // namespace gamkit
