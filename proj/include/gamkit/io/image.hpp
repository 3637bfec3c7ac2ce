#pragma once

#include <string>

#include "gamkit/types.hpp"

namespace gamkit::io {

// PNG in, channels x rows x cols in [0,1]. Grayscale files come back with one
// channel, everything else as RGB; alpha is stripped.
Tensor3<double> read_png(const std::string& path);

void write_png_gray(const std::string& path, const Matd& gray);
void write_png_rgb(const std::string& path, const Tensor3<double>& rgb);

}  // namespace gamkit::io
