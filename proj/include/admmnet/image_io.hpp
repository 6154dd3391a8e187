#pragma once

// 8-bit binary PGM export of magnitude images.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "admmnet/grid.hpp"

namespace admmnet {

/// Writes |img| scaled linearly from [0, scale] to [0, 255]. scale <= 0 means max |img|.
inline void write_pgm(const std::string& path, const ComplexGrid& img, double scale = 0.0) {
  if (!(scale > 0.0)) {
    scale = 0.0;
    for (const auto& v : img.data()) scale = std::max(scale, std::abs(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  for (const auto& v : img.data()) {
    const double t = scale > 0.0 ? std::abs(v) / scale : 0.0;
    f.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)))));
  }
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace admmnet
