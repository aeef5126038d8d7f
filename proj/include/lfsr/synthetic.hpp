#ifndef LFSR_SYNTHETIC_HPP
#define LFSR_SYNTHETIC_HPP

#include "lfsr/io.hpp"

#include <cstdint>
#include <string>

namespace lfsr {

/// Piecewise-constant discs and boxes over a mid-gray field, plus a faint
/// grating. Deterministic in `seed`.
Image<float> shapes_texture(Index rows, Index cols, std::uint64_t seed);

/// Constant-disparity scene of `size` x `size` views rendered from a shapes
/// texture sized so that the cropped output is exactly `size`.
Scene make_synthetic_scene(Index size, Index angular_rows, Index angular_cols, double disparity, std::uint64_t seed,
                           const std::string& name = "synthetic");

}  // namespace lfsr

#endif  // LFSR_SYNTHETIC_HPP
