#pragma once

// Static SVG phase portraits of one analysed study point, with every layer
// also exported as CSV.

#include <filesystem>
#include <string>
#include <vector>

#include "inverter_doa/scenario.hpp"

namespace idoa {

struct PortraitOptions {
  int size_px = 640;
  int margin_px = 64;
  int circle_samples = 256;
};

/// Plot window: square around the post-fault SEP (pre-fault SEP, or the origin, when absent).
struct PortraitWindow {
  State2 center{};
  double half_width = 3.141592653589793;
};

PortraitWindow portrait_window(const PointResult& p);

std::string render_portrait_svg(const PointResult& p, const PortraitOptions& opt = {});

/// Writes `<stem>.svg` and `<stem>_<layer>.csv` into `dir`. Returns every file written.
std::vector<std::filesystem::path> write_portrait(const PointResult& p, const std::filesystem::path& dir,
                                                  const std::string& stem, const PortraitOptions& opt = {});

}  // namespace idoa
