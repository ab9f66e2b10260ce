#pragma once

#include "dynclean/image.hpp"

namespace dynclean {

// sRGB (D65) <-> CIE L*a*b*.

Lab rgb_to_lab(Rgb8 rgb);
Rgb8 lab_to_rgb(const Lab& lab);

LabImage rgb_to_lab(const RgbImage& rgb);
RgbImage lab_to_rgb(const LabImage& lab);

} // namespace dynclean
