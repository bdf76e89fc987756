#include "aperture/image.hpp"

namespace aperture {

ImageD luma(const ColorImage& rgb) {
  ImageD out(rgb.width(), rgb.height());
  auto r = rgb[0].pixels();
  auto g = rgb[1].pixels();
  auto b = rgb[2].pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

ImageD crop(const ImageD& image, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > image.width() ||
      y0 + h > image.height()) {
    throw InvalidArgument("crop rectangle outside the image");
  }
  ImageD out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = image(x0 + x, y0 + y);
  return out;
}

}  // namespace aperture
