#pragma once

// Dense height x width x channels tensor, channels fastest (HWC). The
// scalar type is a template parameter: float for training/inference
// workloads, double where gradient checks need the extra precision.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wildfire {

template <typename T>
struct Tensor3 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  Tensor3() = default;
  Tensor3(int h, int w, int c, T fill = T(0))
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {
    if (h < 1 || w < 1 || c < 1) throw std::invalid_argument("Tensor3 dims must be >= 1");
  }

  size_t size() const { return data.size(); }

  T& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  T at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Tensor3& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  template <typename U>
  Tensor3<U> cast() const {
    Tensor3<U> out(height, width, channels);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

}  // namespace wildfire
