#include "livseg/neural/tensor.hpp"

#include <functional>
#include <numeric>

namespace livseg::neural {

namespace {

std::size_t product(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
        if (d < 0) throw InvalidArgument("tensor dimensions must be non-negative");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)), data(product(shape), fill) {}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != product(shape)) throw InvalidArgument("tensor data length does not match its shape");
}

Tensor pixel_shuffle(const Tensor& x, int r) {
    if (x.shape.size() != 3) throw InvalidArgument("pixel_shuffle expects a (C, H, W) tensor");
    if (r < 1) throw InvalidArgument("pixel_shuffle: upscale factor must be positive");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2), rr = r * r;
    if (c % rr != 0) throw InvalidArgument("pixel_shuffle: channels must be divisible by r^2");
    Tensor out({c / rr, h * r, w * r});
    for (int oc = 0; oc < c / rr; ++oc)
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                const int ic = oc * rr + i * r + j;
                for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w; ++xx)
                        out.data[(static_cast<std::size_t>(oc) * h * r + y * r + i) * w * r + xx * r + j] =
                            x.data[(static_cast<std::size_t>(ic) * h + y) * w + xx];
            }
    return out;
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
    if (x.shape.size() != 3) throw InvalidArgument("pixel_unshuffle expects a (C, H, W) tensor");
    if (r < 1) throw InvalidArgument("pixel_unshuffle: factor must be positive");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2), rr = r * r;
    if (h % r != 0 || w % r != 0) throw InvalidArgument("pixel_unshuffle: spatial dims must be divisible by r");
    Tensor out({c * rr, h / r, w / r});
    for (int oc = 0; oc < c; ++oc)
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                const int ic = oc * rr + i * r + j;
                for (int y = 0; y < h / r; ++y)
                    for (int xx = 0; xx < w / r; ++xx)
                        out.data[(static_cast<std::size_t>(ic) * (h / r) + y) * (w / r) + xx] =
                            x.data[(static_cast<std::size_t>(oc) * h + y * r + i) * w + xx * r + j];
            }
    return out;
}

} // namespace livseg::neural
