#pragma once

#include <vector>

#include "livseg/neural/cnn.hpp"

namespace livseg::neural::detail {

/// Summed BCE over n patches; grad receives the summed gradient.
double batch_gradient(const Cnn3dModel& model, const double* patches, const double* labels, std::size_t n,
                      int workers, std::vector<double>& grad);

} // namespace livseg::neural::detail
