#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "tdm/autodiff.hpp"

namespace tdm {

using Rng = std::mt19937_64;

/// Sample set, one point per row.
using Samples = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ad::Tensor to_tensor(const Samples& s, bool requires_grad = false);
Samples to_samples(const ad::Tensor& t);

/// n x d matrix of independent standard normals.
Samples standard_normal(std::size_t n, std::size_t d, Rng& rng);

}  // namespace tdm
