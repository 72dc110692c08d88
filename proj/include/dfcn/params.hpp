#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dfcn/matrix.hpp"

namespace dfcn {

/// Named, mutable view over a model's learnable matrices in a fixed order.
using ParamList = std::vector<std::pair<std::string, Matrix*>>;
using ConstParamList = std::vector<std::pair<std::string, const Matrix*>>;

}  // namespace dfcn
