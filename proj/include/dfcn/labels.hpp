#pragma once

#include <vector>

namespace dfcn {

/// Cluster or class id per node, each in [0, K).
using Labels = std::vector<int>;

}  // namespace dfcn
