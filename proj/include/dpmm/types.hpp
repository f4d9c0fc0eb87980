#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace dpmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One vector per agent; agent i owns entry i.
using BlockVec = std::vector<Vec>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace dpmm
