#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

namespace excurse {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

}  // namespace excurse
