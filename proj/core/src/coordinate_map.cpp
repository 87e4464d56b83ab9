#include "rokf/coordinate_map.hpp"

#include "rokf/psd.hpp"

namespace rokf {

CoordinateMap::CoordinateMap(const Mat& gram)
    : t_(chol_upper(gram)),
      t_inv_(t_.triangularView<Eigen::Upper>().solve(
          Mat::Identity(gram.rows(), gram.cols()))) {}

} // namespace rokf
