#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mgmrf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;  // compressed column, sorted indices
using Triplet = Eigen::Triplet<double>;

}  // namespace mgmrf
