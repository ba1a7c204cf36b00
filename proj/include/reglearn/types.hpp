#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace reglearn {

using Real = double;
using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<Real>;
using Triplet = Eigen::Triplet<Real>;

}  // namespace reglearn
