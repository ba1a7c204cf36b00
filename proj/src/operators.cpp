#include "reglearn/operators.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace reglearn {

SparseOperator assemble_helmholtz(const Grid& grid, Real gamma) {
  if (!(gamma > 0)) {
    throw std::invalid_argument("assemble_helmholtz: gamma must be positive");
  }
  const int n = grid.n;
  const Real inv_h2 = Real(1) / (grid.h * grid.h);
  std::vector<Triplet> entries;
  entries.reserve(std::size_t(grid.num_interior()) * 5);
  for (int i = 1; i <= n - 2; ++i) {
    for (int j = 1; j <= n - 2; ++j) {
      const Index row = grid.interior_index(i, j);
      entries.emplace_back(row, row, gamma * 4 * inv_h2 + 1);
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int ii = i + di[k];
        const int jj = j + dj[k];
        if (grid.is_interior(ii, jj)) {
          entries.emplace_back(row, grid.interior_index(ii, jj), -gamma * inv_h2);
        }
      }
    }
  }
  SparseOperator op;
  op.matrix.resize(grid.num_interior(), grid.num_interior());
  op.matrix.setFromTriplets(entries.begin(), entries.end());
  op.matrix.makeCompressed();
  op.symmetric = true;
  return op;
}

SparseOperator assemble_diffusion_p1(const Grid& grid, const ScalarField& coeff) {
  if (coeff.support != FieldSupport::AllNodes || !(coeff.grid == grid)) {
    throw std::invalid_argument("assemble_diffusion_p1: coefficient must be an AllNodes field on the same grid");
  }
  if ((coeff.values.array() <= 0).any()) {
    throw std::invalid_argument(
        "assemble_diffusion_p1: coefficient must be strictly positive at every node "
        "(iterate escaped positivity; apply the smoothed projection first)");
  }
  const int n = grid.n;
  std::vector<int> interior_of_all(std::size_t(grid.num_all()), -1);
  for (int i = 1; i <= n - 2; ++i) {
    for (int j = 1; j <= n - 2; ++j) {
      interior_of_all[std::size_t(grid.all_index(i, j))] = int(grid.interior_index(i, j));
    }
  }

  std::vector<Triplet> entries;
  entries.reserve(std::size_t(grid.num_interior()) * 9);
  fem::for_each_triangle(grid, [&](const fem::Triangle& tri) {
    const Real cbar = (coeff.values[tri.node[0]] + coeff.values[tri.node[1]] + coeff.values[tri.node[2]]) / 3;
    for (int a = 0; a < 3; ++a) {
      const int ra = interior_of_all[std::size_t(tri.node[a])];
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int cb = interior_of_all[std::size_t(tri.node[b])];
        if (cb < 0) continue;
        entries.emplace_back(ra, cb, cbar * tri.stiffness[a][b]);
      }
    }
  });

  SparseOperator op;
  op.matrix.resize(grid.num_interior(), grid.num_interior());
  op.matrix.setFromTriplets(entries.begin(), entries.end());
  op.matrix.makeCompressed();
  op.symmetric = true;
  return op;
}

FieldSupport penalty_support(int which) {
  switch (which) {
    case 1: return FieldSupport::AllNodes;
    case 2: return FieldSupport::EdgesX1;
    case 3: return FieldSupport::EdgesX2;
    default: throw std::invalid_argument("penalty operator index must be 1, 2 or 3");
  }
}

ScalarField apply_penalty(const Grid& grid, int which, const ScalarField& u) {
  if (u.support != FieldSupport::AllNodes || !(u.grid == grid)) {
    throw std::invalid_argument("apply_penalty: expected an AllNodes field on the same grid");
  }
  const int n = grid.n;
  const Real inv_h = Real(1) / grid.h;
  ScalarField out(grid, penalty_support(which));
  switch (which) {
    case 1:
      out.values = u.values;
      break;
    case 2:
      for (int i = 0; i <= n - 2; ++i) {
        for (int j = 0; j <= n - 1; ++j) {
          out.values[Index(i) * n + j] =
              (u.values[grid.all_index(i + 1, j)] - u.values[grid.all_index(i, j)]) * inv_h;
        }
      }
      break;
    case 3:
      for (int i = 0; i <= n - 1; ++i) {
        for (int j = 0; j <= n - 2; ++j) {
          out.values[Index(i) * (n - 1) + j] =
              (u.values[grid.all_index(i, j + 1)] - u.values[grid.all_index(i, j)]) * inv_h;
        }
      }
      break;
  }
  return out;
}

ScalarField apply_penalty_adjoint(const Grid& grid, int which, const ScalarField& w) {
  const FieldSupport expected = penalty_support(which);
  if (w.support != expected || !(w.grid == grid)) {
    throw std::invalid_argument(std::string("apply_penalty_adjoint: expected support ") +
                                support_name(expected));
  }
  const int n = grid.n;
  const Real inv_h = Real(1) / grid.h;
  ScalarField out(grid, FieldSupport::AllNodes);
  switch (which) {
    case 1:
      out.values = w.values;
      break;
    case 2:
      for (int i = 0; i <= n - 1; ++i) {
        for (int j = 0; j <= n - 1; ++j) {
          Real v = 0;
          if (i >= 1) v += w.values[Index(i - 1) * n + j];
          if (i <= n - 2) v -= w.values[Index(i) * n + j];
          out.values[grid.all_index(i, j)] = v * inv_h;
        }
      }
      break;
    case 3:
      for (int i = 0; i <= n - 1; ++i) {
        for (int j = 0; j <= n - 1; ++j) {
          Real v = 0;
          if (j >= 1) v += w.values[Index(i) * (n - 1) + j - 1];
          if (j <= n - 2) v -= w.values[Index(i) * (n - 1) + j];
          out.values[grid.all_index(i, j)] = v * inv_h;
        }
      }
      break;
  }
  return out;
}

SparseMatrix penalty_matrix(const Grid& grid, int which) {
  const int n = grid.n;
  const Real inv_h = Real(1) / grid.h;
  std::vector<Triplet> entries;
  SparseMatrix k(support_size(grid, penalty_support(which)), grid.num_all());
  switch (which) {
    case 1:
      k.setIdentity();
      return k;
    case 2:
      entries.reserve(std::size_t(k.rows()) * 2);
      for (int i = 0; i <= n - 2; ++i) {
        for (int j = 0; j <= n - 1; ++j) {
          const Index row = Index(i) * n + j;
          entries.emplace_back(row, grid.all_index(i + 1, j), inv_h);
          entries.emplace_back(row, grid.all_index(i, j), -inv_h);
        }
      }
      break;
    case 3:
      entries.reserve(std::size_t(k.rows()) * 2);
      for (int i = 0; i <= n - 1; ++i) {
        for (int j = 0; j <= n - 2; ++j) {
          const Index row = Index(i) * (n - 1) + j;
          entries.emplace_back(row, grid.all_index(i, j + 1), inv_h);
          entries.emplace_back(row, grid.all_index(i, j), -inv_h);
        }
      }
      break;
  }
  k.setFromTriplets(entries.begin(), entries.end());
  k.makeCompressed();
  return k;
}

SparseMatrix penalty_gram(const Grid& grid, int which) {
  const SparseMatrix k = penalty_matrix(grid, which);
  SparseMatrix gram = SparseMatrix(k.transpose()) * k;
  gram.makeCompressed();
  return gram;
}

}  // namespace reglearn
