#include "ssue/observability.hpp"

#include "ssue/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ssue {

namespace {

void normalize(std::vector<double> &values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
}

double max_spacing(const std::vector<double> &values) {
  double gap = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    gap = std::max(gap, values[i] - values[i - 1]);
  }
  return gap;
}

} // namespace

DeltaGrid DeltaGrid::uniform(const UncertaintyDomain &domain,
                             int points_per_interval) {
  if (points_per_interval < 1) {
    throw ContractError("delta grid needs at least one point per interval");
  }
  DeltaGrid grid;
  double spacing = 0.0;
  for (const auto &iv : domain.intervals()) {
    if (iv.lo == iv.hi || points_per_interval == 1) {
      grid.values.push_back(iv.lo == iv.hi ? iv.lo : 0.5 * (iv.lo + iv.hi));
      continue;
    }
    const double step = (iv.hi - iv.lo) / (points_per_interval - 1);
    spacing = std::max(spacing, step);
    for (int i = 0; i < points_per_interval; ++i) {
      grid.values.push_back(i == points_per_interval - 1 ? iv.hi
                                                         : iv.lo + i * step);
    }
  }
  normalize(grid.values);
  grid.resolution = spacing;
  return grid;
}

DeltaGrid DeltaGrid::from_values(std::vector<double> values,
                                 const UncertaintyDomain &domain) {
  for (double v : values) {
    if (!domain.contains(v)) {
      throw ContractError("delta grid value " + std::to_string(v) +
                          " lies outside the uncertainty domain");
    }
  }
  return from_values(std::move(values));
}

DeltaGrid DeltaGrid::from_values(std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ContractError("delta grid values must be finite");
    }
  }
  DeltaGrid grid;
  grid.values = std::move(values);
  normalize(grid.values);
  grid.resolution = max_spacing(grid.values);
  return grid;
}

bool DeltaGrid::contains_zero() const noexcept {
  return std::find(values.begin(), values.end(), 0.0) != values.end();
}

double RankTolerance::threshold(const Vector &singular_values, Index rows,
                                Index cols) const {
  const double sigma_max =
      singular_values.size() ? singular_values.maxCoeff() : 0.0;
  if (kind == Kind::absolute) {
    return value;
  }
  if (value > 0.0) {
    return value * sigma_max;
  }
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

std::string RankTolerance::describe() const {
  std::ostringstream os;
  if (kind == Kind::absolute) {
    os << "absolute:" << value;
  } else if (value > 0.0) {
    os << "relative:" << value;
  } else {
    os << "relative:default";
  }
  return os.str();
}

Index numerical_rank(const Matrix &m, const RankTolerance &tol) {
  if (m.size() == 0) {
    return 0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector &s = svd.singularValues();
  const double thr = tol.threshold(s, m.rows(), m.cols());
  return static_cast<Index>((s.array() > thr).count());
}

Matrix stack_observability(double delta, const LocationMatrix &loc,
                           const Matrix &A, const Matrix &C, int k) {
  const Index n = A.rows();
  if (k < 0) {
    throw ContractError("stack_observability: k must be >= 0");
  }
  if (A.cols() != n || loc.dim() != n || C.cols() != n) {
    throw ContractError("stack_observability: dimension mismatch");
  }
  const Index p = C.rows();
  const Matrix dynamics = A + delta * loc.entries();
  Matrix out(p * (k + 1), n);
  Matrix block = C;
  for (int j = 0; j <= k; ++j) {
    out.middleRows(j * p, p) = block;
    block = block * dynamics;
  }
  return out;
}

Index pair_rank(const Hypothesis &first, const Hypothesis &second,
                const Matrix &A, const Matrix &C, const LocationSet &locations,
                int k, const RankTolerance &tol) {
  const Matrix a =
      stack_observability(first.delta, locations[first.location], A, C, k);
  const Matrix b =
      stack_observability(second.delta, locations[second.location], A, C, k);
  Matrix joint(a.rows(), a.cols() + b.cols());
  joint << a, b;
  return numerical_rank(joint, tol);
}

ObservabilityReport pairwise_rank_test(const Matrix &A, const Matrix &C,
                                       const LocationSet &locations,
                                       const DeltaGrid &grid, int K,
                                       const RankTolerance &tol) {
  if (K < 1) {
    throw ContractError("pairwise_rank_test: horizon K must be >= 1");
  }
  if (grid.values.empty()) {
    throw ContractError("pairwise_rank_test: empty delta grid");
  }
  const Index n = A.rows();
  const Index p = C.rows();
  const Index required = 2 * n;

  ObservabilityReport report;
  report.horizon_tested = K;
  report.tolerance = tol;
  report.grid = grid;

  if (grid.contains_zero() && locations.size() > 1) {
    report.warnings.push_back(
        "delta = 0 is on the grid: all location hypotheses coincide there, so "
        "rank 2n is impossible for pairs at delta = 0 with distinct locations");
  }

  std::vector<Hypothesis> hyps;
  std::vector<Matrix> stacks;
  for (double d : grid.values) {
    for (std::size_t m = 0; m < locations.size(); ++m) {
      hyps.push_back({d, m});
      stacks.push_back(stack_observability(d, locations[m], A, C, K));
    }
  }

  auto rank_at = [&](std::size_t i, std::size_t j, int k) {
    const Index rows = (k + 1) * p;
    Matrix joint(rows, 2 * n);
    joint << stacks[i].topRows(rows), stacks[j].topRows(rows);
    return numerical_rank(joint, tol);
  };

  // Rank is non-decreasing in k, so each pair needs its rank at K and, if it
  // passes, a bisection for its first passing horizon.
  int worst_first_pass = 1;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    for (std::size_t j = i + 1; j < hyps.size(); ++j) {
      ++report.pairs_tested;
      const Index rank_k = rank_at(i, j, K);
      if (rank_k < required) {
        report.failures.push_back({hyps[i], hyps[j], rank_k, required});
        continue;
      }
      int lo = 1;
      int hi = K;
      while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (rank_at(i, j, mid) >= required) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      worst_first_pass = std::max(worst_first_pass, lo);
    }
  }
  if (report.failures.empty() && report.pairs_tested > 0) {
    report.smallest_passing_N = worst_first_pass;
  }
  if (report.pairs_tested == 0) {
    report.warnings.push_back("grid x locations holds a single hypothesis; "
                              "no pairs to test");
  }
  return report;
}

Reconstruction reconstruct(const Vector &y_stacked, const Matrix &A,
                           const Matrix &C, const LocationSet &locations,
                           const DeltaGrid &grid, double tol) {
  const Index p = C.rows();
  if (y_stacked.size() == 0 || y_stacked.size() % p != 0) {
    throw ContractError("reconstruct: stacked output length is not a "
                        "multiple of the output dimension");
  }
  if (grid.values.empty()) {
    throw ContractError("reconstruct: empty delta grid");
  }
  const double norm = y_stacked.norm();
  if (norm == 0.0) {
    throw ExcitationError("reconstruct: output sequence is identically zero; "
                          "every candidate is indistinguishable");
  }
  const int k = static_cast<int>(y_stacked.size() / p) - 1;

  std::optional<Reconstruction> best;
  double best_rejected = std::numeric_limits<double>::infinity();
  for (double d : grid.values) {
    for (std::size_t m = 0; m < locations.size(); ++m) {
      const Matrix o = stack_observability(d, locations[m], A, C, k);
      const Eigen::ColPivHouseholderQR<Matrix> qr(o);
      const Vector x0 = qr.solve(y_stacked);
      const double residual = (o * x0 - y_stacked).norm() / norm;
      if (residual > tol) {
        best_rejected = std::min(best_rejected, residual);
        continue;
      }
      if (!best || residual < best->residual) {
        best = Reconstruction{x0, d, m, residual};
      }
    }
  }
  if (!best) {
    std::ostringstream os;
    os << "reconstruct: no grid candidate within tolerance " << tol
       << " (best relative residual " << best_rejected << ")";
    throw NoMatchError(os.str());
  }
  return *best;
}

} // namespace ssue
