#pragma once

#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "owtsim/spectral.hpp"

namespace owtsim {

struct FddMode {
  double frequency_hz = 0;
  int line = 0;            // grid index of the peak
  double peak_sigma = 0;   // first singular value at the peak, signal^2/Hz
  Eigen::VectorXcd shape;  // largest entry real positive with unit magnitude
};

struct FddResult {
  std::vector<FddMode> modes;
};

// Modal assurance criterion between two (possibly complex) shape vectors.
inline double mac(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  if (a.size() != b.size() || a.size() == 0) throw ConfigError("mac: size mismatch");
  double num = std::norm(a.dot(b));  // |a^H b|^2
  double den = a.squaredNorm() * b.squaredNorm();
  if (den == 0) throw ConfigError("mac: zero shape");
  return num / den;
}

inline double mac(const VecX& a, const VecX& b) {
  return mac(Eigen::VectorXcd(a.cast<std::complex<double>>()),
             Eigen::VectorXcd(b.cast<std::complex<double>>()));
}

// Frequency-domain decomposition: per line, the first singular value of the
// CSD matrix; in each search band the natural frequency is the interior line
// maximizing it, and the shape is the matching first singular vector.
inline FddResult fdd_identify(const CsdMatrix& csd,
                              const std::vector<std::pair<double, double>>& bands) {
  if (csd.lines.empty() || csd.frequency_hz.size() == 0)
    throw ConfigError("fdd_identify: empty CSD");
  if (bands.empty()) throw ConfigError("fdd_identify: no search bands");
  const int n_lines = static_cast<int>(csd.lines.size());
  const double f_max = csd.frequency_hz[n_lines - 1];

  FddResult result;
  for (const auto& [f_lo, f_hi] : bands) {
    if (!(f_lo < f_hi) || f_lo < 0 || f_hi > f_max + 1e-12)
      throw ConfigError("fdd_identify: band [" + format_double(f_lo) + ", " +
                        format_double(f_hi) + "] Hz outside the grid");
    int lo = n_lines, hi = -1;
    for (int k = 0; k < n_lines; ++k) {
      if (csd.frequency_hz[k] >= f_lo - 1e-12 && csd.frequency_hz[k] <= f_hi + 1e-12) {
        lo = std::min(lo, k);
        hi = std::max(hi, k);
      }
    }
    if (hi - lo < 2)
      throw ConfigError("fdd_identify: band needs at least three grid lines");

    std::vector<double> sigma1(hi - lo + 1);
    std::vector<Eigen::VectorXcd> u1(hi - lo + 1);
    parallel_for(hi - lo + 1, [&](int i) {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(csd.lines[lo + i], Eigen::ComputeThinU);
      sigma1[i] = svd.singularValues()[0];
      u1[i] = svd.matrixU().col(0);
    });

    int best = 0;
    for (int i = 1; i < static_cast<int>(sigma1.size()); ++i)
      if (sigma1[i] > sigma1[best]) best = i;
    if (best == 0 || best == static_cast<int>(sigma1.size()) - 1)
      throw SolverError("fdd_identify: no interior peak in [" + format_double(f_lo) +
                        ", " + format_double(f_hi) + "] Hz");

    FddMode mode;
    mode.line = lo + best;
    mode.frequency_hz = csd.frequency_hz[mode.line];
    mode.peak_sigma = sigma1[best];
    mode.shape = u1[best];
    int arg_max = 0;
    for (int i = 1; i < mode.shape.size(); ++i)
      if (std::abs(mode.shape[i]) > std::abs(mode.shape[arg_max])) arg_max = i;
    std::complex<double> pivot = mode.shape[arg_max];
    if (std::abs(pivot) == 0)
      throw SolverError("fdd_identify: degenerate singular vector");
    mode.shape *= std::conj(pivot) / (std::abs(pivot) * std::abs(pivot));
    result.modes.push_back(std::move(mode));
  }
  return result;
}

}  // namespace owtsim
