#pragma once

#include <complex>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "owtsim/common.hpp"

namespace owtsim {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

enum class SpectralWindow { hann, rectangular };

struct SpectralConfig {
  double sample_rate_hz = 20.0;
  int nperseg = 4096;  // power of two
  double overlap = 0.5;
  SpectralWindow window = SpectralWindow::hann;

  void validate() const {
    if (!(sample_rate_hz > 0)) throw ConfigError("spectral: sample rate must be > 0");
    if (nperseg < 4 || (nperseg & (nperseg - 1)) != 0)
      throw ConfigError("spectral: segment length must be a power of two >= 4");
    if (overlap < 0 || overlap >= 1) throw ConfigError("spectral: overlap must be in [0, 1)");
  }

  int hop() const {
    int h = static_cast<int>(std::lround(nperseg * (1.0 - overlap)));
    return std::max(h, 1);
  }

  int n_lines() const { return nperseg / 2 + 1; }

  double df() const { return sample_rate_hz / nperseg; }
};

struct PsdEstimate {
  VecX frequency_hz;
  VecX psd;  // signal^2 / Hz, one sided
};

// Per-line Hermitian cross-spectral matrices, channel x channel.
struct CsdMatrix {
  VecX frequency_hz;
  std::vector<Eigen::MatrixXcd> lines;

  int n_channels() const { return lines.empty() ? 0 : static_cast<int>(lines[0].rows()); }
};

namespace detail {

inline VecX spectral_window(const SpectralConfig& cfg) {
  VecX w(cfg.nperseg);
  if (cfg.window == SpectralWindow::rectangular) {
    w.setOnes();
  } else {
    for (int i = 0; i < cfg.nperseg; ++i)
      w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / cfg.nperseg));
  }
  return w;
}

// Windowed segment spectra of every channel: result[segment](line, channel).
inline std::vector<Eigen::MatrixXcd> segment_spectra(const std::vector<VecX>& channels,
                                                     const SpectralConfig& cfg) {
  cfg.validate();
  if (channels.empty()) throw ConfigError("spectral: no channels");
  const auto n = channels[0].size();
  for (const auto& c : channels)
    if (c.size() != n) throw ConfigError("spectral: channels must have equal length");
  if (n < cfg.nperseg)
    throw ConfigError("spectral: record of " + std::to_string(n) +
                      " samples shorter than segment length " +
                      std::to_string(cfg.nperseg));

  const VecX w = spectral_window(cfg);
  const int n_ch = static_cast<int>(channels.size());
  std::vector<Eigen::MatrixXcd> spectra;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out(cfg.nperseg);
  std::vector<double> in(cfg.nperseg);
  for (Eigen::Index start = 0; start + cfg.nperseg <= n; start += cfg.hop()) {
    Eigen::MatrixXcd seg(cfg.n_lines(), n_ch);
    for (int c = 0; c < n_ch; ++c) {
      for (int i = 0; i < cfg.nperseg; ++i) in[i] = w[i] * channels[c][start + i];
      fft.fwd(out, in);
      for (int k = 0; k < cfg.n_lines(); ++k) seg(k, c) = out[k];
    }
    spectra.push_back(std::move(seg));
  }
  return spectra;
}

inline double psd_scale(const SpectralConfig& cfg) {
  const VecX w = spectral_window(cfg);
  return 2.0 / (cfg.sample_rate_hz * w.squaredNorm());
}

inline VecX frequency_grid(const SpectralConfig& cfg) {
  VecX f(cfg.n_lines());
  for (int k = 0; k < cfg.n_lines(); ++k) f[k] = k * cfg.df();
  return f;
}

}  // namespace detail

// Welch one-sided PSD with window power compensation. The mean is retained:
// the 0 Hz line carries the static content, and the PSD integral over all
// lines recovers the mean square of the record.
inline PsdEstimate welch_psd(const VecX& signal, const SpectralConfig& cfg) {
  auto spectra = detail::segment_spectra({signal}, cfg);
  const double scale = detail::psd_scale(cfg);
  PsdEstimate est;
  est.frequency_hz = detail::frequency_grid(cfg);
  est.psd = VecX::Zero(cfg.n_lines());
  for (const auto& seg : spectra)
    for (int k = 0; k < cfg.n_lines(); ++k) est.psd[k] += std::norm(seg(k, 0));
  est.psd *= scale / static_cast<double>(spectra.size());
  est.psd[0] *= 0.5;                  // no negative-frequency twin
  est.psd[cfg.n_lines() - 1] *= 0.5;  // Nyquist line
  return est;
}

inline CsdMatrix welch_csd_matrix(const std::vector<VecX>& channels,
                                  const SpectralConfig& cfg) {
  auto spectra = detail::segment_spectra(channels, cfg);
  const int n_ch = static_cast<int>(channels.size());
  const double scale = detail::psd_scale(cfg) / static_cast<double>(spectra.size());

  CsdMatrix csd;
  csd.frequency_hz = detail::frequency_grid(cfg);
  csd.lines.assign(cfg.n_lines(), Eigen::MatrixXcd::Zero(n_ch, n_ch));
  parallel_for(cfg.n_lines(), [&](int k) {
    Eigen::MatrixXcd& s = csd.lines[k];
    for (const auto& seg : spectra)
      for (int i = 0; i < n_ch; ++i)
        for (int j = i; j < n_ch; ++j) s(i, j) += seg(k, i) * std::conj(seg(k, j));
    double edge = (k == 0 || k == cfg.n_lines() - 1) ? 0.5 : 1.0;
    s *= scale * edge;
    for (int i = 0; i < n_ch; ++i) {
      s(i, i) = std::complex<double>(s(i, i).real(), 0.0);
      for (int j = i + 1; j < n_ch; ++j) s(j, i) = std::conj(s(i, j));
    }
  });
  return csd;
}

// Sum of PSD * df over grid lines with f_lo <= f <= f_hi.
inline double band_psd_sum(const VecX& frequency_hz, const VecX& psd, double f_lo,
                           double f_hi) {
  if (frequency_hz.size() != psd.size())
    throw ConfigError("band_psd_sum: grid/PSD size mismatch");
  if (!(f_lo < f_hi)) throw ConfigError("band_psd_sum: need f_lo < f_hi");
  if (frequency_hz.size() < 2) throw ConfigError("band_psd_sum: grid too short");
  const double df = frequency_hz[1] - frequency_hz[0];
  double sum = 0;
  int hits = 0;
  for (Eigen::Index k = 0; k < frequency_hz.size(); ++k) {
    if (frequency_hz[k] >= f_lo - 1e-12 && frequency_hz[k] <= f_hi + 1e-12) {
      sum += psd[k] * df;
      ++hits;
    }
  }
  if (hits == 0)
    throw ConfigError("band_psd_sum: no grid lines inside [" + format_double(f_lo) + ", " +
                      format_double(f_hi) + "] Hz");
  return sum;
}

}  // namespace owtsim
