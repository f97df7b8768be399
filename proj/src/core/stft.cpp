#include "stft.hpp"

#include <cmath>

#include "common.hpp"

namespace peakgen {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

void check_args(size_t t, int window_len, int hop) {
  require_config(window_len >= 2 && (window_len & (window_len - 1)) == 0,
                 "stft window length must be a power of two >= 2");
  require_config(static_cast<size_t>(window_len) <= t,
                 "stft window length exceeds signal length");
  require_config(hop >= 1 && hop <= window_len,
                 "stft hop must be in [1, window_len]");
}

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(kTau * i / n);
  return w;
}

// cos/sin tables for bin b, sample n: theta = tau * b * n / N.
struct DftTables {
  int n, bins;
  std::vector<double> c, s;  // [bins, n]
  explicit DftTables(int window_len)
      : n(window_len), bins(window_len / 2 + 1), c(bins * n), s(bins * n) {
    for (int b = 0; b < bins; ++b) {
      for (int i = 0; i < n; ++i) {
        const double th = kTau * b * i / n;
        c[b * n + i] = std::cos(th);
        s[b * n + i] = std::sin(th);
      }
    }
  }
};

}  // namespace

Tensor stft_mag(const std::vector<double>& x, int window_len, int hop) {
  check_args(x.size(), window_len, hop);
  const int frames =
      static_cast<int>((x.size() - window_len) / hop) + 1;
  const DftTables dft(window_len);
  const auto w = hann(window_len);
  Tensor out;
  out.resize({frames, dft.bins});
  std::vector<double> wx(window_len);
  for (int f = 0; f < frames; ++f) {
    const int start = f * hop;
    for (int i = 0; i < window_len; ++i) wx[i] = w[i] * x[start + i];
    for (int b = 0; b < dft.bins; ++b) {
      double re = 0.0, im = 0.0;
      const double* cb = &dft.c[b * window_len];
      const double* sb = &dft.s[b * window_len];
      for (int i = 0; i < window_len; ++i) {
        re += wx[i] * cb[i];
        im -= wx[i] * sb[i];
      }
      out.at(f, b) = std::sqrt(re * re + im * im);
    }
  }
  return out;
}

double stft_sq_distance(const std::vector<double>& x_ref,
                        const std::vector<double>& x_hat, int window_len,
                        int hop, std::vector<double>* d_xhat, double scale) {
  require(x_ref.size() == x_hat.size(), "stft distance length mismatch");
  check_args(x_hat.size(), window_len, hop);
  const int frames =
      static_cast<int>((x_hat.size() - window_len) / hop) + 1;
  const DftTables dft(window_len);
  const auto w = hann(window_len);
  if (d_xhat && d_xhat->size() != x_hat.size()) d_xhat->assign(x_hat.size(), 0.0);

  double loss = 0.0;
  std::vector<double> wr(window_len), wh(window_len);
  for (int f = 0; f < frames; ++f) {
    const int start = f * hop;
    for (int i = 0; i < window_len; ++i) {
      wr[i] = w[i] * x_ref[start + i];
      wh[i] = w[i] * x_hat[start + i];
    }
    for (int b = 0; b < dft.bins; ++b) {
      const double* cb = &dft.c[b * window_len];
      const double* sb = &dft.s[b * window_len];
      double re_r = 0.0, im_r = 0.0, re_h = 0.0, im_h = 0.0;
      for (int i = 0; i < window_len; ++i) {
        re_r += wr[i] * cb[i];
        im_r -= wr[i] * sb[i];
        re_h += wh[i] * cb[i];
        im_h -= wh[i] * sb[i];
      }
      const double m_r = std::sqrt(re_r * re_r + im_r * im_r);
      const double m_h = std::sqrt(re_h * re_h + im_h * im_h);
      const double diff = m_h - m_r;
      loss += diff * diff;
      if (d_xhat && m_h > 0.0) {
        // d|M|/dx[n] = w[n] * (re*cos - im*sin) / |M|, with im = -sum(wx*sin)
        const double g = scale * 2.0 * diff / m_h;
        for (int i = 0; i < window_len; ++i) {
          (*d_xhat)[start + i] += g * (re_h * cb[i] - im_h * sb[i]) * w[i];
        }
      }
    }
  }
  return loss;
}

}  // namespace peakgen
