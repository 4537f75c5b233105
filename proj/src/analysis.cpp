#include "spikemr/analysis.hpp"

#include <cmath>
#include <numbers>

#include "spikemr/errors.hpp"

namespace spikemr::analysis {

std::vector<std::int64_t> bin_rate(std::span<const simjob::SpikeEvent> spikes,
                                   std::int64_t num_ms) {
  if (num_ms < 0) throw ContractError("bin_rate requires a non-negative duration");
  std::vector<std::int64_t> rate(static_cast<std::size_t>(num_ms), 0);
  for (const simjob::SpikeEvent& spike : spikes) {
    if (spike.iter < 0 || spike.iter >= num_ms) {
      throw IntegrityError("spike at iteration " + std::to_string(spike.iter) +
                           " lies outside the analyzed window of " + std::to_string(num_ms) +
                           " ms");
    }
    rate[static_cast<std::size_t>(spike.iter)] += 1;
  }
  return rate;
}

Spectrum rate_spectrum(std::span<const std::int64_t> rate) {
  const std::size_t n = rate.size();
  Spectrum spectrum;
  if (n == 0) return spectrum;

  double mean = 0.0;
  for (std::int64_t r : rate) mean += static_cast<double>(r);
  mean /= static_cast<double>(n);

  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = static_cast<double>(rate[t]) - mean;

  // Plain O(n^2) transform of the real, mean-removed signal: n stays in the
  // hundreds here, so there is nothing to gain from an FFT.
  const std::size_t bins = n / 2 + 1;
  spectrum.freq_hz.resize(bins);
  spectrum.magnitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(t) / static_cast<double>(n);
      re += centered[t] * std::cos(angle);
      im += centered[t] * std::sin(angle);
    }
    spectrum.freq_hz[k] = static_cast<double>(k) * 1000.0 / static_cast<double>(n);
    spectrum.magnitude[k] = std::sqrt(re * re + im * im);
  }
  return spectrum;
}

std::optional<BandPeak> dominant_peak(const Spectrum& spectrum, double lo_hz, double hi_hz) {
  std::optional<BandPeak> best;
  for (std::size_t k = 0; k < spectrum.freq_hz.size(); ++k) {
    const double f = spectrum.freq_hz[k];
    if (f < lo_hz || f > hi_hz) continue;
    if (!best || spectrum.magnitude[k] > best->magnitude) {
      best = BandPeak{f, spectrum.magnitude[k]};
    }
  }
  if (best && best->magnitude <= 0.0) return std::nullopt;  // flat signal: no oscillation
  return best;
}

Summary summarize(std::span<const simjob::SpikeEvent> spikes, std::int64_t num_ms,
                  std::int64_t num_neurons, double lo_hz, double hi_hz) {
  if (num_neurons < 1) throw ContractError("summarize requires at least one neuron");
  Summary summary;
  summary.total_spikes = static_cast<std::int64_t>(spikes.size());
  summary.band_lo_hz = lo_hz;
  summary.band_hi_hz = hi_hz;
  if (num_ms > 0) {
    summary.mean_rate_hz = static_cast<double>(summary.total_spikes) /
                           static_cast<double>(num_neurons) /
                           (static_cast<double>(num_ms) / 1000.0);
  }
  if (summary.total_spikes == 0) return summary;  // silent run: no peak to report

  const std::vector<std::int64_t> rate = bin_rate(spikes, num_ms);
  const Spectrum spectrum = rate_spectrum(rate);
  if (const auto peak = dominant_peak(spectrum, lo_hz, hi_hz)) {
    summary.peak_hz = peak->freq_hz;
  }
  return summary;
}

}  // namespace spikemr::analysis
