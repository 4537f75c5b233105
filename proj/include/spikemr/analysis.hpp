#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikemr/simjob.hpp"

// Firing-rate analysis: per-millisecond population rate, its discrete
// Fourier transform, and the dominant oscillation in a frequency band.
// Sampling is fixed at 1 kHz (one bin per simulated millisecond), no
// windowing, mean removed before transforming.

namespace spikemr::analysis {

// Spikes per 1 ms bin over iterations [0, num_ms). Events outside that
// range raise IntegrityError.
std::vector<std::int64_t> bin_rate(std::span<const simjob::SpikeEvent> spikes,
                                   std::int64_t num_ms);

struct Spectrum {
  std::vector<double> freq_hz;    // bin k -> k * 1000 / n, k = 0 .. n/2
  std::vector<double> magnitude;  // |DFT| of the mean-removed rate
};

Spectrum rate_spectrum(std::span<const std::int64_t> rate);

struct BandPeak {
  double freq_hz = 0.0;
  double magnitude = 0.0;
};

// Highest-magnitude bin with frequency in [lo_hz, hi_hz]; ties keep the
// lowest frequency. Empty when the band holds no bins or no power at all.
std::optional<BandPeak> dominant_peak(const Spectrum& spectrum, double lo_hz, double hi_hz);

struct Summary {
  std::int64_t total_spikes = 0;
  double mean_rate_hz = 0.0;            // per-neuron average firing rate
  std::optional<double> peak_hz;        // dominant band peak, absent if none
  double band_lo_hz = 0.0;
  double band_hi_hz = 0.0;
};

// End-to-end: bin, transform, pick the band peak. `num_ms` must cover all
// spike times; an empty spike list yields no peak.
Summary summarize(std::span<const simjob::SpikeEvent> spikes, std::int64_t num_ms,
                  std::int64_t num_neurons, double lo_hz, double hi_hz);

}  // namespace spikemr::analysis
