#pragma once
#include <cstdint>
#include <span>
#include <vector>

#include "cpv/errors.hpp"
#include "cpv/parallel.hpp"
#include "cpv/sensor.hpp"

namespace cpv {

/// H x W x N grid of quantized first-photon timestamps, frame-major
/// ([frame][row][col], the layout of the .spf file format). Each entry is a
/// bin index in [0, bins_per_frame]; bins_per_frame itself is the sentinel
/// for "no detection in this frame".
class PhotonFrameTensor {
 public:
  PhotonFrameTensor() = default;
  PhotonFrameTensor(int width, int height, std::size_t n_frames, SensorConfig config)
      : width_(width), height_(height), n_frames_(n_frames), config_(config) {
    config_.validate();
    if (width <= 0 || height <= 0) throw InputError("PhotonFrameTensor: empty spatial dims");
    data_.assign(static_cast<std::size_t>(width) * height * n_frames,
                 static_cast<uint16_t>(config_.bins_per_frame));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t n_frames() const { return n_frames_; }
  std::size_t n_pixels() const { return static_cast<std::size_t>(width_) * height_; }
  const SensorConfig& config() const { return config_; }
  uint16_t sentinel() const { return static_cast<uint16_t>(config_.bins_per_frame); }

  uint16_t bin(std::size_t frame, int row, int col) const { return data_[idx(frame, row, col)]; }
  void set_bin(std::size_t frame, int row, int col, uint16_t b) {
    if (b > config_.bins_per_frame) throw InputError("PhotonFrameTensor: bin index above sentinel");
    data_[idx(frame, row, col)] = b;
  }
  bool detected(std::size_t frame, int row, int col) const {
    return bin(frame, row, col) != sentinel();
  }

  /// One full frame, row-major, W*H entries.
  std::span<const uint16_t> frame(std::size_t f) const {
    return {data_.data() + f * n_pixels(), n_pixels()};
  }
  std::span<uint16_t> frame(std::size_t f) {
    return {data_.data() + f * n_pixels(), n_pixels()};
  }

  /// Per-pixel time series (strided gather; fine for single pixels, use
  /// build_interarrival_all for whole-array work).
  std::vector<uint16_t> pixel_bins(int row, int col) const {
    std::vector<uint16_t> out(n_frames_);
    const std::size_t stride = n_pixels();
    const uint16_t* p = data_.data() + static_cast<std::size_t>(row) * width_ + col;
    for (std::size_t f = 0; f < n_frames_; ++f) out[f] = p[f * stride];
    return out;
  }

  uint64_t total_detections() const {
    uint64_t n = 0;
    for (uint16_t b : data_) n += (b != sentinel());
    return n;
  }

  std::vector<uint16_t>& raw() { return data_; }
  const std::vector<uint16_t>& raw() const { return data_; }

 private:
  std::size_t idx(std::size_t frame, int row, int col) const {
    return (frame * height_ + row) * width_ + col;
  }
  int width_ = 0;
  int height_ = 0;
  std::size_t n_frames_ = 0;
  SensorConfig config_;
  std::vector<uint16_t> data_;
};

/// Binary detect/no-detect frames (quanta image sensor readout), same
/// layout as PhotonFrameTensor.
class QisFrameTensor {
 public:
  QisFrameTensor() = default;
  QisFrameTensor(int width, int height, std::size_t n_frames, SensorConfig config)
      : width_(width), height_(height), n_frames_(n_frames), config_(config) {
    config_.validate();
    if (width <= 0 || height <= 0) throw InputError("QisFrameTensor: empty spatial dims");
    data_.assign(static_cast<std::size_t>(width) * height * n_frames, 0u);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t n_frames() const { return n_frames_; }
  std::size_t n_pixels() const { return static_cast<std::size_t>(width_) * height_; }
  const SensorConfig& config() const { return config_; }

  uint8_t count(std::size_t frame, int row, int col) const { return data_[idx(frame, row, col)]; }
  void set_count(std::size_t frame, int row, int col, uint8_t v) {
    if (v > 1) throw InputError("QisFrameTensor: values must be binary");
    data_[idx(frame, row, col)] = v;
  }

  std::span<const uint8_t> frame(std::size_t f) const {
    return {data_.data() + f * n_pixels(), n_pixels()};
  }
  std::span<uint8_t> frame(std::size_t f) {
    return {data_.data() + f * n_pixels(), n_pixels()};
  }

  std::vector<uint8_t> pixel_counts(int row, int col) const {
    std::vector<uint8_t> out(n_frames_);
    const std::size_t stride = n_pixels();
    const uint8_t* p = data_.data() + static_cast<std::size_t>(row) * width_ + col;
    for (std::size_t f = 0; f < n_frames_; ++f) out[f] = p[f * stride];
    return out;
  }

  std::vector<uint8_t>& raw() { return data_; }
  const std::vector<uint8_t>& raw() const { return data_; }

 private:
  std::size_t idx(std::size_t frame, int row, int col) const {
    return (frame * height_ + row) * width_ + col;
  }
  int width_ = 0;
  int height_ = 0;
  std::size_t n_frames_ = 0;
  SensorConfig config_;
  std::vector<uint8_t> data_;
};

/// n_i = 1 iff a photon was detected in that frame.
inline QisFrameTensor strip_timing(const PhotonFrameTensor& t) {
  QisFrameTensor q(t.width(), t.height(), t.n_frames(), t.config());
  const uint16_t sentinel = t.sentinel();
  const auto& src = t.raw();
  auto& dst = q.raw();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] != sentinel) ? 1u : 0u;
  return q;
}

/// Per-pixel sequence of inter-detection durations. Frames without a
/// detection add their full period to the next detected photon, so each
/// measurement is an i.i.d. exponential sample under constant flux. Empty
/// frames after the last detection are kept separately as trailing dead
/// time. Durations are carried both in seconds (for likelihoods) and in
/// exact integer bins (for conservation bookkeeping): the bin ledger obeys
///   sum(measurement_bins) + trailing_bins + sum(post-detection remainders)
///     = n_frames * bins_per_frame
/// A detection in bin 0 of the very first covered frame would yield a
/// zero-length measurement; its seconds value is clamped to half a bin so
/// the exponential likelihood stays finite. The bin ledger keeps the 0.
struct InterArrivalSeries {
  std::vector<double> measurements;        // seconds, > 0
  std::vector<uint64_t> measurement_bins;  // exact, may contain 0
  std::vector<uint32_t> frame_index_of;    // terminating photon frame
  uint64_t trailing_bins = 0;
  std::size_t n_frames = 0;
  SensorConfig config;

  std::size_t size() const { return measurements.size(); }
  double trailing_dead_time() const { return static_cast<double>(trailing_bins) * config.bin_width; }
};

/// Streaming builder so whole-array extraction can sweep the tensor once
/// in frame order instead of gathering strided pixel columns.
class InterArrivalBuilder {
 public:
  explicit InterArrivalBuilder(SensorConfig config) { series_.config = config; }

  void push(uint16_t bin) {
    const uint32_t B = series_.config.bins_per_frame;
    if (bin > B) throw InputError("to_interarrival: bin index above sentinel");
    if (bin == B) {
      acc_bins_ += B;
    } else {
      const uint64_t x_bins = acc_bins_ + bin;
      series_.measurement_bins.push_back(x_bins);
      // keep the likelihood well defined for a bin-0 detection at the
      // origin of the accumulation window
      const double x = x_bins > 0 ? static_cast<double>(x_bins) * series_.config.bin_width
                                  : 0.5 * series_.config.bin_width;
      series_.measurements.push_back(x);
      series_.frame_index_of.push_back(static_cast<uint32_t>(frame_));
      acc_bins_ = 0;
    }
    ++frame_;
  }

  InterArrivalSeries finish() {
    series_.trailing_bins = acc_bins_;
    series_.n_frames = frame_;
    return std::move(series_);
  }

 private:
  InterArrivalSeries series_;
  uint64_t acc_bins_ = 0;
  std::size_t frame_ = 0;
};

inline InterArrivalSeries to_interarrival(std::span<const uint16_t> frame_bins,
                                          const SensorConfig& config) {
  InterArrivalBuilder b(config);
  for (uint16_t bin : frame_bins) b.push(bin);
  return b.finish();
}

inline InterArrivalSeries to_interarrival(const PhotonFrameTensor& t, int row, int col) {
  const auto bins = t.pixel_bins(row, col);
  return to_interarrival(bins, t.config());
}

/// All pixels at once: one frame-major sweep per worker chunk, cache
/// friendly for long captures. Result is row-major over pixels.
inline std::vector<InterArrivalSeries> build_interarrival_all(const PhotonFrameTensor& t,
                                                              unsigned threads = 0) {
  const std::size_t n_px = t.n_pixels();
  std::vector<InterArrivalSeries> out(n_px);
  parallel_chunks(
      n_px,
      [&](std::size_t px_begin, std::size_t px_end) {
        std::vector<InterArrivalBuilder> builders;
        builders.reserve(px_end - px_begin);
        for (std::size_t p = px_begin; p < px_end; ++p)
          builders.emplace_back(t.config());
        for (std::size_t f = 0; f < t.n_frames(); ++f) {
          const auto fr = t.frame(f);
          for (std::size_t p = px_begin; p < px_end; ++p)
            builders[p - px_begin].push(fr[p]);
        }
        for (std::size_t p = px_begin; p < px_end; ++p)
          out[p] = builders[p - px_begin].finish();
      },
      threads);
  return out;
}

}  // namespace cpv
