#pragma once
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "cpv/errors.hpp"
#include "cpv/image.hpp"
#include "cpv/parallel.hpp"
#include "cpv/rng.hpp"
#include "cpv/sensor.hpp"
#include "cpv/tensor.hpp"
#include "cpv/transform.hpp"
#include "cpv/warp.hpp"

namespace cpv {

// ============================================================================
// Motion scripts and ground-truth rendering
// ============================================================================

enum class MotionKind { kStatic, kTranslation, kRotation, kRandomShake, kFrameSequence };

/// Recipe for a simulated capture: what the scene does per step and how many
/// photon frames each step supplies.
struct MotionScript {
  MotionKind kind = MotionKind::kStatic;
  std::size_t total_steps = 1;
  std::size_t photons_per_step = 1;  // photon frames generated per step
  uint64_t rng_seed = 0;

  // translation: pixels moved per step
  double step_dx = 0.0, step_dy = 0.0;
  // rotation: degrees per step about the image center
  double step_degrees = 0.0;
  // random shake: per-step translation drawn from discrete uniform
  // [-shake_bound, shake_bound]^2
  int shake_bound = 3;
  // frame_sequence: explicit ground-truth flux images, one per step
  std::vector<FluxImage> frames;

  // rendering: transform at render_factor x resolution, then box-downsample
  int render_factor = 1;
  double background_flux = 0.0;

  void validate() const {
    if (total_steps < 1) throw InputError("MotionScript: total_steps must be >= 1");
    if (photons_per_step < 1) throw InputError("MotionScript: photons_per_step must be >= 1");
    if (render_factor < 1) throw InputError("MotionScript: render_factor must be >= 1");
    if (kind == MotionKind::kRandomShake && shake_bound < 0)
      throw InputError("MotionScript: shake bound must be >= 0");
    if (kind == MotionKind::kFrameSequence && frames.size() != total_steps)
      throw InputError("MotionScript: frame_sequence needs one frame per step");
  }
};

struct FluxSequence {
  std::vector<FluxImage> frames;               // one per step, sensor resolution
  std::vector<EuclideanTransform> trajectory;  // cumulative motion at each step
};

/// Apply the script's motion to the ground-truth flux image, one output
/// frame per step, together with the exact cumulative transform used. The
/// cumulative transform is always applied to the original image (never to a
/// previously warped frame) so resampling blur does not compound.
inline FluxSequence render_flux_sequence(const FluxImage& ground_truth,
                                         const MotionScript& script) {
  script.validate();
  FluxSequence out;
  out.frames.reserve(script.total_steps);
  out.trajectory.reserve(script.total_steps);

  if (script.kind == MotionKind::kFrameSequence) {
    const double cx = (script.frames.front().width() - 1) / 2.0;
    const double cy = (script.frames.front().height() - 1) / 2.0;
    out.frames = script.frames;
    out.trajectory.assign(script.total_steps, EuclideanTransform::identity(cx, cy));
    return out;
  }

  const int f = script.render_factor;
  const FluxImage hires = f > 1 ? upsample_replicate(ground_truth, f, f) : ground_truth;
  const double total_flux_in = mean_value(ground_truth);
  const double cx = (ground_truth.width() - 1) / 2.0;
  const double cy = (ground_truth.height() - 1) / 2.0;
  const double hcx = (hires.width() - 1) / 2.0;
  const double hcy = (hires.height() - 1) / 2.0;

  Pcg32 rng(script.rng_seed, 0x5eedULL);
  double shake_x = 0.0, shake_y = 0.0;
  for (std::size_t step = 0; step < script.total_steps; ++step) {
    EuclideanTransform cum = EuclideanTransform::identity(cx, cy);
    switch (script.kind) {
      case MotionKind::kStatic:
        break;
      case MotionKind::kTranslation:
        cum.tx = script.step_dx * static_cast<double>(step);
        cum.ty = script.step_dy * static_cast<double>(step);
        break;
      case MotionKind::kRotation:
        cum.theta = script.step_degrees * static_cast<double>(step) * M_PI / 180.0;
        break;
      case MotionKind::kRandomShake:
        if (step > 0) {
          shake_x += static_cast<double>(rng.next_int(-script.shake_bound, script.shake_bound));
          shake_y += static_cast<double>(rng.next_int(-script.shake_bound, script.shake_bound));
        }
        cum.tx = shake_x;
        cum.ty = shake_y;
        break;
      case MotionKind::kFrameSequence:
        break;
    }

    FluxImage frame;
    if (cum.is_identity()) {
      frame = ground_truth;
    } else if (f > 1) {
      EuclideanTransform hi = cum;
      hi.rx = hcx;
      hi.ry = hcy;
      hi.tx *= f;
      hi.ty *= f;
      frame = box_downsample(warp_image(hires, hi, script.background_flux), f);
    } else {
      frame = warp_image(ground_truth, cum, script.background_flux);
    }
    if (total_flux_in > 0.0 && !(mean_value(frame) > 0.0))
      throw InputError("render_flux_sequence: motion pushed all content out of frame");
    out.frames.push_back(std::move(frame));
    out.trajectory.push_back(cum);
  }
  return out;
}

// ============================================================================
// Photon sampling
// ============================================================================

/// floor(t / bin_width), clamped so rounding can never alias a detection
/// onto the sentinel; t at or beyond the frame period is the sentinel.
inline uint16_t quantize_arrival(double t, const SensorConfig& config) {
  if (!(t < config.frame_period())) return static_cast<uint16_t>(config.bins_per_frame);
  auto bin = static_cast<uint32_t>(t / config.bin_width);
  if (bin >= config.bins_per_frame) bin = config.bins_per_frame - 1;
  return static_cast<uint16_t>(bin);
}

/// Draw one photon frame tensor from a flux sequence: for every pixel and
/// frame, the first-photon arrival is exponential with rate q * flux,
/// quantized by quantize_arrival. Each pixel consumes its own pcg32 stream
/// (stream id = pixel index) with the draw for frame k at stream position
/// 2k -- zero-flux frames advance the stream without drawing -- so any
/// parallel split over pixels reproduces the serial tensor bit for bit.
inline PhotonFrameTensor sample_photon_frames(const std::vector<FluxImage>& flux_sequence,
                                              std::size_t photons_per_step,
                                              const SensorConfig& config, uint64_t rng_seed,
                                              unsigned threads = 0) {
  if (flux_sequence.empty()) throw InputError("sample_photon_frames: empty flux sequence");
  if (photons_per_step < 1) throw InputError("sample_photon_frames: photons_per_step must be >= 1");
  config.validate();
  const int w = flux_sequence.front().width(), h = flux_sequence.front().height();
  for (const auto& img : flux_sequence) {
    if (img.width() != w || img.height() != h)
      throw InputError("sample_photon_frames: inconsistent frame sizes");
    for (double v : img.values())
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InputError("sample_photon_frames: flux must be nonnegative and finite");
  }

  const std::size_t n_frames = flux_sequence.size() * photons_per_step;
  PhotonFrameTensor tensor(w, h, n_frames, config);
  const std::size_t n_px = tensor.n_pixels();
  const uint16_t sentinel = tensor.sentinel();

  parallel_for(
      n_px,
      [&](std::size_t px) {
        Pcg32 rng(rng_seed, px);
        std::size_t frame = 0;
        for (const auto& img : flux_sequence) {
          const double rate = config.detection_efficiency * img[px];
          for (std::size_t k = 0; k < photons_per_step; ++k, ++frame) {
            uint16_t bin = sentinel;
            if (rate > 0.0) {
              bin = quantize_arrival(rng.next_exponential(rate), config);
            } else {
              rng.advance(2);
            }
            tensor.frame(frame)[px] = bin;
          }
        }
      },
      threads);
  return tensor;
}

inline PhotonFrameTensor sample_photon_frames(const FluxSequence& seq,
                                              std::size_t photons_per_step,
                                              const SensorConfig& config, uint64_t rng_seed,
                                              unsigned threads = 0) {
  return sample_photon_frames(seq.frames, photons_per_step, config, rng_seed, threads);
}

// ============================================================================
// Single-pixel pulse streams (contrast / speed studies)
// ============================================================================

struct PulseStream {
  std::vector<uint16_t> bins;       // one per frame
  std::size_t pulse_start = 0;      // first frame inside the pulse
  std::size_t pulse_width = 0;
  std::size_t true_changepoints = 2;  // a single pulse switches flux twice
};

/// One SPAD pixel observing base_flux with a pulse of
/// base_flux * contrast_ratio at a uniformly random position.
inline PulseStream pulse_pixel_stream(double base_flux, double contrast_ratio,
                                      std::size_t pulse_width_frames, const SensorConfig& config,
                                      uint64_t rng_seed, std::size_t n_frames = 800) {
  if (!(base_flux >= 0.0)) throw InputError("pulse_pixel_stream: base_flux must be >= 0");
  if (!(contrast_ratio > 0.0)) throw InputError("pulse_pixel_stream: contrast_ratio must be > 0");
  if (pulse_width_frames >= n_frames)
    throw InputError("pulse_pixel_stream: pulse must fit within the stream");
  config.validate();

  Pcg32 rng(rng_seed, 0x9d15eULL);
  PulseStream out;
  out.pulse_width = pulse_width_frames;
  out.pulse_start = static_cast<std::size_t>(
      rng.next_int(0, static_cast<int64_t>(n_frames - pulse_width_frames)));
  out.bins.resize(n_frames);
  const uint16_t sentinel = static_cast<uint16_t>(config.bins_per_frame);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const bool inside = f >= out.pulse_start && f < out.pulse_start + pulse_width_frames;
    const double rate = config.detection_efficiency * base_flux * (inside ? contrast_ratio : 1.0);
    out.bins[f] = rate > 0.0 ? quantize_arrival(rng.next_exponential(rate), config) : sentinel;
  }
  return out;
}

}  // namespace cpv
