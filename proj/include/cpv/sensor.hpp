#pragma once
#include <cstdint>
#include <string>

#include "cpv/errors.hpp"

namespace cpv {

/// Frame-readout sensor geometry in time: a photon frame is divided into
/// bins_per_frame bins of bin_width seconds; the frame period is their
/// product, exactly. detection_efficiency is the probability that an
/// incident photon triggers a detection.
struct SensorConfig {
  uint32_t bins_per_frame = 8000;
  double bin_width = 256e-12;
  double detection_efficiency = 1.0;

  double frame_period() const { return bins_per_frame * bin_width; }

  void validate() const {
    if (bins_per_frame < 1) throw InputError("SensorConfig: bins_per_frame must be >= 1");
    if (!(bin_width > 0.0)) throw InputError("SensorConfig: bin_width must be > 0");
    if (!(detection_efficiency > 0.0) || detection_efficiency > 1.0)
      throw InputError("SensorConfig: detection_efficiency must be in (0, 1]");
    // The binary tensor format stores bin indices as u16 with the sentinel
    // equal to bins_per_frame, so that value must itself fit in 16 bits.
    if (bins_per_frame > 65534)
      throw InputError("SensorConfig: bins_per_frame above 65534 is unsupported");
  }
};

inline bool operator==(const SensorConfig& a, const SensorConfig& b) {
  return a.bins_per_frame == b.bins_per_frame && a.bin_width == b.bin_width &&
         a.detection_efficiency == b.detection_efficiency;
}

}  // namespace cpv
