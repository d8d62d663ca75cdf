#pragma once

#include "appear/recording.hpp"

#include <optional>
#include <string>
#include <vector>

namespace appear {

/// Standard 10-10 position for `label` projected onto the unit head disc.
///
/// The projection is azimuthal equidistant with the 10-20 equator ring
/// (Fpz, T7, Oz, ...) on the unit circle. Electrodes below the equator
/// (TP9, FT10, ...) are clamped onto the circle.
std::optional<Position> standard_position(const std::string& label);

bool is_ecg_label(const std::string& label);

/// The 31 scalp channels of a 32-channel MR cap whose 32nd lead is ECG.
const std::vector<std::string>& default_scalp_labels();

/// Channel descriptors for `labels`. ECG labels get is_ecg; any other label
/// missing from the standard table raises FormatError.
std::vector<ChannelInfo> make_channels(const std::vector<std::string>& labels);

} // namespace appear
